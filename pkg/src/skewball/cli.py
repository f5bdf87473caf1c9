"""Command line front end: JSON run configs, CSV/JSON artifacts, exit codes.

Exit status is 0 on success, 2 when a run completed but flagged its result
(Monte Carlo tolerance, non-generic base point, failed stabilisation) and 1 on
error.  Every artifact carries the config hash and seed.
"""

from __future__ import annotations

import copy
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np

from . import asymptotics as asy
from . import experiments as ex
from . import lattice as lat
from . import liegroup as lg
from . import symspace as ss
from . import volume as vol

COMMANDS = ("roots", "decompose", "volume", "expand", "enumerate", "count", "gavg", "duality", "equidist", "probes")

# per-command parameters and their defaults; the default fixes the accepted type
PARAM_DEFAULTS: dict[str, dict] = {
    "roots": {"which": "both"},
    "decompose": {"matrix": None, "samples": 1000},
    "volume": {"g1": None, "g2": None, "T_grid": [20.0, 25.0, 30.0]},
    "expand": {"r": 2, "delta": 0.5, "n": 3, "T_grid": [10.0, 20.0, 40.0]},
    "enumerate": {"T": 4.0},
    "count": {"T_grid": [2.0, 4.0, 6.0, 8.0, 10.0, 12.0]},
    "gavg": {"T_grid": [8.0, 10.0, 12.0], "base": "generic", "samples": ex.DEFAULT_SAMPLES, "rel_tol": 0.03},
    "duality": {"T_grid": [8.0, 10.0, 12.0], "base": "generic", "samples": ex.DEFAULT_SAMPLES, "rel_tol": 0.03},
    "equidist": {"kind": "both", "t_grid": [2.0, 4.0, 6.0, 8.0], "base": "generic", "tolerance": 0.2},
    "probes": {"t_min": 5.0, "t_max": 40.0},
}
HELP = {
    "roots": "Restricted root data of G and H for the chosen pair.",
    "decompose": "Cartan and Iwasawa round trips on one matrix or on random samples.",
    "volume": "Numeric skew-ball volumes against the main term C[g1, g2] e^{delta T}.",
    "expand": "Exponential ball integral: quadrature against the truncated expansion.",
    "enumerate": "List the lattice ball of SL2(Z[i]) of radius T.",
    "count": "Lattice ball sizes and the fitted growth exponent.",
    "gavg": "Monte Carlo integral of the circle bump over G-balls.",
    "duality": "Orbit sum over the lattice ball divided by the G-ball integral.",
    "equidist": "K_H- and U_H-orbit averages of the automorphised bump.",
    "probes": "Busemann-function defect along a flat, with rate or t*defect summary.",
}
CHOICES = {
    "which": ("G", "H", "both"),
    "base": ("generic", "periodic"),
    "kind": ("k", "u", "both"),
}
TOP_KEYS = ("command", "pair", "seed", "threads", "out_dir", "params")
SL2C_ONLY = {"count", "gavg", "duality", "equidist", "enumerate"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    pair: str = lg.PairId.SL2C_SL2R.value
    seed: int = ex.DEFAULT_SEED
    threads: int = 0  # 0: all cores
    out_dir: str = "."
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {k: copy.deepcopy(getattr(self, k)) for k in TOP_KEYS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def config_hash(self) -> str:
        # output location and thread count do not change results
        semantic = {k: v for k, v in self.to_dict().items() if k not in ("out_dir", "threads")}
        canon = json.dumps(semantic, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _check_type(path: str, value, default):
    if default is None:
        return value
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif isinstance(default, str):
        ok = isinstance(value, str)
    elif isinstance(default, list):
        ok = isinstance(value, list) and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)
        value = [float(x) for x in value] if ok else value
    else:
        ok = True
    if not ok:
        raise ConfigError(f"{path}: expected {type(default).__name__}, got {value!r}")
    return value


def _check_T(path: str, T: float):
    if not 0 < T <= lat.T_MAX:
        raise ConfigError(f"{path}: T = {T} outside (0, T_max = {lat.T_MAX}]")


def validate(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - set(TOP_KEYS)
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown key")
    if "command" not in raw:
        raise ConfigError("command: required")
    cmd = raw["command"]
    if cmd not in COMMANDS:
        raise ConfigError(f"command: {cmd!r} not one of {', '.join(COMMANDS)}")
    pair = raw.get("pair", lg.PairId.SL2C_SL2R.value)
    if pair not in {p.value for p in lg.PairId}:
        raise ConfigError(f"pair: unknown pair {pair!r}")
    if cmd in SL2C_ONLY and pair != lg.PairId.SL2C_SL2R.value:
        raise ConfigError(f"pair: command {cmd} supports SL2C_SL2R only")
    seed = _check_type("seed", raw.get("seed", ex.DEFAULT_SEED), 0)
    threads = _check_type("threads", raw.get("threads", 0), 0)
    if threads < 0:
        raise ConfigError("threads: must be >= 0")
    out_dir = _check_type("out_dir", raw.get("out_dir", "."), "")
    given = raw.get("params", {})
    if not isinstance(given, dict):
        raise ConfigError("params: expected an object")
    defaults = PARAM_DEFAULTS[cmd]
    params = {}
    for key, default in defaults.items():
        path = f"params.{key}"
        value = _check_type(path, given.get(key, copy.deepcopy(default)), default)
        if key in CHOICES and value not in CHOICES[key]:
            raise ConfigError(f"{path}: {value!r} not one of {CHOICES[key]}")
        params[key] = value
    for key in given:
        if key not in defaults:
            raise ConfigError(f"params.{key}: unknown key for command {cmd}")
    if cmd in {"enumerate"}:
        _check_T("params.T", params["T"])
    for key in ("T_grid",):
        if key in params and cmd in SL2C_ONLY:
            for i, T in enumerate(params[key]):
                _check_T(f"params.{key}[{i}]", T)
    for key in ("samples",):
        if key in params and params[key] < 1:
            raise ConfigError(f"params.{key}: must be positive")
    return RunConfig(cmd, pair, seed, threads, out_dir, params)


def parse_config(text: str) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid JSON: {err}") from err
    return validate(raw)


def print_config(cfg: RunConfig) -> str:
    return cfg.to_json()


# --------------------------------------------------------------------------
# Artifacts


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    return str(x)


def csv_text(cfg: RunConfig, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={cfg.config_hash()} seed={cfg.seed} command={cfg.command} pair={cfg.pair}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(x) for x in row) + "\n")
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


@dataclass
class RunResult:
    columns: tuple[str, ...] = ()
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    flagged: bool = False


def _matrix_from_json(pair: lg.GroupPair, data) -> np.ndarray:
    """Matrices as nested lists of [re, im] entry pairs (plain numbers allowed for real entries)."""
    arr = np.array([[complex(*e) if isinstance(e, list) else complex(e) for e in row] for row in data])
    if arr.shape != (pair.n, pair.n):
        raise ConfigError(f"matrix has shape {arr.shape}, expected {(pair.n, pair.n)}")
    lg.check_group_element(pair, arr.astype(pair.dtype), tol=1e-8)
    return arr.astype(pair.dtype)


def _base_circle(name: str) -> ex.CircleW:
    return ex.generic_base_circle() if name == "generic" else ex.periodic_base_circle()


def _run_roots(cfg, pair, p) -> RunResult:
    which = ("G", "H") if p["which"] == "both" else (p["which"],)
    return RunResult(summary={w: lg.compute_root_datum(pair, w).to_json() for w in which})


def _run_decompose(cfg, pair, p) -> RunResult:
    rng = np.random.default_rng(cfg.seed)
    mats = [_matrix_from_json(pair, p["matrix"])] if p["matrix"] is not None else [
        lg.random_element(pair, rng, 1.0) for _ in range(p["samples"])
    ]
    rows = []
    for i, g in enumerate(mats):
        c = ss.cartan_decompose(pair, g)
        w = ss.iwasawa_decompose(pair, g)
        rows.append((i, *c.v, c.residual, *w.v, w.residual))
    r = pair.rank_G
    cols = ("index", *[f"cartan_v{j}" for j in range(r)], "cartan_residual",
            *[f"iwasawa_v{j}" for j in range(r)], "iwasawa_residual")
    worst = max(max(row[r + 1], row[-1]) for row in rows)
    return RunResult(cols, rows, {"max_residual": worst}, flagged=worst > 1e-9)


def _run_volume(cfg, pair, p) -> RunResult:
    g1 = pair.identity() if p["g1"] is None else _matrix_from_json(pair, p["g1"])
    g2 = pair.identity() if p["g2"] is None else _matrix_from_json(pair, p["g2"])
    delta = lg.compute_root_datum(pair, "H").delta_2rho
    C = vol.skewball_main_constant(pair, g1, g2)
    rows, flagged = [], False
    for T in p["T_grid"]:
        spec = vol.SkewBallSpec(g1, g2, T)
        res = vol.skew_ball_volume_numeric(pair, spec)
        flagged |= res.flagged
        normalised = res.value * math.exp(-delta * T)
        rows.append((T, res.value, normalised, C, normalised / C))
    return RunResult(("T", "volume", "normalised", "main_constant", "ratio"), rows,
                     {"main_constant": C, "delta_2rho_H": delta}, flagged)


def _run_expand(cfg, pair, p) -> RunResult:
    spec = asy.ExpansionSpec(p["r"], p["delta"], p["n"])
    rows = []
    for T in p["T_grid"]:
        closed = asy.log_ball_exp_integral_closed(spec, T)
        quad = asy.log_ball_exp_integral_quad(spec, T)
        rows.append((T, closed, quad, math.expm1(quad - closed)))
    return RunResult(("T", "log_closed", "log_quadrature", "rel_error"), rows)


def _run_enumerate(cfg, pair, p) -> RunResult:
    ball = lat.enumerate_ball(p["T"])
    cols = ("a_re", "a_im", "b_re", "b_im", "c_re", "c_im", "d_re", "d_im", "disp")
    rows = [(*e, d) for e, d in zip(ball.entries.tolist(), ball.disp.tolist())]
    return RunResult(cols, rows, {"count": len(ball)}, flagged=bool(ball.near_boundary().any()))


def _run_count(cfg, pair, p) -> RunResult:
    Ts = p["T_grid"]
    counts = [len(lat.lattice_ball(T)) for T in Ts]
    rows = [(T, n, n / ex.g_ball_mass(T)) for T, n in zip(Ts, counts)]
    tail = slice(-3, None) if len(Ts) >= 3 else slice(None)
    summary = {
        "growth_exponent": lat.growth_exponent(Ts[tail], counts[tail]) if len(Ts) >= 2 else None,
        "inverse_covolume_fit": rows[-1][2],
        "inverse_covolume_classical": ex.classical_inverse_covolume(),
    }
    return RunResult(("T", "count", "count_over_mass"), rows, summary)


def _mc(cfg, p) -> ex.MCConfig:
    return ex.MCConfig(samples=p["samples"], seed=cfg.seed, rel_tol=p["rel_tol"])


def _run_gavg(cfg, pair, p) -> RunResult:
    y0 = _base_circle(p["base"])
    bump = ex.default_bump()
    table = ex.limiting_density_check(p["T_grid"], y0, bump, _mc(cfg, p))
    return RunResult(table.columns, table.rows, {"D_psi": bump.D_psi}, table.flagged)


def _run_duality(cfg, pair, p) -> RunResult:
    y0 = _base_circle(p["base"])
    table = ex.duality_ratio_scan(p["T_grid"], y0, ex.default_bump(), _mc(cfg, p))
    summary = dict(table.summary)
    summary["notes"] = table.notes
    if "last_ratio_change" in summary:
        summary["pass_flags"] = {"ratio_stable": summary["last_ratio_change"] <= 0.10}
    return RunResult(table.columns, table.rows, summary, table.flagged)


def _run_equidist(cfg, pair, p) -> RunResult:
    x0 = ex.generic_orbit_base() if p["base"] == "generic" else ex.periodic_orbit_base()
    gbump = ex.default_gbump()
    kinds = ("k", "u") if p["kind"] == "both" else (p["kind"],)
    inv_cov = ex.fitted_inverse_covolume()
    rows, summary, flagged = [], {"inverse_covolume_fit": inv_cov, "pass_flags": {}}, False
    for kind in kinds:
        scan = ex.orbit_scan(kind, x0, p["t_grid"], gbump, inv_cov, tolerance=p["tolerance"])
        for t, v in zip(scan.t, scan.values):
            rows.append((kind, t, v, v / scan.constant))
        summary[f"{kind}_window_deviation"] = scan.window_deviation
        summary["space_constant"] = scan.constant
        summary["pass_flags"][kind] = not scan.flagged
        flagged |= scan.flagged
    return RunResult(("kind", "t", "average", "ratio_to_space_constant"), rows, summary, flagged)


def last_decade_variation(t: np.ndarray, scaled: np.ndarray) -> float:
    """(max - min) / mean of t * defect over the last decade of t."""
    tail = scaled[t >= t[-1] / 10]
    return float((tail.max() - tail.min()) / tail.mean())


def _run_probes(cfg, pair, p) -> RunResult:
    eta = lg.compute_root_datum(pair, "G").eta1
    if pair.rank_G == 1:
        tab = ss.generic_rate_probe(pair, seed=cfg.seed, t_grid=np.arange(p["t_min"], p["t_max"] + 0.5))
        summary = {"fitted_rate": tab.slope, "eta1": eta,
                   "pass_flags": {"rate_within_10pct": abs(tab.slope + eta) <= 0.1 * eta}}
        return RunResult(("t", "defect"), list(zip(tab.t, tab.value)), summary)
    # higher rank: the orthogonal part of the Busemann vector leaves a 1/t defect
    t_grid = np.geomspace(p["t_min"], 25 * p["t_max"], 30)
    if pair.id is lg.PairId.SL3R_SO21:
        tab = ss.wall_flat_probe(pair, t_grid)
    else:
        tab = ss.generic_rate_probe(pair, seed=cfg.seed, t_grid=t_grid)
    scaled = tab.t * tab.value
    var = last_decade_variation(tab.t, scaled)
    summary = {"t_defect_last": scaled[-1], "last_decade_variation": var,
               "pass_flags": {"t_defect_stable": var <= 0.2}}
    return RunResult(("t", "defect", "t_times_defect"), list(zip(tab.t, tab.value, scaled)), summary)


RUNNERS = {
    "roots": _run_roots, "decompose": _run_decompose, "volume": _run_volume, "expand": _run_expand,
    "enumerate": _run_enumerate, "count": _run_count, "gavg": _run_gavg, "duality": _run_duality,
    "equidist": _run_equidist, "probes": _run_probes,
}


def run(cfg: RunConfig) -> tuple[int, list[Path]]:
    """Execute a validated config; returns (exit status, written paths)."""
    if cfg.threads:
        import numba

        numba.set_num_threads(min(cfg.threads, numba.config.NUMBA_NUM_THREADS))
    pair = lg.get_pair(cfg.pair)
    result = RUNNERS[cfg.command](cfg, pair, cfg.params)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if result.columns:
        path = out / f"{cfg.command}.csv"
        path.write_text(csv_text(cfg, result.columns, result.rows))
        written.append(path)
    summary = {
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "flagged": result.flagged,
        **result.summary,
    }
    path = out / f"{cfg.command}_summary.json"
    path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    written.append(path)
    return (2 if result.flagged else 0), written


# --------------------------------------------------------------------------
# click front end


def _build_command(name: str) -> click.Command:
    defaults = PARAM_DEFAULTS[name]

    def callback(config, pair, seed, threads, out_dir, print_config_flag, **overrides):
        try:
            raw = json.loads(Path(config).read_text()) if config else {}
            if not isinstance(raw, dict):
                raise ConfigError("config must be a JSON object")
            raw["command"] = name
            if pair is not None:
                raw["pair"] = pair
            if seed is not None:
                raw["seed"] = seed
            if threads is not None:
                raw["threads"] = threads
            if out_dir is not None:
                raw["out_dir"] = out_dir
            params = dict(raw.get("params", {}))
            for key, text in overrides.items():
                if text is not None:
                    try:
                        params[key] = json.loads(text)
                    except json.JSONDecodeError:
                        params[key] = text
            raw["params"] = params
            cfg = validate(raw)
        except (ConfigError, OSError, json.JSONDecodeError) as err:
            click.echo(f"config error: {err}", err=True)
            sys.exit(1)
        if print_config_flag:
            click.echo(print_config(cfg))
            return
        try:
            status, written = run(cfg)
        except Exception as err:  # noqa: BLE001 - report and exit 1
            click.echo(f"error: {type(err).__name__}: {err}", err=True)
            sys.exit(1)
        for path in written:
            click.echo(str(path))
        sys.exit(status)

    params = [
        click.Option(["--config"], type=click.Path(exists=True, dir_okay=False), default=None,
                     help="JSON run config; flags override its values."),
        click.Option(["--pair"], type=click.Choice([p.value for p in lg.PairId]), default=None,
                     help="Group pair (default SL2C_SL2R)."),
        click.Option(["--seed"], type=int, default=None, help=f"RNG seed (default {ex.DEFAULT_SEED})."),
        click.Option(["--threads"], type=int, default=None, help="Worker threads, 0 for all cores (default 0)."),
        click.Option(["--out-dir", "out_dir"], default=None, help="Output directory (default '.')."),
        click.Option(["--print-config", "print_config_flag"], is_flag=True, default=False,
                     help="Print the fully defaulted config and exit."),
    ]
    for key, default in defaults.items():
        params.append(click.Option(
            [f"--{key}", key], default=None, metavar="JSON",
            help=f"JSON value (default {json.dumps(default)}).",
        ))
    return click.Command(name, callback=callback, params=params, help=HELP[name])


@click.group(help="Skew-ball volumes, lattice counting and orbit equidistribution experiments.")
def main():
    pass


for _name in COMMANDS:
    main.add_command(_build_command(_name))


if __name__ == "__main__":
    main()
