import json

import pytest
from click.testing import CliRunner
from hypothesis import given, strategies as st

from skewball import cli


def invoke(*args):
    return CliRunner().invoke(cli.main, list(args))


def test_defaults_fill_in():
    cfg = cli.validate({"command": "enumerate"})
    assert cfg.pair == "SL2C_SL2R"
    assert cfg.seed == cli.ex.DEFAULT_SEED
    assert cfg.params == {"T": 4.0}


def test_T_above_cost_guard_is_rejected():
    with pytest.raises(cli.ConfigError, match="params.T"):
        cli.validate({"command": "enumerate", "params": {"T": 99}})
    with pytest.raises(cli.ConfigError, match=r"params.T_grid\[1\]"):
        cli.validate({"command": "count", "params": {"T_grid": [2, 99]}})


@pytest.mark.parametrize(
    "raw,where",
    [
        ({"command": "enumerate", "bogus": 1}, "bogus"),
        ({"command": "enumerate", "params": {"foo": 1}}, "params.foo"),
        ({"command": "nope"}, "command"),
        ({}, "command"),
        ({"command": "roots", "pair": "SO3"}, "pair"),
        ({"command": "count", "pair": "SL3R_SO21"}, "pair"),
        ({"command": "roots", "params": {"which": "X"}}, "params.which"),
        ({"command": "decompose", "params": {"samples": 0}}, "params.samples"),
        ({"command": "decompose", "params": {"samples": 1.5}}, "params.samples"),
        ({"command": "roots", "seed": "x"}, "seed"),
        ({"command": "roots", "threads": -1}, "threads"),
    ],
)
def test_invalid_configs_name_the_key(raw, where):
    with pytest.raises(cli.ConfigError) as err:
        cli.validate(raw)
    assert str(err.value).startswith(where)


def test_invalid_json_text():
    with pytest.raises(cli.ConfigError):
        cli.parse_config("{not json")


@given(
    command=st.sampled_from(cli.COMMANDS),
    seed=st.integers(0, 2**31),
    threads=st.integers(0, 8),
)
def test_config_round_trip(command, seed, threads):
    cfg = cli.validate({"command": command, "seed": seed, "threads": threads})
    again = cli.parse_config(cli.print_config(cfg))
    assert again == cfg
    assert again.config_hash() == cfg.config_hash()


def test_hash_ignores_output_location_only():
    a = cli.validate({"command": "enumerate", "out_dir": "a", "threads": 1})
    b = cli.validate({"command": "enumerate", "out_dir": "b", "threads": 4})
    c = cli.validate({"command": "enumerate", "seed": 1})
    assert a.config_hash() == b.config_hash() != c.config_hash()


def test_fmt_round_trips_floats():
    x = 0.1 + 0.2
    assert float(cli.fmt(x)) == x
    assert cli.fmt(True) == "true" and cli.fmt(3) == "3"


def test_enumerate_artifacts_are_byte_identical(tmp_path):
    outs = []
    for name in ("a", "b"):
        res = invoke("enumerate", "--T", "3", "--out-dir", str(tmp_path / name))
        assert res.exit_code == 0, res.output
        outs.append((tmp_path / name / "enumerate.csv").read_bytes())
    assert outs[0] == outs[1]
    lines = outs[0].decode().splitlines()
    assert lines[0].startswith("# config_hash=") and "seed=" in lines[0]
    summary = json.loads((tmp_path / "a" / "enumerate_summary.json").read_text())
    assert summary["flagged"] is False and "config_hash" in summary


def test_config_file_and_flag_override(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"command": "enumerate", "params": {"T": 2.0}, "seed": 5}))
    res = invoke("enumerate", "--config", str(path), "--T", "3", "--print-config")
    assert res.exit_code == 0
    cfg = cli.parse_config(res.output)
    assert cfg.params["T"] == 3.0 and cfg.seed == 5


def test_roots_reports_delta(tmp_path):
    res = invoke("roots", "--out-dir", str(tmp_path))
    assert res.exit_code == 0
    summary = json.loads((tmp_path / "roots_summary.json").read_text())
    assert summary["H"]["delta_2rho"] == pytest.approx(0.5, abs=1e-9)


def test_flagged_run_exits_two(tmp_path):
    res = invoke("equidist", "--kind", "k", "--t_grid", "[2]", "--base", "periodic", "--out-dir", str(tmp_path))
    assert res.exit_code == 2
    assert (tmp_path / "equidist.csv").exists()


def test_config_error_exits_one(tmp_path):
    res = invoke("enumerate", "--T", "99", "--out-dir", str(tmp_path))
    assert res.exit_code == 1
    assert "T_max" in res.output
    assert not (tmp_path / "enumerate.csv").exists()


def test_runtime_error_exits_one(tmp_path):
    res = invoke("decompose", "--matrix", "[[1, 2], [3, 4]]", "--out-dir", str(tmp_path))
    assert res.exit_code == 1


def test_help_lists_every_command():
    res = invoke("--help")
    assert res.exit_code == 0
    for name in cli.COMMANDS:
        assert name in res.output
    sub = invoke("duality", "--help")
    assert "--T_grid" in sub.output and "--print-config" in sub.output
