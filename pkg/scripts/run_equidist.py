"""K_H- and U_H-orbit averages of the automorphised bump, divided by the space constant.

The ensemble mode repeats the U_H scan over random base points, which shows how
widely single-orbit averages scatter at a given t.

    python3 scripts/run_equidist.py --t 2 4 6 8
    python3 scripts/run_equidist.py --ensemble 12 --t 6 8 10
"""

import argparse

import numpy as np

from skewball import experiments as ex
from skewball import liegroup as lg


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t", type=float, nargs="+", default=[2.0, 4.0, 6.0, 8.0])
    ap.add_argument("--ensemble", type=int, default=0, help="number of random base points for the U_H scan")
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()

    gbump = ex.default_gbump()
    auto = ex.Automorphizer(gbump)
    const = ex.space_integral(gbump) * ex.fitted_inverse_covolume()
    print(f"# space constant {const:.6e}")

    if args.ensemble:
        pair = lg.get_pair(lg.PairId.SL2C_SL2R)
        rng = np.random.default_rng(args.seed)
        bases = [lg.random_element(pair, rng, 0.8) for _ in range(args.ensemble)]
        print("t,mean_ratio,sd_ratio")
        for t in args.t:
            r = np.array([ex.u_orbit_average(x0, t, gbump, auto=auto) / const for x0 in bases])
            print(f"{t:g},{r.mean():.4f},{r.std(ddof=1):.4f}")
        return

    print("kind,base,t,average,ratio")
    for name, x0 in (("generic", ex.generic_orbit_base()), ("periodic", ex.periodic_orbit_base())):
        for kind, fn in (("k", ex.k_orbit_average), ("u", ex.u_orbit_average)):
            for t in args.t:
                avg = fn(x0, t, gbump, auto=auto)
                print(f"{kind},{name},{t:g},{avg:.6e},{avg / const:.4f}")


if __name__ == "__main__":
    main()
