"""Lattice ball sizes |Gamma_T| for SL2(Z[i]) and the fitted growth exponent.

    python3 scripts/run_counts.py --T 2 4 6 8 10 12
"""

import argparse
import time

from skewball import experiments as ex
from skewball import lattice as la


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=float, nargs="+", default=[2.0, 4.0, 6.0, 8.0, 10.0, 12.0])
    args = ap.parse_args()

    counts = []
    print("T,count,count_over_G_ball_mass,seconds")
    for T in args.T:
        t0 = time.perf_counter()
        n = len(la.enumerate_ball(T))
        counts.append(n)
        print(f"{T:g},{n},{n / ex.g_ball_mass(T):.6e},{time.perf_counter() - t0:.2f}")
    if len(args.T) >= 3:
        print(f"# growth exponent (last 3): {la.growth_exponent(args.T[-3:], counts[-3:]):.4f}")
    print(f"# classical inverse covolume: {ex.classical_inverse_covolume():.6e}")


if __name__ == "__main__":
    main()
