"""Skew-ball volumes against the main term C[g1, g2] e^{T/2} for SL2(C) > SL2(R).

    python3 scripts/run_volume.py --pairs 5 --T 15 20 25 30
"""

import argparse
import math

import numpy as np

from skewball import liegroup as lg
from skewball import symspace as ss
from skewball import volume as vol


def random_small(pair, rng, radius):
    while True:
        g = lg.random_element(pair, rng, scale=0.4)
        if ss.dist_o(pair, g) <= radius:
            return g


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=5, help="random (g1, g2) pairs besides (e, e)")
    ap.add_argument("--radius", type=float, default=1.0, help="max d(o, g o) for the random pairs")
    ap.add_argument("--T", type=float, nargs="+", default=[15.0, 20.0, 25.0, 30.0])
    ap.add_argument("--seed", type=int, default=55)
    args = ap.parse_args()

    pair = lg.get_pair(lg.PairId.SL2C_SL2R)
    rng = np.random.default_rng(args.seed)
    e = pair.identity()
    cases = [("e,e", e, e)] + [
        (f"rand{i}", random_small(pair, rng, args.radius), random_small(pair, rng, args.radius))
        for i in range(args.pairs)
    ]
    print("case,T,numeric,main_term,ratio,alpha_numeric,alpha")
    for name, g1, g2 in cases:
        alpha = vol.volume_ratio_alpha(pair, g1, np.linalg.inv(g2))
        for T in args.T:
            spec = vol.SkewBallSpec(g1, g2, T)
            numeric = vol.skew_ball_volume_numeric(pair, spec).value
            main_term = vol.skew_ball_volume_asymptotic(pair, spec)
            a_num = numeric / vol.ball_volume_closed(pair, T)
            print(f"{name},{T:g},{numeric:.10e},{main_term:.10e},{numeric / main_term:.8f},{a_num:.8f},{alpha:.8f}")
    limit = vol.skew_ball_volume_numeric(pair, vol.SkewBallSpec(e, e, 30.0)).value * math.exp(-15.0)
    print(f"# mu_H(H_30) e^-15 / pi^2 = {limit / math.pi**2:.6f}")


if __name__ == "__main__":
    main()
