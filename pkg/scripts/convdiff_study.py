"""Two-grid B-norms for 1D convection-diffusion over a range of Peclet numbers.

B = A^H A and a damped Jacobi smoother; reports the smoothing norm, the hat
prediction and the measured hat and sharp error norms per (beta, scheme).

    python3 scripts/convdiff_study.py --n 16 --nc 4
"""

import argparse

from btwogrid.errors import BTwoGridError
from btwogrid.harness import ProblemSpec, load_problem
from btwogrid.bspace import b_mat_norm
from btwogrid.smoother import build_smoother_bundle
from btwogrid.twogrid import e_plus, optimal_transfers_hat, optimal_transfers_sharp


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--nc", type=int, default=4)
    ap.add_argument("--betas", type=float, nargs="+", default=[0.0, 1.0, 10.0, 50.0, 200.0])
    args = ap.parse_args()
    print(f"{'scheme':>7} {'beta':>7} {'omega':>7} {'||I-K||_B':>10} {'hat pred':>10} {'hat meas':>10} {'sharp':>10}")
    for scheme in ("central", "upwind"):
        for beta in args.betas:
            spec = ProblemSpec(
                source={"conv-diff": {"n": args.n, "beta": beta, "scheme": scheme}},
                n_c=args.nc, smoother="jacobi",
            )
            prob = load_problem(spec)
            cfg = prob.cfg
            s_norm = build_smoother_bundle(cfg.A, cfg.M_inv, cfg.B, cfg.tol).smoothing_norm
            try:
                hat = optimal_transfers_hat(cfg)
                pred = f"{hat.predicted_norm:10.4f}"
                meas = f"{b_mat_norm(e_plus(cfg, hat.pair), cfg.B):10.4f}"
            except BTwoGridError as exc:
                pred, meas = f"{type(exc).__name__[:10]:>10}", f"{'-':>10}"
            try:
                sharp = f"{optimal_transfers_sharp(cfg).measured_norm:10.4f}"
            except BTwoGridError as exc:
                sharp = f"{type(exc).__name__[:10]:>10}"
            print(f"{scheme:>7} {beta:7.1f} {prob.omega:7.4f} {s_norm:10.4f} {pred} {meas} {sharp}")


if __name__ == "__main__":
    main()
