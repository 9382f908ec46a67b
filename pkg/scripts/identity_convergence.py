"""Residuals and observed orders of the multiplier identities on manufactured data."""

import argparse

from robinlap.boundary import sample_alpha
from robinlap.grid import build_grid
from robinlap.multipliers import (Profile, append_ledger, identity_residuals,
                                  manufactured_problem, with_order_estimates)


def family(dim):
    if dim == 1:
        return 12.0, 0.02, Profile((0.8,), wavevector=(0.7,), normal_poly=(1.0, 0.5)), -0.5 + 0.3j
    return 8.0, 0.1, Profile((2.5, 0.8), wavevector=(0.7, 0.3)), "(1+0.5*I)/(1+x1^2)"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dim", type=int, choices=(1, 2), default=2)
    parser.add_argument("--levels", type=int, default=3)
    parser.add_argument("--ledger", help="append rows to this CSV")
    args = parser.parse_args()
    L, h, profile, alpha = family(args.dim)
    previous, rows = None, []
    for level in range(args.levels):
        g = build_grid(args.dim, L, h / 2 ** level)
        reports = identity_residuals(manufactured_problem(profile, 2 + 1j,
                                                          sample_alpha(alpha, g), g))
        if previous:
            with_order_estimates(previous, reports)
        for r in reports:
            order = "" if r.order_estimate is None else f"{r.order_estimate:.3f}"
            print(f"h={g.spacing:<8g} {r.identity_id:<4} residual {r.residual:.3e}  order {order}")
        rows += reports
        previous = reports
    if args.ledger:
        append_ledger(rows, args.ledger)


if __name__ == "__main__":
    main()
