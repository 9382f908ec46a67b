"""Lowest eigenpair of the half-line Robin Laplacian with a constant attractive coupling."""

import argparse

from robinlap.boundary import sample_alpha
from robinlap.grid import build_grid
from robinlap.operator import assemble
from robinlap.spectral import classify, eig_selfadjoint


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--coupling", type=float, default=-1.0)
    parser.add_argument("--half-width", type=float, default=20.0)
    parser.add_argument("--spacing", type=float, default=0.005)
    args = parser.parse_args()
    g = build_grid(1, args.half_width, args.spacing)
    op = assemble(g, sample_alpha(args.coupling, g))
    spec = classify(eig_selfadjoint(op, 3, -args.coupling ** 2))
    expected = -args.coupling ** 2 if args.coupling < 0 else None
    for p in spec.pairs:
        print(f"{p.value.real:+.8f}  residual {p.residual:.1e}  {','.join(p.tags)}")
    if expected is not None:
        print(f"closed form for the bound state: {expected:+.8f}")


if __name__ == "__main__":
    main()
