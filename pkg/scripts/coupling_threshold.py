"""Smallness verdicts for a e^{i pi/8}/(1+|x'|^2) as the amplitude a grows (n = 3)."""

import argparse

import numpy as np

from robinlap.boundary import sample_alpha
from robinlap.grid import build_grid
from robinlap.hypotheses import check_thm12_hypotheses


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--half-width", type=float, default=8.0)
    parser.add_argument("--spacing", type=float, default=0.25)
    parser.add_argument("--c-star", type=float, default=1.0)
    args = parser.parse_args()
    g = build_grid(3, args.half_width, args.spacing, boundary_only=True)
    unit = sample_alpha("exp(I*pi/8)/(1+r^2)", g)
    base = check_thm12_hypotheses(unit, g, C_star=args.c_star)
    print("b1 =", base.constants_used["b1"], " b2 =", base.constants_used["b2"])
    print("admissible amplitude below", 1 / base.smallness_value)
    for a in np.linspace(0.1, 2 / base.smallness_value, 8):
        rep = check_thm12_hypotheses(unit.scaled(a), g, C_star=args.c_star)
        print(f"a={a:.4f}  smallness {rep.smallness_value:.4f}  {rep.verdict}")


if __name__ == "__main__":
    main()
