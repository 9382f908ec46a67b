"""Free Laplacian control: resolvent norm proxy against the inverse distance to [0, inf)."""

import argparse
from pathlib import Path

import numpy as np

from robinlap.boundary import sample_alpha
from robinlap.bumps import random_bumps
from robinlap.grid import build_grid
from robinlap.operator import assemble
from robinlap.resolvent import sweep


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--half-width", type=float, default=10.0)
    parser.add_argument("--spacing", type=float, default=0.1)
    parser.add_argument("--sources", type=int, default=20)
    parser.add_argument("--out", default="out/resolvent_control")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    g = build_grid(2, args.half_width, args.spacing)
    lams = [complex(re, s * im) for re in np.linspace(-3, 3, 7) for im in (0.5, 1.25, 2.0)
            for s in (1, -1)]
    result = sweep(assemble(g, sample_alpha(0, g)), lams, random_bumps(g, args.sources),
                   operator_norms=True, condition=False)
    for n in result.norms:
        lam = n["lambda"]
        print(f"{lam.real:+.2f}{lam.imag:+.2f}i  norm {n['operator_norm']:.4f}  "
              f"1/dist {n['inverse_distance']:.4f}")
    print("max relative deviation", result.summary["max_norm_vs_distance_rel_error"])
    result.to_csv(out / "sweep.csv")
    result.to_svg(out / "sweep.svg")


if __name__ == "__main__":
    main()
