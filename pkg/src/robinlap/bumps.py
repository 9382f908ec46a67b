"""Seeded families of smooth Gaussian bumps on a grid."""

from __future__ import annotations

import numpy as np

from .grid import Grid


def random_bumps(grid: Grid, count: int, seed: int = 0, *, width=(0.4, 1.5),
                 reach: float = 0.5, complex_valued: bool = True) -> list[np.ndarray]:
    """``count`` Gaussian bumps with random centers, widths and amplitudes.

    Centers lie in the inner ``reach`` fraction of the box; normal
    coordinates are drawn from ``[0, reach L]`` so that many bumps touch the
    boundary ``x_n = 0``.
    """
    rng = np.random.default_rng(seed)
    L = grid.half_width
    coords = grid.coordinates()
    out = []
    for _ in range(count):
        center = [rng.uniform(-reach * L, reach * L) for _ in range(grid.dim - 1)]
        center.append(rng.uniform(0, reach * L))
        w = rng.uniform(*width)
        amp = rng.normal() + (1j * rng.normal() if complex_valued else 0)
        r2 = sum((c - x0) ** 2 for c, x0 in zip(coords, center))
        out.append(np.broadcast_to(amp * np.exp(-r2 / w ** 2), grid.shape).copy())
    return out
