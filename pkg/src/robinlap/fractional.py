"""Fourier-multiplier calculus on the boundary grid and sharp Sobolev constants.

The boundary box ``(-L, L)^d`` is treated as a torus of period ``2L``; an
optional smooth radial taper suppresses the jump that periodization would
otherwise create for fields that have not decayed at the walls.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gamma

from .errors import UnsupportedDimensionError
from .grid import Grid
from .smooth import step

DEFAULT_TAPER = 0.1


def _require_boundary(grid: Grid) -> None:
    if grid.boundary_dim < 1:
        raise UnsupportedDimensionError("fractional operators need n >= 2")


def taper(grid: Grid, width: float | None = DEFAULT_TAPER) -> np.ndarray:
    """Radial window equal to 1 for ``|x'| <= L(1 - width)``, 0 for ``|x'| >= L``."""
    _require_boundary(grid)
    if not width:
        return np.ones(grid.boundary_shape)
    L = grid.half_width
    r = np.sqrt(sum(c ** 2 for c in grid.boundary_coordinates()))
    inner = L * (1 - width)
    # step() falls from 1 to 0 on [1, 2]; map [inner, L] onto it
    return np.broadcast_to(step(1 + (r - inner) / (L - inner)), grid.boundary_shape).copy()


def wavenumber_modulus(grid: Grid) -> np.ndarray:
    """``|k|`` on the FFT lattice of the ``2L``-periodic boundary box."""
    _require_boundary(grid)
    k1 = 2 * np.pi * np.fft.fftfreq(grid.tangential_count, d=grid.spacing)
    grids = np.meshgrid(*([k1] * grid.boundary_dim), indexing="ij")
    return np.sqrt(sum(k ** 2 for k in grids))


def fractional_quarter_laplacian(field: np.ndarray, grid: Grid,
                                 taper_width: float | None = DEFAULT_TAPER) -> np.ndarray:
    """``(-Lap)^{1/4}`` of a boundary field via the multiplier ``|k|^{1/2}``."""
    f = np.asarray(field).reshape(grid.boundary_shape) * taper(grid, taper_width)
    out = np.fft.ifftn(np.sqrt(wavenumber_modulus(grid)) * np.fft.fftn(f))
    return out if np.iscomplexobj(field) else out.real


def sobolev_half_norm_sq(field: np.ndarray, grid: Grid,
                         taper_width: float | None = DEFAULT_TAPER) -> float:
    """Squared homogeneous ``H^{1/2}`` norm ``int |k| |f^(k)|^2 dk / (2 pi)^d``."""
    f = np.asarray(field).reshape(grid.boundary_shape) * taper(grid, taper_width)
    F = np.fft.fftn(f)
    n_pts = F.size
    return float(grid.spacing ** grid.boundary_dim / n_pts
                 * np.sum(wavenumber_modulus(grid) * np.abs(F) ** 2))


def boundary_lp_norm(field: np.ndarray, grid: Grid, p: float) -> float:
    vals = np.abs(np.asarray(field))
    if np.isinf(p):
        return float(vals.max(initial=0.0))
    return float((grid.spacing ** grid.boundary_dim * np.sum(vals ** p)) ** (1 / p))


def boundary_gradient_norm_sq(field: np.ndarray, grid: Grid) -> float:
    """``int |grad f|^2`` on the boundary via the multiplier ``|k|^2``."""
    F = np.fft.fftn(np.asarray(field).reshape(grid.boundary_shape))
    return float(grid.spacing ** grid.boundary_dim / F.size
                 * np.sum(wavenumber_modulus(grid) ** 2 * np.abs(F) ** 2))


def sharp_sobolev_sq(d: int, s: float) -> float:
    """Best constant ``K`` in ``||f||_{2d/(d-2s)}^2 <= K ||(-Lap)^{s/2} f||_2^2``."""
    if not 0 < 2 * s < d:
        raise UnsupportedDimensionError(f"no homogeneous embedding for d={d}, s={s}")
    return float(2 ** (-2 * s) * np.pi ** (-s) * gamma((d - 2 * s) / 2)
                 / gamma((d + 2 * s) / 2) * (gamma(d) / gamma(d / 2)) ** (2 * s / d))


def sobolev_constants(boundary_dim: int) -> dict:
    """Optimal constants on ``R^d``, ``d = boundary_dim``.

    ``S_star``: ``||f||_{2d/(d-1)} <= S_star ||(-Lap)^{1/4} f||_2`` (needs d >= 2).
    ``Script_S_star``: ``||f||_{2d/(d-2)} <= Script_S_star ||grad f||_2``
    (needs d >= 3, otherwise ``None``).
    """
    d = boundary_dim
    if d < 2:
        raise UnsupportedDimensionError("the H^{1/2} embedding is void for boundary_dim < 2")
    out = {"S_star": float(np.sqrt(sharp_sobolev_sq(d, 0.5))),
           "S_star_exponent": 2 * d / (d - 1),
           "Script_S_star": None, "Script_S_star_exponent": None}
    if d >= 3:
        out["Script_S_star"] = float(np.sqrt(sharp_sobolev_sq(d, 1.0)))
        out["Script_S_star_exponent"] = 2 * d / (d - 2)
    return out
