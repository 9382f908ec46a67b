"""C-infinity step ``xi``: 1 on ``t <= 1``, 0 on ``t >= 2``, with derivatives."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def _pieces(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 1) & (t < 2)
    p = np.where(inside, 2 - t, 1.0)   # distance to the right end
    q = np.where(inside, t - 1, 1.0)   # distance to the left end
    a = np.exp(-1 / p)
    b = np.exp(-1 / q)
    return t, inside, p, q, a, b


def step(t):
    """``exp(-1/(2-t)) / (exp(-1/(2-t)) + exp(-1/(t-1)))`` glued to 1 and 0."""
    t, inside, p, q, a, b = _pieces(t)
    return np.where(t <= 1, 1.0, np.where(t >= 2, 0.0, a / (a + b)))


def step_derivatives(t):
    """Return ``(xi, xi', xi'')`` evaluated at ``t``."""
    t, inside, p, q, a, b = _pieces(t)
    da = -a / p ** 2
    db = b / q ** 2
    dda = a * (1 / p ** 4 - 2 / p ** 3)
    ddb = b * (1 / q ** 4 - 2 / q ** 3)
    s = a + b
    num = da * b - a * db
    d1 = num / s ** 2
    d2 = (dda * b - a * ddb) / s ** 2 - 2 * num * (da + db) / s ** 3
    xi = np.where(t <= 1, 1.0, np.where(t >= 2, 0.0, a / s))
    return xi, np.where(inside, d1, 0.0), np.where(inside, d2, 0.0)


@lru_cache(maxsize=None)
def cutoff_constant(dim: int, samples: int = 200_001) -> float:
    """Smallest ``c >= 1`` with ``|grad xi_R| <= c/R`` and ``|Lap xi_R| <= c/R^2``.

    ``xi_R(x) = xi(|x|/R)`` in ``dim`` dimensions, so the bounds reduce to
    ``sup |xi'|`` and ``sup |xi'' + (dim-1) xi'/t|`` over ``1 < t < 2``.
    """
    t = np.linspace(1, 2, samples)[1:-1]
    _, d1, d2 = step_derivatives(t)
    lap = np.abs(d2 + (dim - 1) * d1 / t)
    return float(max(1.0, np.abs(d1).max(), lap.max()))
