"""Discrete differential operators and quadratures on a :class:`Grid`.

Energy-type integrals are evaluated on grid *edges*: the forward difference
``(u[i+1] - u[i]) / h`` is a centered approximation at the edge midpoint, so
edge sums are second-order accurate.  With ``walls=True`` the artificial
Dirichlet walls are included: tangential walls sit at ``x_j = +-L``, half a
cell beyond the outermost nodes, and the normal wall is the ``x_n = L`` layer
(whose values are treated as zero).  This makes

    sum_edges w |Du|^2 + sum_boundary s alpha |u|^2 == <A u, u>_W

hold exactly for the assembled operator ``A``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid


@dataclass
class EdgeField:
    """Differences of a field along one axis, sampled at edge midpoints."""

    axis: int
    diff: np.ndarray       # (u[i+1] - u[i]) / length
    mid: np.ndarray        # linear interpolant at the edge midpoint
    weight: np.ndarray     # quadrature weight of each edge (broadcastable)
    coords: list           # broadcastable coordinates of the edge midpoints


def _node_weights_1d(grid: Grid, axis: int) -> np.ndarray:
    h = grid.spacing
    if axis < grid.boundary_dim:
        return np.full(grid.tangential_count, h)
    w = np.full(len(grid.normal_nodes), h)
    w[0] = w[-1] = h / 2
    return w


def _shape_along(vec: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = len(vec)
    return vec.reshape(shape)


def edge_fields(u: np.ndarray, grid: Grid, walls: bool = True) -> list[EdgeField]:
    """Edge differences along every axis of a volume field ``u``."""
    u = np.asarray(u).reshape(grid.shape)
    if walls:
        u = u.copy()
        u[..., -1] = 0
    ndim = u.ndim
    axes = grid.axes()
    out = []
    for k in range(ndim):
        tangential = k < grid.boundary_dim
        pos = axes[k]
        vals = u
        if tangential and walls:
            L = grid.half_width
            pos = np.concatenate([[-L], pos, [L]])
            pad = [(0, 0)] * ndim
            pad[k] = (1, 1)
            vals = np.pad(u, pad)
        lengths = np.diff(pos)
        lo = np.take(vals, np.arange(vals.shape[k] - 1), axis=k)
        hi = np.take(vals, np.arange(1, vals.shape[k]), axis=k)
        ln = _shape_along(lengths, k, ndim)
        diff = (hi - lo) / ln
        mid = (hi + lo) / 2
        weight = ln
        for j in range(ndim):
            if j != k:
                weight = weight * _shape_along(_node_weights_1d(grid, j), j, ndim)
        coords = []
        for j in range(ndim):
            if j == k:
                coords.append(_shape_along((pos[:-1] + pos[1:]) / 2, k, ndim))
            else:
                coords.append(_shape_along(axes[j], j, ndim))
        out.append(EdgeField(k, diff, mid, weight, coords))
    return out


def edge_radius(edge: EdgeField) -> np.ndarray:
    return np.sqrt(sum(c ** 2 for c in edge.coords))


def gradient_energy(u, grid: Grid, v=None, weight_fn=None, walls: bool = True):
    """``sum_edges w * rho(mid) * Du * conj(Dv)``; ``rho`` defaults to 1."""
    eu = edge_fields(u, grid, walls)
    ev = eu if v is None else edge_fields(v, grid, walls)
    total = 0.0
    for a, b in zip(eu, ev):
        term = a.weight * a.diff * np.conj(b.diff)
        if weight_fn is not None:
            term = term * weight_fn(a.coords)
        total = total + np.sum(term)
    return total


def node_integral(values, grid: Grid, exclude_singular: np.ndarray | None = None):
    w = grid.quadrature_weights
    if exclude_singular is not None:
        w = np.where(exclude_singular, 0.0, w)
    return np.sum(w * values)


def boundary_tangential_gradient(trace: np.ndarray, grid: Grid) -> np.ndarray:
    """Centered tangential gradient of a boundary field (one-sided at walls)."""
    trace = np.asarray(trace)
    if trace.ndim == 0:
        return np.zeros((0,), dtype=trace.dtype)
    return np.stack([np.gradient(trace, grid.spacing, axis=k, edge_order=2)
                     for k in range(trace.ndim)])


def normal_derivative_at_boundary(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Second-order one-sided ``du/dx_n`` on ``x_n = 0``."""
    u = np.asarray(u).reshape(grid.shape)
    h = grid.spacing
    return (-3 * u[..., 0] + 4 * u[..., 1] - u[..., 2]) / (2 * h)


def second_difference(u: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Three-point second difference with one-sided four-point ends."""
    u = np.moveaxis(np.asarray(u), axis, -1)
    out = np.empty_like(u)
    out[..., 1:-1] = (u[..., 2:] - 2 * u[..., 1:-1] + u[..., :-2]) / h ** 2
    out[..., 0] = (2 * u[..., 0] - 5 * u[..., 1] + 4 * u[..., 2] - u[..., 3]) / h ** 2
    out[..., -1] = (2 * u[..., -1] - 5 * u[..., -2] + 4 * u[..., -3] - u[..., -4]) / h ** 2
    return np.moveaxis(out, -1, axis)


def discrete_laplacian(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Free-standing Laplacian of a node field (no boundary condition)."""
    u = np.asarray(u).reshape(grid.shape)
    return sum(second_difference(u, grid.spacing, k) for k in range(u.ndim))


def centered_gradient(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Nodewise gradient, shape ``(ndim,) + grid.shape``."""
    u = np.asarray(u).reshape(grid.shape)
    return np.stack([np.gradient(u, grid.spacing, axis=k, edge_order=2)
                     for k in range(u.ndim)])
