"""Uniform tensor-product grids on the truncated half-space.

The truncated domain is ``(-L, L)^(n-1) x (0, L)``.  Tangential nodes sit at
cell midpoints ``(j + 1/2) h - L`` so no node lies on ``x' = 0``; normal nodes
sit at ``j h`` including both ``x_n = 0`` and the artificial wall ``x_n = L``.

Field arrays are shaped ``(m, ..., m, N + 1)`` with the normal axis last, where
``m = 2L/h`` and ``N = L/h``.  For ``dim = 1`` only the normal axis exists.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import CapacityError, SizingError, UnsupportedDimensionError

#: Default cap on the number of grid nodes (volume grids).
MAX_NODES = 4_000_000


def _cell_count(half_width: float, spacing: float) -> int:
    ratio = half_width / spacing
    cells = int(round(ratio))
    if cells < 2 or abs(ratio - cells) > 1e-9 * max(ratio, 1.0):
        raise SizingError(
            f"half_width/spacing = {ratio!r} must be an integer >= 2"
        )
    return cells


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Tensor-product grid with quadrature and trace data.

    ``boundary_only`` grids (used for ``dim = 4``) carry only the
    ``(dim-1)``-dimensional boundary slice; volume operations refuse them.
    """

    dim: int
    half_width: float
    spacing: float
    boundary_only: bool = False
    tangential_nodes: np.ndarray = field(repr=False, default=None)
    normal_nodes: np.ndarray = field(repr=False, default=None)

    # -- sizes -------------------------------------------------------------
    @property
    def cells(self) -> int:
        """Number of cells across the normal direction, ``L/h``."""
        return len(self.normal_nodes) - 1

    @property
    def tangential_count(self) -> int:
        return len(self.tangential_nodes)

    @property
    def boundary_dim(self) -> int:
        return self.dim - 1

    @property
    def boundary_shape(self) -> tuple[int, ...]:
        return (self.tangential_count,) * self.boundary_dim

    @property
    def shape(self) -> tuple[int, ...]:
        if self.boundary_only:
            return self.boundary_shape
        return self.boundary_shape + (len(self.normal_nodes),)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64))

    @property
    def free_shape(self) -> tuple[int, ...]:
        """Shape of the unknowns: the ``x_n = L`` layer is a Dirichlet wall."""
        return self.boundary_shape + (self.cells,)

    @property
    def free_size(self) -> int:
        return int(np.prod(self.free_shape, dtype=np.int64))

    # -- coordinates -------------------------------------------------------
    def axes(self) -> list[np.ndarray]:
        """One coordinate vector per array axis, normal axis last."""
        axes = [self.tangential_nodes] * self.boundary_dim
        if not self.boundary_only:
            axes.append(self.normal_nodes)
        return axes

    def coordinates(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis."""
        axes = self.axes()
        out = []
        for k, ax in enumerate(axes):
            shape = [1] * len(axes)
            shape[k] = len(ax)
            out.append(ax.reshape(shape))
        return out

    def boundary_coordinates(self) -> list[np.ndarray]:
        """Broadcastable tangential coordinates on the ``x_n = 0`` slice."""
        d = self.boundary_dim
        out = []
        for k in range(d):
            shape = [1] * d
            shape[k] = self.tangential_count
            out.append(self.tangential_nodes.reshape(shape))
        return out

    @cached_property
    def quadrature_weights(self) -> np.ndarray:
        """Per-node weights: midpoint tangentially, trapezoid normally."""
        if self.boundary_only:
            return self.surface_weights
        h = self.spacing
        wn = np.full(len(self.normal_nodes), h)
        wn[0] = wn[-1] = h / 2
        w = np.broadcast_to(
            wn * h ** self.boundary_dim, self.shape
        ).copy()
        return _frozen(w)

    @cached_property
    def surface_weights(self) -> np.ndarray:
        """Area weight of each boundary node (a single unit weight for n = 1)."""
        w = np.full(self.boundary_shape, self.spacing ** self.boundary_dim)
        return _frozen(w)

    @cached_property
    def boundary_index_set(self) -> np.ndarray:
        """Flat (C-order) indices of the nodes with ``x_n = 0``."""
        if self.boundary_only:
            return _frozen(np.arange(self.size))
        idx = np.arange(self.size).reshape(self.shape)[..., 0]
        return _frozen(idx.ravel())

    # -- helpers for fields -----------------------------------------------
    def boundary_trace(self, u: np.ndarray) -> np.ndarray:
        """Restriction of a volume field to ``x_n = 0``."""
        return np.asarray(u).reshape(self.shape)[..., 0]

    def restrict(self, u: np.ndarray) -> np.ndarray:
        """Drop the Dirichlet layer and flatten to the unknown vector."""
        return np.asarray(u).reshape(self.shape)[..., :-1].ravel()

    def extend(self, x: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`restrict`; the wall layer is filled with zeros."""
        x = np.asarray(x).reshape(self.free_shape)
        out = np.zeros(self.shape, dtype=x.dtype)
        out[..., :-1] = x
        return out

    def evaluate(self, func) -> np.ndarray:
        """Evaluate ``func(*coords)`` on the full grid shape."""
        return np.broadcast_to(func(*self.coordinates()), self.shape).copy()

    def integrate(self, values: np.ndarray) -> complex | float:
        return np.sum(self.quadrature_weights * values)

    def integrate_boundary(self, values: np.ndarray) -> complex | float:
        return np.sum(self.surface_weights * values)

    def refined(self) -> "Grid":
        """Same domain at half the spacing."""
        return build_grid(self.dim, self.half_width, self.spacing / 2,
                          boundary_only=self.boundary_only, max_nodes=None)


def build_grid(dim: int, half_width: float, spacing: float, *,
               boundary_only: bool | None = None,
               max_nodes: int | None = MAX_NODES) -> Grid:
    """Build the grid for ``(-L, L)^(dim-1) x (0, L)``.

    ``dim = 4`` is accepted only as a boundary-only grid.  ``max_nodes=None``
    disables the capacity check.
    """
    if dim not in (1, 2, 3, 4):
        raise UnsupportedDimensionError(f"dim must be 1..4, got {dim}")
    if boundary_only is None:
        boundary_only = dim == 4
    if dim == 4 and not boundary_only:
        raise UnsupportedDimensionError(
            "volume grids are limited to dim <= 3; use boundary_only=True"
        )
    if dim == 1 and boundary_only:
        raise UnsupportedDimensionError("a 1-D domain has a point boundary")
    if not (half_width > 0 and spacing > 0):
        raise SizingError("half_width and spacing must be positive")
    cells = _cell_count(half_width, spacing)
    h = half_width / cells
    m = 2 * cells if dim > 1 else 0
    count = m ** (dim - 1) * (1 if boundary_only else cells + 1)
    if max_nodes is not None and count > max_nodes:
        raise CapacityError(
            f"{count} nodes requested (dim={dim}, L={half_width}, h={spacing}); "
            f"cap is {max_nodes}"
        )
    tangential = (np.arange(m) + 0.5) * h - half_width
    normal = np.arange(cells + 1) * h
    return Grid(dim=dim, half_width=float(half_width), spacing=float(h),
                boundary_only=boundary_only,
                tangential_nodes=_frozen(tangential),
                normal_nodes=_frozen(normal))


def radial_weight(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(|x|, singular_mask)`` on every node.

    The mask is all-false except for the ``x = 0`` node of a 1-D grid.
    """
    coords = grid.coordinates()
    r2 = sum(c ** 2 for c in coords)
    r = np.sqrt(np.broadcast_to(r2, grid.shape))
    return r.copy(), r == 0.0
