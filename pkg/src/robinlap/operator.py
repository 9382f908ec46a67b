"""Sparse finite-difference Robin Laplacian and its sesquilinear form."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .boundary import BoundaryFunction
from .calculus import (discrete_laplacian, gradient_energy,
                       normal_derivative_at_boundary)
from .errors import UnsupportedDimensionError
from .grid import Grid


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """``-Laplace`` with the Robin condition ``-u_{x_n} + alpha u = 0``.

    The matrix acts on the free unknowns (the ``x_n = L`` layer removed); use
    :meth:`apply` for full grid fields.
    """

    matrix: sp.csr_matrix
    grid: Grid
    alpha: BoundaryFunction

    @property
    def symmetric(self) -> bool:
        return self.alpha.is_real

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights of the free unknowns."""
        return self.grid.quadrature_weights[..., :-1].ravel()

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.grid.extend(self.matrix @ self.grid.restrict(u))

    def inner(self, x: np.ndarray, y: np.ndarray) -> complex:
        """Weighted inner product ``sum w x conj(y)`` of free vectors."""
        return np.sum(self.weights * x * np.conj(y))

    def norm(self, x: np.ndarray) -> float:
        return float(np.sqrt(np.sum(self.weights * np.abs(x) ** 2)))

    def symmetrized(self) -> sp.csr_matrix:
        """``W^{1/2} A W^{-1/2}``: Euclidean-adjoint equivalent of ``A``."""
        s = np.sqrt(self.weights)
        return (sp.diags(s) @ self.matrix @ sp.diags(1 / s)).tocsr()

    def to_matrix_market(self, path: str | Path) -> None:
        scipy.io.mmwrite(str(path), self.matrix.astype(complex).tocoo(),
                         comment=f"robin laplacian n={self.grid.dim} "
                                 f"L={self.grid.half_width} h={self.grid.spacing}",
                         field="complex")


def _tangential_1d(m: int, h: float) -> sp.csr_matrix:
    # Dirichlet walls at +-L, half a cell outside the end nodes (mirror ghost).
    main = np.full(m, 2.0)
    main[0] = main[-1] = 3.0
    off = -np.ones(m - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr") / h ** 2


def _normal_1d(cells: int, h: float) -> sp.csr_matrix:
    # Unknowns j = 0..cells-1; u_cells = 0 (Dirichlet).  Row 0 uses the ghost
    # u_{-1} = u_1 - 2h alpha u_0, whose alpha part is added separately.
    main = np.full(cells, 2.0)
    upper = -np.ones(cells - 1)
    lower = -np.ones(cells - 1)
    upper[0] = -2.0
    return sp.diags([lower, main, upper], [-1, 0, 1], format="csr") / h ** 2


def assemble(grid: Grid, alpha: BoundaryFunction) -> DiscreteOperator:
    """Assemble the second-order stencil with ghost-node Robin rows."""
    if grid.boundary_only:
        raise UnsupportedDimensionError("volume assembly needs dim <= 3")
    if np.shape(alpha.samples) != grid.boundary_shape:
        raise UnsupportedDimensionError(
            f"alpha has shape {np.shape(alpha.samples)}, grid boundary is "
            f"{grid.boundary_shape}")
    h = grid.spacing
    d = grid.boundary_dim
    m = grid.tangential_count
    cells = grid.cells
    normal = _normal_1d(cells, h)
    eye_n = sp.identity(cells, format="csr")
    eye_t = sp.identity(m, format="csr")
    tang = _tangential_1d(m, h) if d else None

    def kron_all(factors):
        out = factors[0]
        for f in factors[1:]:
            out = sp.kron(out, f, format="csr")
        return out

    terms = [kron_all([eye_t] * d + [normal])]
    for k in range(d):
        factors = [eye_t] * d + [eye_n]
        factors[k] = tang
        terms.append(kron_all(factors))
    A = terms[0]
    for t in terms[1:]:
        A = A + t
    robin = np.zeros(grid.free_shape, dtype=complex)
    robin[..., 0] = 2 * np.asarray(alpha.samples) / h
    A = (A.astype(complex) + sp.diags(robin.ravel())).tocsr()
    A.sort_indices()
    return DiscreteOperator(A, grid, alpha)


@dataclass(frozen=True)
class FormEvaluation:
    value: complex
    weighted_product: complex
    residual: float


def apply_form(op: DiscreteOperator, u: np.ndarray, v: np.ndarray,
               walls: bool = True) -> FormEvaluation:
    """Discrete ``int grad u . conj(grad v) + int_boundary alpha u conj(v)``.

    The value is reported with ``<Au, v>_W`` and their difference.  With
    ``walls=False`` the Dirichlet wall edges are dropped, so constants have
    zero energy.
    """
    grid = op.grid
    u = np.asarray(u).reshape(grid.shape)
    v = np.asarray(v).reshape(grid.shape)
    energy = gradient_energy(u, grid, v, walls=walls)
    surface = np.sum(grid.surface_weights * op.alpha.samples
                     * grid.boundary_trace(u) * np.conj(grid.boundary_trace(v)))
    value = complex(energy + surface)
    product = complex(op.inner(op.matrix @ grid.restrict(u), grid.restrict(v)))
    return FormEvaluation(value, product, abs(value - product))


def greens_identity_residual(op: DiscreteOperator, u: np.ndarray, v: np.ndarray) -> float:
    """``|int_bdry (eta.grad u) conj(v) - int grad u.grad conj(v) - int (Lap u) conj(v)|``.

    Each term is discretized independently (one-sided normal derivative,
    edge energy without walls, free-standing Laplacian), so the residual is
    a genuine second-order consistency measure.
    """
    grid = op.grid
    u = np.asarray(u).reshape(grid.shape)
    v = np.asarray(v).reshape(grid.shape)
    if grid.dim == 1:
        flux = -normal_derivative_at_boundary(u, grid) * np.conj(v[0])
    else:
        flux = np.sum(grid.surface_weights * -normal_derivative_at_boundary(u, grid)
                      * np.conj(grid.boundary_trace(v)))
    energy = gradient_energy(u, grid, v, walls=False)
    lap = np.sum(grid.quadrature_weights * discrete_laplacian(u, grid) * np.conj(v))
    return float(abs(flux - energy - lap))
