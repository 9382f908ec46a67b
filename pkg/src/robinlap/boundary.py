"""Boundary coupling ``alpha`` and the derived boundary fields."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ExpressionError, UnsupportedDimensionError
from .expression import evaluate_expression
from .grid import Grid


@dataclass(frozen=True, eq=False)
class BoundaryFunction:
    """Complex samples of ``alpha`` on the ``x_n = 0`` slice of a grid.

    ``gradient`` has shape ``(d,) + boundary_shape`` when known analytically;
    otherwise it is ``None`` and :meth:`tangential_gradient` falls back to
    second-order finite differences.
    """

    samples: np.ndarray
    provenance: str
    gradient: np.ndarray | None = None
    differentiable: bool = True

    @property
    def is_real(self) -> bool:
        """True when ``max|Im alpha| <= 1e-14 max|alpha|``."""
        scale = float(np.max(np.abs(self.samples), initial=0.0))
        return float(np.max(np.abs(self.samples.imag), initial=0.0)) <= 1e-14 * scale

    @property
    def gradient_method(self) -> str:
        return "analytic" if self.gradient is not None else "finite-difference"

    def tangential_gradient(self, grid: Grid) -> np.ndarray:
        if self.gradient is not None:
            return self.gradient
        return finite_difference_gradient(self.samples, grid.spacing)

    def __add__(self, other: "BoundaryFunction") -> "BoundaryFunction":
        grad = None
        if self.gradient is not None and other.gradient is not None:
            grad = self.gradient + other.gradient
        return BoundaryFunction(self.samples + other.samples,
                                f"{self.provenance} + {other.provenance}",
                                grad, self.differentiable and other.differentiable)

    def scaled(self, factor: complex) -> "BoundaryFunction":
        grad = None if self.gradient is None else factor * self.gradient
        return BoundaryFunction(factor * self.samples,
                                f"{factor!r}*({self.provenance})", grad,
                                self.differentiable)

    def to_csv(self, path: str | Path, grid: Grid) -> None:
        coords = [np.broadcast_to(c, grid.boundary_shape).ravel()
                  for c in grid.boundary_coordinates()]
        vals = np.broadcast_to(self.samples, grid.boundary_shape).ravel()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{k + 1}" for k in range(len(coords))]
                       + ["re_alpha", "im_alpha"])
            for i in range(vals.size):
                w.writerow([f"{c[i]:.12g}" for c in coords]
                           + [f"{vals[i].real:.17g}", f"{vals[i].imag:.17g}"])


def finite_difference_gradient(field: np.ndarray, h: float) -> np.ndarray:
    """Centered differences, one-sided second order at the outer walls."""
    field = np.asarray(field)
    d = field.ndim
    if d == 0:
        return np.zeros((0,), dtype=field.dtype)
    return np.stack([np.gradient(field, h, axis=k, edge_order=2)
                     for k in range(d)])


# -- presets -----------------------------------------------------------------

def _as_complex(value: Any) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", "").replace("i", "j"))
    return complex(value)


def _radius(coords):
    return np.sqrt(sum(c ** 2 for c in coords)) if coords else np.float64(0.0)


def _constant(coords, c=0.0):
    c = _as_complex(c)
    shape = np.broadcast(*coords).shape if coords else ()
    return np.full(shape, c), np.zeros((len(coords),) + shape, dtype=complex)


def _radial_decay(coords, a=1.0, p=1.0):
    a = _as_complex(a)
    r = _radius(coords)
    val = a / (1 + r) ** p
    with np.errstate(invalid="ignore", divide="ignore"):
        dr = -a * p / (1 + r) ** (p + 1) / r
    dr = np.where(r > 0, dr, 0.0)
    return val, np.stack([dr * c for c in coords]) if coords else np.zeros((0,))


def _rational(coords, a=1.0, p=1.0):
    a = _as_complex(a)
    r2 = _radius(coords) ** 2
    val = a / (1 + r2) ** p
    dr = -2 * p * a / (1 + r2) ** (p + 1)
    return val, np.stack([dr * c for c in coords]) if coords else np.zeros((0,))


def _complex_phase(coords, a=1.0, theta=0.0):
    return _rational(coords, a=_as_complex(a) * np.exp(1j * float(theta)), p=1.0)


PRESETS = {
    "constant": (_constant, {"c"}),
    "radial_decay": (_radial_decay, {"a", "p"}),
    "rational": (_rational, {"a", "p"}),
    "complex_phase": (_complex_phase, {"a", "theta"}),
}


def describe(spec: Any) -> str:
    if isinstance(spec, dict):
        args = ",".join(f"{k}={spec[k]}" for k in sorted(spec) if k != "preset")
        return f"{spec['preset']}({args})"
    if isinstance(spec, (list, tuple)):
        return " + ".join(describe(s) for s in spec)
    return str(spec)


def sample_alpha(spec: Any, grid: Grid) -> BoundaryFunction:
    """Sample a coupling on the boundary of ``grid``.

    ``spec`` is a number (constant), an expression string, a preset mapping
    ``{"preset": name, **params}``, or a list of these (summed).
    """
    if isinstance(spec, (list, tuple)) and not (
            len(spec) == 2 and all(isinstance(v, (int, float)) for v in spec)):
        if not spec:
            raise ExpressionError("empty coupling list")
        parts = [sample_alpha(s, grid) for s in spec]
        total = parts[0]
        for p in parts[1:]:
            total = total + p
        return total
    coords = [np.broadcast_to(c, grid.boundary_shape)
              for c in grid.boundary_coordinates()]
    if isinstance(spec, (int, float, complex)) or (
            isinstance(spec, (list, tuple))):
        spec = {"preset": "constant", "c": spec}
    if isinstance(spec, dict):
        name = spec.get("preset")
        if name not in PRESETS:
            raise ExpressionError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        func, allowed = PRESETS[name]
        params = {k: v for k, v in spec.items() if k != "preset"}
        extra = set(params) - allowed
        if extra:
            raise ExpressionError(f"preset {name!r} does not accept {sorted(extra)}")
        values, grad = func(coords, **params)
        values = np.broadcast_to(np.asarray(values, dtype=complex), grid.boundary_shape).copy()
        grad = np.asarray(grad, dtype=complex).reshape((grid.boundary_dim,) + grid.boundary_shape)
        bf = BoundaryFunction(values, describe(spec), grad)
    elif isinstance(spec, str):
        values = evaluate_expression(spec, coords)
        values = np.broadcast_to(values, grid.boundary_shape).copy()
        bf = BoundaryFunction(values, spec, None)
    else:
        raise ExpressionError(f"cannot interpret coupling spec {spec!r}")
    if not np.all(np.isfinite(bf.samples)):
        raise ExpressionError(f"coupling {bf.provenance!r} is not finite on the grid")
    return bf


def radial_derivative(alpha: BoundaryFunction, grid: Grid) -> tuple[np.ndarray, np.ndarray, str]:
    """Return ``(x.grad alpha, x.grad Re alpha, method)`` on boundary nodes.

    On ``x_n = 0`` only tangential components contribute.
    """
    grad = alpha.tangential_gradient(grid)
    coords = grid.boundary_coordinates()
    radial = np.zeros(grid.boundary_shape, dtype=complex)
    for k, c in enumerate(coords):
        radial = radial + c * grad[k]
    return radial, radial.real.copy(), alpha.gradient_method


def divergence_field(alpha: BoundaryFunction, grid: Grid) -> np.ndarray:
    """``div(x' Im alpha)`` by finite differences of the product field."""
    if grid.dim < 2:
        raise UnsupportedDimensionError("div(x' Im alpha) needs n >= 2")
    imag = alpha.samples.imag
    out = np.zeros(grid.boundary_shape)
    for k, c in enumerate(grid.boundary_coordinates()):
        out += np.gradient(c * imag, grid.spacing, axis=k, edge_order=2)
    return out
