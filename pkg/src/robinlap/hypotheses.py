"""Evaluation of the eigenvalue-absence hypotheses for a sampled coupling.

Three checkers are provided: the self-adjoint case (``T1.1``), the
fractional smallness case (``T1.2``) and the Hardy-type case (``T1.5``).
Every condition carries a signed margin (negative means failure).
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sl
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .boundary import BoundaryFunction, divergence_field, radial_derivative
from .errors import UnsupportedDimensionError, WrongTheoremError
from .fractional import (DEFAULT_TAPER, boundary_lp_norm, fractional_quarter_laplacian,
                         sobolev_constants)
from .grid import Grid

SCHEMA_VERSION = 1
REAL_TOL = 1e-12
#: fraction of L beyond which a maximiser counts as sitting at the walls
WALL_BAND = 0.1


@dataclass
class Condition:
    name: str
    value: float
    margin: float
    verdict: str            # "PASS" | "FAIL" | "N/A"
    detail: str = ""


@dataclass
class HypothesisReport:
    theorem_id: str
    conditions: list[Condition]
    constants_used: dict
    smallness_value: float | None
    variant_flags: dict = field(default_factory=dict)
    variant_verdicts: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    alpha: str = ""
    grid: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def verdict(self) -> str:
        decisive = [c for c in self.conditions if c.verdict != "N/A"]
        return "PASS" if decisive and all(c.verdict == "PASS" for c in decisive) else "FAIL"

    def condition(self, name: str) -> Condition:
        return next(c for c in self.conditions if c.name == name)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict
        return _finite(d)

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text)
        return text

    def csv_row(self) -> dict:
        row = {"theorem_id": self.theorem_id, "alpha": self.alpha,
               "verdict": self.verdict, "smallness_value": self.smallness_value}
        for c in self.conditions:
            row[f"{c.name}_margin"] = c.margin
        for k, v in self.constants_used.items():
            row[k] = v
        return _finite(row)


def write_summary_csv(reports: list[HypothesisReport], path: str | Path) -> None:
    rows = [r.csv_row() for r in reports]
    keys = []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        w.writerows(rows)


def _finite(obj):
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _grid_info(grid: Grid) -> dict:
    return {"dim": grid.dim, "half_width": grid.half_width, "spacing": grid.spacing}


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def _radius(grid: Grid) -> np.ndarray:
    return np.broadcast_to(np.sqrt(sum(c ** 2 for c in grid.boundary_coordinates())),
                           grid.boundary_shape)


def _wall_limited(field: np.ndarray, grid: Grid) -> bool:
    """True when ``max|field|`` is (nearly) attained next to the walls."""
    vals = np.abs(field)
    top = vals.max(initial=0.0)
    if top == 0:
        return False
    edge = np.zeros(grid.boundary_shape, dtype=bool)
    for c in grid.boundary_coordinates():
        edge = edge | (np.abs(c) >= (1 - WALL_BAND) * grid.half_width)
    return bool(vals[edge].max(initial=0.0) >= 0.99 * top)


def _sectoriality(alpha: BoundaryFunction, tol: float) -> Condition:
    gap = alpha.samples.real - np.abs(alpha.samples.imag)
    m = float(gap.min())
    return Condition("sectoriality", m, m, _verdict(m >= -tol), "min(Re a - |Im a|)")


# -- self-adjoint case ----------------------------------------------------------

def check_selfadjoint_hypotheses(alpha: BoundaryFunction, grid: Grid,
                                 tol: float = REAL_TOL) -> HypothesisReport:
    """Nonnegativity ``alpha >= 0`` and repulsivity ``x.grad alpha <= 0``."""
    if np.max(np.abs(alpha.samples.imag), initial=0.0) > REAL_TOL:
        raise WrongTheoremError("complex coupling: use check_thm12_hypotheses "
                                "or check_thm15_hypotheses")
    a = alpha.samples.real
    radial, _, method = radial_derivative(alpha, grid)
    lo = float(a.min())
    hi = float(radial.real.max(initial=0.0)) if radial.size else 0.0
    conds = [Condition("nonnegativity", lo, lo, _verdict(lo >= -tol), "min alpha"),
             Condition("repulsivity", hi, -hi, _verdict(hi <= tol),
                       f"max x.grad alpha ({method})")]
    return HypothesisReport("T1.1", conds, {}, None,
                            variant_flags={"gradient_method": method},
                            alpha=alpha.provenance, grid=_grid_info(grid))


# -- fractional smallness case --------------------------------------------------

def thm12_constants(alpha: BoundaryFunction, grid: Grid,
                    taper_width: float | None = DEFAULT_TAPER) -> tuple[float, float, list[str]]:
    """``b1 = max |x'||alpha|`` and ``b2 = sum_j ||(-Lap)^{1/4}(x_j alpha)||_{2(n-1)}``."""
    r = _radius(grid)
    weighted = r * np.abs(alpha.samples)
    b1 = float(weighted.max())
    notes = []
    if _wall_limited(weighted, grid):
        notes.append("b1 is attained at the truncation walls: |x'||alpha| does not "
                     "decay and its sup norm grows with L (divergent on the half-space)")
    p = 2 * (grid.dim - 1)
    b2 = 0.0
    for c in grid.boundary_coordinates():
        comp = fractional_quarter_laplacian(c * alpha.samples, grid, taper_width)
        b2 += boundary_lp_norm(comp, grid, p)
    return b1, float(b2), notes


def check_thm12_hypotheses(alpha: BoundaryFunction, grid: Grid, C_star: float = 1.0,
                           S_star: float | None = None, tol: float = REAL_TOL,
                           taper_width: float | None = DEFAULT_TAPER) -> HypothesisReport:
    """Sectoriality plus ``2 C* (b1 + S* b2) < 1``; parametric in ``C*``."""
    if grid.dim < 3:
        raise UnsupportedDimensionError("the fractional smallness theorem needs n >= 3")
    if not C_star > 0:
        raise ValueError("C_star must be positive")
    consts = sobolev_constants(grid.dim - 1)
    if S_star is None:
        S_star = consts["S_star"]
    b1, b2, notes = thm12_constants(alpha, grid, taper_width)
    scale = b1 + S_star * b2
    value = 2 * C_star * scale
    conds = [_sectoriality(alpha, tol),
             Condition("smallness", value, 1 - value, _verdict(value < 1),
                       "2 C*(b1 + S* b2) < 1")]
    constants = {"C_star": C_star, "S_star": S_star, "S_star_exponent": consts["S_star_exponent"],
                 "b1": b1, "b2": b2, "b2_exponent": 2 * (grid.dim - 1),
                 "supremal_C_star": (1 / (2 * scale)) if scale > 0 else float("inf")}
    return HypothesisReport("T1.2", conds, constants, value,
                            variant_flags={"taper_width": taper_width,
                                           "vector_norm": "componentwise sum"},
                            warnings=notes, alpha=alpha.provenance, grid=_grid_info(grid))


# -- Hardy-type case --------------------------------------------------------------

def boundary_dirichlet_laplacian(grid: Grid) -> sp.csr_matrix:
    """Dirichlet Laplacian on the boundary box, walls at ``+-L``."""
    m, h, d = grid.tangential_count, grid.spacing, grid.boundary_dim
    main = np.full(m, 2.0)
    main[0] = main[-1] = 3.0
    T = sp.diags([-np.ones(m - 1), main, -np.ones(m - 1)], [-1, 0, 1], format="csr") / h ** 2
    eye = sp.identity(m, format="csr")
    total = None
    for k in range(d):
        factors = [eye] * d
        factors[k] = T
        term = factors[0]
        for f in factors[1:]:
            term = sp.kron(term, f, format="csr")
        total = term if total is None else total + term
    return total.tocsc()


def dirichlet_symbol(grid: Grid) -> np.ndarray:
    """Eigenvalues of :func:`boundary_dirichlet_laplacian` in DST-II ordering."""
    m, h = grid.tangential_count, grid.spacing
    lam1 = (2 / h * np.sin(np.pi * np.arange(1, m + 1) / (2 * m))) ** 2
    grids = np.meshgrid(*([lam1] * grid.boundary_dim), indexing="ij")
    return sum(grids)


def hardy_weight_constant(weight: np.ndarray, grid: Grid, dense_threshold: int = 400) -> float:
    """``sup int w |psi|^2 / int |grad psi|^2`` over boundary grid functions."""
    w = np.asarray(weight, dtype=float).reshape(grid.boundary_shape)
    if np.any(w < 0):
        raise ValueError("weight must be nonnegative")
    if not np.any(w > 0):
        return 0.0
    if w.size <= dense_threshold:
        lap = boundary_dirichlet_laplacian(grid).toarray()
        return float(sl.eigh(np.diag(w.ravel()), lap, eigvals_only=True).max())
    # the wall-Dirichlet Laplacian is diagonal in the type-II sine basis
    symbol = dirichlet_symbol(grid)
    sw = np.sqrt(w)

    def matvec(x):
        y = sw * np.reshape(x, w.shape)
        y = sfft.idstn(sfft.dstn(y, type=2, norm="ortho") / symbol, type=2, norm="ortho")
        return (sw * y).ravel()

    op = spla.LinearOperator((w.size, w.size), dtype=float, matvec=matvec)
    v0 = sw.ravel() + 1e-3
    val = spla.eigsh(op, k=1, which="LA", return_eigenvectors=False, tol=1e-10, v0=v0)
    return float(val[0])


def estimate_hardy_b2(alpha: BoundaryFunction, grid: Grid) -> float:
    """Square root of the largest generalized eigenvalue for ``|div(x' Im a)|^2``.

    A discrete Rayleigh-quotient maximum, hence a lower bound for the true
    constant on the unbounded boundary.
    """
    if grid.dim < 2:
        raise UnsupportedDimensionError("needs n >= 2")
    div = divergence_field(alpha, grid)
    return float(np.sqrt(hardy_weight_constant(div ** 2, grid)))


def check_thm15_hypotheses(alpha: BoundaryFunction, grid: Grid, variant: str = "hardy",
                           tol: float = REAL_TOL) -> HypothesisReport:
    """Sectoriality, ``x.grad Re a <= 0`` and both readings of the smallness bound.

    ``variant`` selects how ``b2`` is obtained: ``"hardy"`` (generalized
    eigenproblem) or ``"sufficient"`` (Sobolev constant times the
    ``L^{n-1}`` norm of ``div(x' Im a)``).
    """
    if variant not in ("hardy", "sufficient"):
        raise ValueError("variant must be 'hardy' or 'sufficient'")
    if grid.dim < 2:
        raise UnsupportedDimensionError("needs n >= 2")
    notes = []
    imag = alpha.samples.imag
    trivial = float(np.max(np.abs(imag), initial=0.0)) <= REAL_TOL
    if grid.dim <= 3 and not trivial:
        notes.append("degenerate: for n <= 3 the Hardy-type theorem reduces to the "
                     "self-adjoint situation; results are reported but not meaningful")
    _, radial_re, method = radial_derivative(alpha, grid)
    worst = float(radial_re.max())
    r = _radius(grid)
    weighted = r * np.abs(imag)
    b1 = float(weighted.max())
    if _wall_limited(weighted, grid):
        notes.append("b1 is attained at the truncation walls (|x'||Im a| does not decay)")
    consts = {"b1": b1}
    div = divergence_field(alpha, grid)
    if variant == "hardy":
        b2 = estimate_hardy_b2(alpha, grid)
    else:
        d = grid.dim - 1
        if d < 3:
            b2 = float("nan")
            notes.append("sufficient-condition variant needs n >= 4 (Sobolev embedding void)")
        else:
            sob = sobolev_constants(d)
            norm = boundary_lp_norm(div, grid, d)
            b2 = sob["Script_S_star"] * norm
            consts.update(Script_S_star=sob["Script_S_star"],
                          Script_S_star_exponent=sob["Script_S_star_exponent"],
                          div_norm=norm, div_norm_exponent=d)
    if _wall_limited(div, grid):
        notes.append("div(x' Im a) does not decay at the walls: its L^(n-1) norm "
                     "diverges on the half-space")
    consts["b2"] = b2
    prod = b1 * (b1 + b2)
    printed = 2 * prod
    proof = 2 * np.sqrt(prod) if np.isfinite(prod) else float("nan")
    conds = [_sectoriality(alpha, tol),
             Condition("radial_real_part", worst, -worst, _verdict(worst <= tol),
                       f"max x.grad Re a ({method})")]
    for name, val, label in (("smallness_printed", printed, "2 b1(b1+b2) < 1"),
                             ("smallness_proof", proof, "2 [b1(b1+b2)]^(1/2) < 1")):
        if np.isfinite(val):
            conds.append(Condition(name, float(val), float(1 - val), _verdict(val < 1), label))
        else:
            conds.append(Condition(name, float("nan"), float("nan"), "N/A", label))
    base_ok = all(c.verdict == "PASS" for c in conds[:2])
    variant_verdicts = {
        "printed": _verdict(base_ok and conds[2].verdict == "PASS"),
        "proof": _verdict(base_ok and conds[3].verdict == "PASS"),
    }
    return HypothesisReport("T1.5", conds, consts, float(printed) if np.isfinite(printed) else None,
                            variant_flags={"b2_variant": variant, "gradient_method": method,
                                           "reduces_to_selfadjoint": trivial},
                            variant_verdicts=variant_verdicts, warnings=notes,
                            alpha=alpha.provenance, grid=_grid_info(grid))
