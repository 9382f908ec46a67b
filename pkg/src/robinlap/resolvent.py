"""Resolvent solves, weighted resolvent ratios and the a-priori L2 bound."""

from __future__ import annotations

import csv
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .boundary import BoundaryFunction
from .calculus import gradient_energy, node_integral
from .errors import PreconditionError, SingularSolveError
from .grid import Grid, radial_weight
from .multipliers import u_minus_transform
from .operator import DiscreteOperator

SOLVE_TOL = 1e-10
SINGULAR_CONDITION = 1e12
EXCLUSION_RADIUS = 1e-3


def distance_to_half_line(lam: complex) -> float:
    """``dist(lam, [0, inf))``."""
    lam = complex(lam)
    return abs(lam.imag) if lam.real >= 0 else abs(lam)


def in_sector(lam: complex) -> bool:
    lam = complex(lam)
    return abs(lam.imag) <= lam.real


class ShiftedSystem:
    """Sparse LU of ``A - lam I`` on the free unknowns, reused across right-hand sides."""

    def __init__(self, op: DiscreteOperator, lam: complex, eigenvalues=None):
        self.op = op
        self.lam = complex(lam)
        if eigenvalues is not None:
            near = [e for e in eigenvalues if abs(complex(e) - self.lam) <= 1e-10]
            if near:
                warnings.warn(f"lambda = {self.lam} is within 1e-10 of a discrete eigenvalue",
                              RuntimeWarning, stacklevel=2)
        n = op.size
        self.shifted = (op.matrix.astype(complex) - self.lam * sp.identity(n, format="csr")).tocsc()
        try:
            self.lu = spla.splu(self.shifted, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise SingularSolveError(f"A - lambda I is singular at lambda = {self.lam}",
                                     float("inf")) from exc
        self._cond = None
        diag = np.abs(self.lu.U.diagonal())
        # a tiny pivot is conclusive; otherwise the condition estimate decides
        if diag.min() <= 1e-14 * diag.max() or self.condition_estimate() > SINGULAR_CONDITION:
            raise SingularSolveError(f"A - lambda I is numerically singular at {self.lam}",
                                     self.condition_estimate())

    def solve_free(self, f_free: np.ndarray, adjoint: bool = False) -> np.ndarray:
        return self.lu.solve(np.asarray(f_free, dtype=complex), trans="H" if adjoint else "N")

    def solve(self, f: np.ndarray) -> np.ndarray:
        """Full-grid solution of ``(A - lam) u = f`` (``f`` full-grid or free)."""
        grid = self.op.grid
        f = np.asarray(f, dtype=complex)
        f_free = grid.restrict(f) if f.size == grid.size else f.ravel()
        return grid.extend(self.solve_free(f_free))

    def residual(self, u: np.ndarray, f: np.ndarray) -> float:
        """``||(A - lam) u - f||_W / ||f||_W`` (0 for ``f = 0, u = 0``)."""
        grid = self.op.grid
        u_free = grid.restrict(u)
        f = np.asarray(f, dtype=complex)
        f_free = grid.restrict(f) if f.size == grid.size else f.ravel()
        r = self.shifted @ u_free - f_free
        fn = self.op.norm(f_free)
        rn = self.op.norm(r)
        return float(rn / fn) if fn > 0 else float(rn)

    def condition_estimate(self) -> float:
        """One-norm condition estimate ``||M||_1 ||M^{-1}||_1``."""
        if getattr(self, "_cond", None) is None:
            n = self.op.size
            inv = spla.LinearOperator((n, n), dtype=complex,
                                      matvec=lambda x: self.lu.solve(np.asarray(x, complex).ravel()),
                                      rmatvec=lambda x: self.lu.solve(np.asarray(x, complex).ravel(),
                                                                      trans="H"))
            norm_a = spla.norm(self.shifted, 1)
            try:
                norm_inv = spla.onenormest(inv)
            except Exception:     # pragma: no cover - estimator breakdown
                norm_inv = float("inf")
            self._cond = float(norm_a * norm_inv)
        return self._cond

    def operator_norm(self, seeds=None, tol: float = 1e-8) -> float:
        """``||(A - lam)^{-1}||`` in the weighted norm, by Lanczos on ``B^H B``.

        ``B = S R S^{-1}`` with ``S = W^{1/2}`` is the Euclidean form of the
        resolvent ``R``; ``seeds`` (full-grid fields) build the start vector.
        """
        s = np.sqrt(self.op.weights)
        n = self.op.size

        def normal_op(x):
            y = s * self.lu.solve(np.asarray(x, complex).ravel() / s)
            return self.lu.solve(s * y, trans="H") / s

        if n <= 2:
            M = np.column_stack([normal_op(e) for e in np.eye(n)])
            return float(np.sqrt(np.max(np.linalg.eigvalsh((M + M.conj().T) / 2))))
        v0 = None
        if seeds:
            v0 = sum(s * self.op.grid.restrict(np.asarray(f, complex)) for f in seeds)
            if not np.any(v0):
                v0 = None
        op = spla.LinearOperator((n, n), dtype=complex, matvec=normal_op)
        val = spla.eigsh(op, k=1, which="LM", v0=v0, tol=tol, return_eigenvectors=False)
        return float(np.sqrt(abs(val[0])))


def solve(op: DiscreteOperator, lam: complex, f: np.ndarray, eigenvalues=None) -> np.ndarray:
    """Solve ``(A - lam) u = f``; raises :class:`SingularSolveError` when singular."""
    return ShiftedSystem(op, lam, eigenvalues).solve(f)


@dataclass
class ResolventSample:
    lam: complex
    ratio_weighted: float
    ratio_gradient: float
    sector_tag: str
    residual: float = 0.0
    cond_estimate: float = float("nan")
    f_index: int = 0
    gradient_variant: str = "u"
    l2_margin: float = float("nan")     # rhs - lhs of the a-priori bound (Im lam != 0)
    l2_scale: float = float("nan")

    def row(self) -> dict:
        return {"re_lambda": self.lam.real, "im_lambda": self.lam.imag,
                "sector": self.sector_tag, "ratio_weighted": self.ratio_weighted,
                "ratio_gradient": self.ratio_gradient, "residual": self.residual,
                "cond_estimate": self.cond_estimate, "f_index": self.f_index,
                "l2_margin": self.l2_margin}


def weighted_estimate(u, f, lam: complex, grid: Grid, residual: float = 0.0,
                      cond_estimate: float = float("nan"), f_index: int = 0) -> ResolventSample:
    """``||u/r|| / ||r f||`` and the gradient ratio appropriate to the sector of ``lam``."""
    lam = complex(lam)
    u = np.asarray(u, dtype=complex).reshape(grid.shape)
    f = np.asarray(f, dtype=complex).reshape(grid.shape)
    r, singular = radial_weight(grid)
    rf = np.sqrt(node_integral(r ** 2 * np.abs(f) ** 2, grid).real)
    inv_r = np.divide(1.0, r, out=np.zeros_like(r), where=~singular)
    u_over_r = np.sqrt(node_integral(inv_r ** 2 * np.abs(u) ** 2, grid,
                                     exclude_singular=singular).real)
    inside = in_sector(lam)
    if inside and lam.imag != 0:
        target, variant = u_minus_transform(u, lam, grid), "u_minus"
    else:
        target, variant = u, "u"
    grad = np.sqrt(gradient_energy(target, grid).real)
    if rf == 0:
        if u_over_r == 0 and grad == 0:
            weighted = gradient = 0.0
        else:
            raise PreconditionError("||r f|| = 0: the weighted ratio is undefined")
    else:
        weighted, gradient = float(u_over_r / rf), float(grad / rf)
    return ResolventSample(lam, weighted, gradient, "inside" if inside else "outside",
                           residual, cond_estimate, f_index, variant)


@dataclass
class SweepResult:
    samples: list[ResolventSample]
    summary: dict
    failures: list[dict] = field(default_factory=list)
    norms: list[dict] = field(default_factory=list)

    def to_csv(self, path: str | Path) -> None:
        cols = ["re_lambda", "im_lambda", "sector", "ratio_weighted", "ratio_gradient",
                "residual", "cond_estimate", "f_index", "l2_margin"]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            for s in self.samples:
                w.writerow(s.row())

    def to_svg(self, path: str | Path) -> None:
        """Heatmap of the sup over ``f`` of ``ratio_weighted`` on the lambda rectangle."""
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        matplotlib.rcParams["svg.hashsalt"] = "robinlap"
        best = {}
        for s in self.samples:
            best[s.lam] = max(best.get(s.lam, 0.0), s.ratio_weighted)
        re = sorted({l.real for l in best})
        im = sorted({l.imag for l in best})
        grid = np.full((len(im), len(re)), np.nan)
        for l, v in best.items():
            grid[im.index(l.imag), re.index(l.real)] = v
        fig, ax = plt.subplots(figsize=(5, 4))
        if best:
            mesh = ax.imshow(grid, origin="lower", aspect="auto",
                             extent=[min(re), max(re) + 1e-12, min(im), max(im) + 1e-12])
            fig.colorbar(mesh, ax=ax, label="sup ratio_weighted")
        ax.set_xlabel("Re lambda")
        ax.set_ylabel("Im lambda")
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def lambda_rectangle(re_range, im_range, re_count: int, im_count: int) -> list[complex]:
    re = np.linspace(*re_range, re_count)
    im = np.linspace(*im_range, im_count)
    return [complex(a, b) for b in im for a in re]


def _dedupe(lams) -> list[complex]:
    seen, out = set(), []
    for l in lams:
        key = complex(l)
        if key not in seen:
            seen.add(key)
            out.append(key)
    return out


def sweep(op: DiscreteOperator, lambda_grid, f_family, *, eigenvalues=None,
          exclusion_radius: float = EXCLUSION_RADIUS, operator_norms: bool = False,
          condition: bool = True, jobs: int = 1) -> SweepResult:
    """Solve for every ``(lam, f)`` pair, sharing one factorization per ``lam``."""
    lams = _dedupe(lambda_grid)
    excluded = []
    if eigenvalues is not None:
        ev = [complex(e) for e in eigenvalues]
        keep = []
        for l in lams:
            (excluded if any(abs(l - e) < exclusion_radius for e in ev) else keep).append(l)
        lams = keep
    family = list(f_family)

    def work(item):
        idx, lam = item
        try:
            system = ShiftedSystem(op, lam)
        except SingularSolveError as exc:
            return idx, [], [{"lambda": lam, "error": str(exc),
                              "cond_estimate": exc.condition_estimate}], None
        cond = system.condition_estimate() if condition else float("nan")
        samples = []
        for j, f in enumerate(family):
            u = system.solve(f)
            res = system.residual(u, f)
            sample = weighted_estimate(u, f, lam, op.grid, res, cond, j)
            if lam.imag != 0:
                bound = l2_bound_check(u, f, lam, op.alpha, op.grid)
                sample.l2_margin = bound["margin"]
                sample.l2_scale = max(bound["lhs"], bound["rhs"])
            samples.append(sample)
        norm = None
        if operator_norms:
            norm = {"lambda": lam, "operator_norm": system.operator_norm(family),
                    "inverse_distance": 1 / distance_to_half_line(lam)
                    if distance_to_half_line(lam) > 0 else float("inf")}
        return idx, samples, [], norm

    items = list(enumerate(lams))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, items))
    else:
        results = [work(it) for it in items]
    results.sort(key=lambda r: r[0])
    samples = [s for r in results for s in r[1]]
    failures = [f for r in results for f in r[2]]
    norms = [r[3] for r in results if r[3] is not None]
    summary = _summarize(samples, norms, lams, excluded, failures)
    return SweepResult(samples, summary, failures, norms)


def _summarize(samples, norms, lams, excluded, failures) -> dict:
    summary = {"lambda_count": len(lams), "sample_count": len(samples),
               "noop": not lams, "excluded": [[l.real, l.imag] for l in excluded],
               "failures": len(failures)}
    for tag in ("inside", "outside"):
        sel = [s for s in samples if s.sector_tag == tag]
        summary[f"sup_ratio_weighted_{tag}"] = max((s.ratio_weighted for s in sel), default=None)
        summary[f"sup_ratio_gradient_{tag}"] = max((s.ratio_gradient for s in sel), default=None)
    summary["max_residual"] = max((s.residual for s in samples), default=None)
    rel = [s.l2_margin / s.l2_scale for s in samples if s.l2_scale > 0]
    summary["min_l2_relative_margin"] = min(rel, default=None)
    if norms:
        summary["max_norm_vs_distance_rel_error"] = max(
            abs(n["operator_norm"] / n["inverse_distance"] - 1) for n in norms)
    return summary


def l2_bound_check(u, f, lam: complex, alpha: BoundaryFunction, grid: Grid) -> dict:
    """``||u||^2 <= |Im lam|^{-1} (int_bdry |Im alpha||u|^2 + int |f||u|)``."""
    lam = complex(lam)
    if lam.imag == 0:
        raise PreconditionError("the a-priori L2 bound needs Im lambda != 0")
    u = np.asarray(u, dtype=complex).reshape(grid.shape)
    f = np.asarray(f, dtype=complex).reshape(grid.shape)
    lhs = float(node_integral(np.abs(u) ** 2, grid).real)
    bdry = float(np.sum(grid.surface_weights * np.abs(alpha.samples.imag) * np.abs(u[..., 0]) ** 2))
    vol = float(node_integral(np.abs(f) * np.abs(u), grid).real)
    rhs = (bdry + vol) / abs(lam.imag)
    return {"lhs": lhs, "rhs": rhs, "margin": rhs - lhs}


def sample_dict(sample: ResolventSample) -> dict:
    d = asdict(sample)
    d["lam"] = [sample.lam.real, sample.lam.imag]
    return d
