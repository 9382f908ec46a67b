import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robinlap.boundary import sample_alpha
from robinlap.bumps import random_bumps
from robinlap.errors import PreconditionError, SingularSolveError
from robinlap.grid import build_grid
from robinlap.operator import assemble
from robinlap.resolvent import (ShiftedSystem, distance_to_half_line, in_sector, l2_bound_check,
                                lambda_rectangle, solve, sweep, weighted_estimate)
from robinlap.spectral import eig_selfadjoint


@pytest.fixture(scope="module")
def free_plane():
    g = build_grid(2, 6, 0.2)
    return assemble(g, sample_alpha(0, g))


@pytest.fixture(scope="module")
def bumps(free_plane):
    return random_bumps(free_plane.grid, 20, seed=1)


def _norm(op, u):
    return op.norm(op.grid.restrict(u))


def test_distance_formula():
    assert distance_to_half_line(-3 + 4j) == 5
    assert distance_to_half_line(2 - 0.5j) == 0.5
    assert in_sector(1 + 1j) and not in_sector(1 + 1.01j) and not in_sector(-1)


class TestSolve:
    def test_recovers_manufactured_vector(self):
        g = build_grid(2, 3, 0.25)
        op = assemble(g, sample_alpha("1+0.3*I/(1+r^2)", g))
        rng = np.random.default_rng(0)
        v = rng.normal(size=op.size) + 1j * rng.normal(size=op.size)
        lam = 0.7 + 0.4j
        f = op.matrix @ v - lam * v
        u = solve(op, lam, f)
        np.testing.assert_allclose(g.restrict(u), v, atol=1e-10)

    def test_eigenmode_scaled(self):
        g = build_grid(1, np.pi, np.pi / 200)
        op = assemble(g, sample_alpha(0, g))
        pair = eig_selfadjoint(op, 1, 0.0).pairs[0]
        assert pair.value.real == pytest.approx(0.25, rel=1e-4)
        u = solve(op, -1.0, pair.vector)
        np.testing.assert_allclose(u, pair.vector / (pair.value.real + 1), atol=1e-12)

    def test_near_continuum_certified(self, free_plane, bumps):
        system = ShiftedSystem(free_plane, 1 + 0.01j)
        u = system.solve(bumps[0])
        assert _norm(free_plane, u) > _norm(free_plane, bumps[0])
        assert system.residual(u, bumps[0]) <= 1e-10

    def test_singular_shift(self):
        g = build_grid(1, np.pi, np.pi / 20)
        op = assemble(g, sample_alpha(0, g))
        lam = np.linalg.eigvals(op.matrix.toarray()).real.min()
        with pytest.raises(SingularSolveError):
            ShiftedSystem(op, lam)

    def test_warns_near_eigenvalue(self, free_plane):
        with pytest.warns(RuntimeWarning):
            ShiftedSystem(free_plane, -1.0, eigenvalues=[-1.0 + 1e-12])


class TestWeightedEstimate:
    def test_zero_source(self, free_plane):
        g = free_plane.grid
        z = np.zeros(g.shape)
        s = weighted_estimate(z, z, 2 + 1j, g)
        assert s.ratio_weighted == 0 and s.ratio_gradient == 0

    def test_undefined_ratio(self, free_plane):
        g = free_plane.grid
        with pytest.raises(PreconditionError):
            weighted_estimate(np.ones(g.shape), np.zeros(g.shape), 2 + 1j, g)

    def test_negative_shift_bound(self, free_plane, bumps):
        for f in bumps[:5]:
            u = solve(free_plane, -4.0, f)
            assert _norm(free_plane, u) <= _norm(free_plane, f) / 4 * (1 + 1e-12)
            s = weighted_estimate(u, f, -4.0, free_plane.grid)
            assert s.sector_tag == "outside" and s.gradient_variant == "u"

    def test_sector_dichotomy(self, free_plane, bumps):
        f = bumps[0]
        inside = weighted_estimate(solve(free_plane, 2 + 1j, f), f, 2 + 1j, free_plane.grid)
        real = weighted_estimate(solve(free_plane, -2.0, f), f, -2.0, free_plane.grid)
        assert (inside.sector_tag, inside.gradient_variant) == ("inside", "u_minus")
        assert real.gradient_variant == "u"

    @settings(max_examples=10, deadline=None)
    @given(st.floats(-3, 3), st.floats(0.2, 3), st.booleans())
    def test_selfadjoint_bound(self, re, im, flip):
        g = build_grid(2, 3, 0.25)
        op = assemble(g, sample_alpha("1/(1+r^2)", g))
        f = random_bumps(g, 1, seed=7)[0]
        lam = complex(re, -im if flip else im)
        u = solve(op, lam, f)
        assert _norm(op, u) <= _norm(op, f) / im * (1 + 1e-10)


class TestSweep:
    def test_empty_grid(self, free_plane, bumps):
        res = sweep(free_plane, [], bumps)
        assert res.samples == [] and res.summary["noop"]

    def test_duplicates_removed(self, free_plane, bumps):
        once = sweep(free_plane, [2 + 1j], bumps[:3], condition=False)
        twice = sweep(free_plane, [2 + 1j, 2 + 1j], bumps[:3], condition=False)
        assert once.summary == twice.summary

    def test_operator_norm_matches_distance(self, free_plane, bumps):
        res = sweep(free_plane, [-1 + 0.5j, -1 - 0.5j], bumps, operator_norms=True,
                    condition=False)
        assert res.summary["max_norm_vs_distance_rel_error"] <= 0.1

    def test_excluded_and_failed_points(self):
        g = build_grid(1, np.pi, np.pi / 20)
        op = assemble(g, sample_alpha(0, g))
        lam = np.linalg.eigvals(op.matrix.toarray()).real.min()
        f = [np.ones(g.shape)]
        res = sweep(op, [lam, 5 + 1j], f, eigenvalues=[lam])
        assert res.summary["excluded"] == [[lam, 0.0]] and len(res.samples) == 1
        res = sweep(op, [lam, 5 + 1j], f)
        assert res.summary["failures"] == 1 and len(res.samples) == 1

    def test_parallel_matches_serial(self, free_plane, bumps):
        lams = lambda_rectangle((-1, 1), (0.5, 1), 2, 2)
        a = sweep(free_plane, lams, bumps[:2], condition=False)
        b = sweep(free_plane, lams, bumps[:2], condition=False, jobs=2)
        assert [str(s.row()) for s in a.samples] == [str(s.row()) for s in b.samples]

    def test_outputs(self, free_plane, bumps, tmp_path):
        res = sweep(free_plane, lambda_rectangle((-1, 1), (0.5, 1), 2, 2), bumps[:2])
        res.to_csv(tmp_path / "s.csv")
        rows = list(csv.DictReader(open(tmp_path / "s.csv")))
        assert len(rows) == 8 and float(rows[0]["residual"]) <= 1e-10
        res.to_svg(tmp_path / "a.svg")
        first = (tmp_path / "a.svg").read_bytes()
        res.to_svg(tmp_path / "a.svg")
        assert first == (tmp_path / "a.svg").read_bytes()


class TestL2Bound:
    def test_zero(self, free_plane):
        g = free_plane.grid
        z = np.zeros(g.shape)
        d = l2_bound_check(z, z, 1j, sample_alpha(0, g), g)
        assert d == {"lhs": 0, "rhs": 0, "margin": 0}

    def test_real_lambda_rejected(self, free_plane):
        g = free_plane.grid
        with pytest.raises(PreconditionError):
            l2_bound_check(np.zeros(g.shape), np.zeros(g.shape), 1.0, sample_alpha(0, g), g)

    def test_real_coupling_many_sources(self, bumps):
        g = build_grid(2, 6, 0.2)
        alpha = sample_alpha("1/(1+r^2)", g)
        op = assemble(g, alpha)
        system = ShiftedSystem(op, 1 + 0.5j)
        for f in bumps:
            assert l2_bound_check(system.solve(f), f, 1 + 0.5j, alpha, g)["margin"] >= 0

    def test_complex_coupling(self):
        g = build_grid(2, 6, 0.2)
        alpha = sample_alpha("1+0.5*I/(1+r^2)", g)
        op = assemble(g, alpha)
        for f in random_bumps(g, 5, seed=9):
            for lam in (2 + 1j, -1 - 0.5j):
                assert l2_bound_check(solve(op, lam, f), f, lam, alpha, g)["margin"] >= 0

    @pytest.mark.parametrize("t", [0.1, 3.0, -2.0])
    def test_scaling(self, free_plane, bumps, t):
        g = free_plane.grid
        alpha = sample_alpha(0, g)
        f = bumps[1]
        u = solve(free_plane, 0.5 + 1j, f)
        base = l2_bound_check(u, f, 0.5 + 1j, alpha, g)
        scaled = l2_bound_check(solve(free_plane, 0.5 + 1j, t * f), t * f, 0.5 + 1j, alpha, g)
        assert scaled["lhs"] == pytest.approx(t * t * base["lhs"], rel=1e-10)
        assert scaled["rhs"] == pytest.approx(t * t * base["rhs"], rel=1e-10)
        assert scaled["margin"] >= 0 and base["margin"] >= 0
