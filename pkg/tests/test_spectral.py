import json

import numpy as np
import pytest

from robinlap.boundary import sample_alpha
from robinlap.grid import build_grid
from robinlap.operator import DiscreteOperator, assemble
from robinlap.spectral import (EigenPair, Spectrum, classify, cover_interval,
                               eig_nonselfadjoint, eig_selfadjoint, mass_fractions)


def _op(dim, L, h, alpha):
    g = build_grid(dim, L, h)
    return assemble(g, sample_alpha(alpha, g))


def test_half_line_bound_state():
    op = _op(1, 20, 0.005, -1)
    spec = classify(eig_selfadjoint(op, 1, -1.0))
    p = spec.pairs[0]
    assert p.value.real == pytest.approx(-1, rel=1e-3)
    assert p.residual <= 1e-8 and p.localized and "outside_cone" in p.tags
    (x,) = op.grid.coordinates()
    u = p.vector / p.vector[0]
    w = op.grid.quadrature_weights
    assert np.sqrt(np.sum(w * abs(u - np.exp(-x)) ** 2)) < 1e-3


def test_repulsive_half_line_has_no_localized_negative_state():
    op = _op(1, 10, 0.05, 1)
    spec = classify(eig_selfadjoint(op, 5, -1.0))
    assert min(p.value.real for p in spec.pairs) > 0
    assert not any(p.localized and p.value.real < 0 for p in spec.pairs)


def test_mixed_interval_spectrum_is_artifact():
    op = _op(1, np.pi, np.pi / 400, 0)
    spec = classify(eig_selfadjoint(op, 5, 0.0))
    np.testing.assert_allclose(spec.values.real, (np.arange(5) + 0.5) ** 2, rtol=2e-4)
    assert all(not p.localized for p in spec.pairs)


def test_wall_cosine_mode_classified_artifact():
    g = build_grid(1, np.pi, np.pi / 200)
    (x,) = g.coordinates()
    u = np.cos(x / 2)
    loc, wall = mass_fractions(u, g)
    # inner-half fraction of cos^2(x/2) on (0, pi) is 1/2 + 1/pi
    assert loc == pytest.approx(0.5 + 1 / np.pi, abs=1e-2)  # nodal indicator: O(h)
    pair = EigenPair(0.25, 0.0, loc, wall, u, ("certified",))
    spec = classify(Spectrum([pair]))
    assert "artifact" in spec.pairs[0].tags and "inside_cone" in spec.pairs[0].tags


def test_cone_tags():
    pair = EigenPair(1 + 0.5j, 0.0, 0.0, 1.0, np.zeros(3), ("certified",))
    assert "inside_cone" in classify(Spectrum([pair])).pairs[0].tags
    pair = EigenPair(-1, 0.0, 1.0, 0.0, np.zeros(3), ("certified",))
    assert classify(Spectrum([pair])).pairs[0].tags[1:] == ("outside_cone", "localized")


def test_two_paths_agree_for_real_alpha():
    op = _op(2, 3, 0.1, {"preset": "rational", "a": -2, "p": 1})
    sa = eig_selfadjoint(op, 6, -1.0)
    ns = eig_nonselfadjoint(op, [-1.0], 6, dense_threshold=100)
    a = np.sort(sa.values.real)
    b = np.sort(ns.values.real)
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_complex_constant_matches_dense_oracle():
    op = _op(2, 2, 0.2, -1 + 0.5j)
    dense = np.linalg.eigvals(op.matrix.toarray())
    spec = eig_nonselfadjoint(op, [-0.5 - 1j, 1 + 0j], 4, dense_threshold=10)
    for p in spec.pairs:
        assert p.residual <= 1e-8
        assert np.min(abs(dense - p.value)) <= 1e-8 * max(1, abs(p.value))


def test_zero_operator_block():
    op = _op(2, 1, 0.25, 0.3)
    zero = DiscreteOperator(op.matrix - op.matrix, op.grid, op.alpha)
    for thr in (10_000, 4):
        spec = eig_nonselfadjoint(zero, [0.0], 3, dense_threshold=thr)
        assert np.all(spec.values == 0) or np.allclose(spec.values, 0, atol=1e-12)


def test_shared_eigenvalues_are_merged():
    op = _op(1, 4, 0.01, -1)
    spec = eig_nonselfadjoint(op, [-1.0, -0.9], 2)
    vals = np.sort(spec.values.real)
    assert len(vals) == len(np.unique(np.round(vals, 6)))


def test_interval_cover_is_complete():
    op = _op(2, 3, 0.1, 0)
    spec = cover_interval(op, -1, 4, count=10)
    dense = np.linalg.eigvalsh(op.symmetrized().toarray().real)
    expected = dense[(dense >= -1) & (dense <= 4)]
    assert spec.info["complete"]
    np.testing.assert_allclose(np.sort(spec.values.real), expected, atol=1e-9)


def test_localized_pair_is_refinement_stable():
    vals = []
    for h in (0.02, 0.01):
        spec = classify(eig_selfadjoint(_op(1, 15, h, -1), 1, -1.0))
        assert spec.pairs[0].localized
        vals.append(spec.pairs[0].value.real)
    # O(h^2): lambda_h = -1 + h^2/4 + ...
    assert abs(vals[0] - vals[1]) == pytest.approx(0.25 * (0.02 ** 2 - 0.01 ** 2), rel=0.05)


def test_exports(tmp_path):
    spec = classify(eig_selfadjoint(_op(1, 5, 0.1, -1), 3, 0.0))
    spec.to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0].startswith("re_lambda,im_lambda,residual") and len(lines) == 4
    payload = json.loads(spec.to_json(tmp_path / "s.json"))
    assert len(payload["pairs"]) == 3 and payload["solver_info"]["method"]
