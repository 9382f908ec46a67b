import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robinlap.errors import CapacityError, SizingError, UnsupportedDimensionError
from robinlap.grid import build_grid, radial_weight


def test_one_dimensional_nodes():
    g = build_grid(1, 10, 0.1)
    assert len(g.normal_nodes) == 101
    assert g.tangential_count == 0
    np.testing.assert_allclose(g.normal_nodes[[0, 1, -1]], [0, 0.1, 10])
    assert g.size == 101


def test_two_dimensional_nodes():
    g = build_grid(2, 1, 0.5)
    np.testing.assert_allclose(g.tangential_nodes, [-0.75, -0.25, 0.25, 0.75])
    np.testing.assert_allclose(g.normal_nodes, [0, 0.5, 1.0])
    assert g.size == 12


def test_three_dimensional_volume():
    g = build_grid(3, 1, 0.5)
    assert g.size == 48
    assert g.quadrature_weights.sum() == pytest.approx(4.0, rel=1e-12)
    assert g.surface_weights.sum() == pytest.approx(4.0, rel=1e-12)


def test_radial_weight_examples():
    g = build_grid(2, 1, 0.25)
    r, mask = radial_weight(g)
    g2 = build_grid(2, 1, 0.5)
    r2, _ = radial_weight(g2)
    i = list(g2.tangential_nodes).index(0.25)
    j = list(g2.normal_nodes).index(0.5)
    assert r2[i, j] == pytest.approx(0.559017, abs=1e-6)
    assert not mask.any()
    assert r.min() >= g.spacing / 2

    g1 = build_grid(1, 2, 0.5)
    r1, mask1 = radial_weight(g1)
    assert r1[0] == 0 and mask1[0] and mask1.sum() == 1

    g3 = build_grid(3, 1, 0.5)
    r3, _ = radial_weight(g3)
    i = list(g3.tangential_nodes).index(0.25)
    assert r3[i, i, 0] == pytest.approx(0.353553, abs=1e-6)


def test_sizing_and_capacity_errors():
    with pytest.raises(SizingError):
        build_grid(2, 1, 0.3)
    with pytest.raises(SizingError):
        build_grid(2, 1, 1.0)
    with pytest.raises(CapacityError):
        build_grid(3, 10, 0.05)
    with pytest.raises(UnsupportedDimensionError):
        build_grid(4, 1, 0.25, boundary_only=False)
    g4 = build_grid(4, 1, 0.25)
    assert g4.boundary_only and g4.shape == (8, 8, 8)


@settings(max_examples=30, deadline=None)
@given(dim=st.integers(1, 3), cells=st.integers(2, 8), L=st.floats(0.5, 5))
def test_weight_sums(dim, cells, L):
    g = build_grid(dim, L, L / cells)
    assert g.quadrature_weights.sum() == pytest.approx((2 * L) ** (dim - 1) * L, rel=1e-12)
    assert g.surface_weights.sum() == pytest.approx((2 * L) ** (dim - 1), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(dim=st.integers(1, 3), cells=st.integers(2, 6), coef=st.lists(st.floats(-3, 3), min_size=6, max_size=6))
def test_bilinear_quadrature_exact(dim, cells, coef):
    L = 1.5
    g = build_grid(dim, L, L / cells)
    # product of affine factors, degree <= 1 in each variable
    coords = g.coordinates()
    f = 1.0
    exact = 1.0
    for k, c in enumerate(coords):
        a, b = coef[2 * k], coef[2 * k + 1]
        f = f * (a + b * c)
        if k < dim - 1:
            exact *= 2 * L * a
        else:
            exact *= a * L + b * L ** 2 / 2
    assert g.integrate(np.broadcast_to(f, g.shape)) == pytest.approx(exact, rel=1e-10, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(dim=st.integers(1, 3), cells=st.integers(2, 5))
def test_doubling_extends_node_set(dim, cells):
    h = 0.25
    small = build_grid(dim, cells * h, h)
    large = build_grid(dim, 2 * cells * h, h)
    assert set(np.round(small.normal_nodes, 12)) <= set(np.round(large.normal_nodes, 12))
    assert set(np.round(small.tangential_nodes, 12)) <= set(np.round(large.tangential_nodes, 12))


def test_restrict_extend_roundtrip():
    g = build_grid(2, 1, 0.25)
    u = np.random.default_rng(0).normal(size=g.shape)
    u[..., -1] = 0
    np.testing.assert_array_equal(g.extend(g.restrict(u)), u)
