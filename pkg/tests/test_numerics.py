import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatreach.errors import DomainError, InvalidArgument
from heatreach.numerics import (IntervalGrid, SpaceGrid, TimeGrid, composite_rule, gauss_legendre,
                                integrate_interval, integrate_time_halfline)


def test_gauss_legendre_small_rules():
    r1 = gauss_legendre(1)
    assert np.allclose(r1.nodes, [0.0]) and np.allclose(r1.weights, [2.0])
    r2 = gauss_legendre(2)
    assert np.allclose(r2.nodes, [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)
    assert np.allclose(r2.weights, [1.0, 1.0], atol=1e-15)


def test_gauss_legendre_exact_quartic():
    r = gauss_legendre(3)
    assert abs(r.integrate(r.nodes**4) - 0.4) < 1e-14


@pytest.mark.parametrize("n", [1, 2, 5, 16, 33])
def test_gauss_legendre_weights_and_symmetry(n):
    r = gauss_legendre(n)
    assert abs(r.weights.sum() - 2.0) < 1e-12
    assert np.all(np.diff(r.nodes) > 0)
    assert np.allclose(r.nodes, -r.nodes[::-1], atol=1e-12)


def test_gauss_legendre_rejects_zero():
    with pytest.raises(InvalidArgument):
        gauss_legendre(0)


def test_integrate_interval_examples():
    assert abs(integrate_interval(lambda x: np.ones_like(x), 0.0, 1.0) - 1.0) < 1e-14
    arcsine = integrate_interval(lambda x: 1 / np.sqrt(1 - x * x), -1.0, 1.0, graded=True)
    assert abs(arcsine - np.pi) < 1e-6
    osc = integrate_interval(lambda x: np.exp(1j * x), 0.0, np.pi)
    assert abs(osc - 2j) < 1e-12


def test_refinement_keeps_arcsine_within_tolerance():
    a = integrate_interval(lambda x: 1 / np.sqrt(1 - x * x), -1.0, 1.0, n_panels=16, graded=True)
    b = integrate_interval(lambda x: 1 / np.sqrt(1 - x * x), -1.0, 1.0, n_panels=32, graded=True)
    assert abs(a - b) < 1e-6


def test_composite_rule_breakpoints_are_edges():
    r = composite_rule(-1.0, 1.0, 8, 4, breakpoints=(0.0, 0.5))
    for b in (0.0, 0.5):
        assert np.any(np.isclose(r.edges, b))
    assert abs(r.weights.sum() - 2.0) < 1e-13


def test_split_panel_integrates_kink_exactly():
    r = composite_rule(-1.0, 1.0, 8, 8)
    x = 0.123
    sl, nodes, weights = r.split_panel(x)
    f = lambda s: np.abs(s - x)
    total = r.integrate(f(r.nodes)) - np.dot(r.weights[sl], f(r.nodes[sl])) + np.dot(weights, f(nodes))
    exact = ((1 + x) ** 2 + (1 - x) ** 2) / 2
    assert abs(total - exact) < 1e-14
    assert r.split_panel(0.0) is None


@pytest.mark.parametrize("c, expected", [(4.0, 1.0), (2.0 + 0j, 2.0), (4 + 4j, 0.5 - 0.5j)])
def test_time_halfline_examples(c, expected):
    for method in ("closed", "quadrature"):
        assert abs(integrate_time_halfline(c, 2, method) - expected) < 1e-10


def test_time_halfline_rejects_bad_input():
    with pytest.raises(DomainError):
        integrate_time_halfline(-1.0, 2)
    with pytest.raises(InvalidArgument):
        integrate_time_halfline(1.0, 3)


def test_time_halfline_three_halves_closed_form():
    # int t^{-3/2} e^{-c/4t} dt = 2 sqrt(pi / c)
    c = np.array([0.5, 2.0, 3 + 1j])
    got = integrate_time_halfline(c, 1.5, "quadrature")
    assert np.allclose(got, 2 * np.sqrt(np.pi / c), atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(-10.0, 10.0))
def test_time_halfline_matches_four_over_c(re, im):
    c = complex(re, im)
    assert abs(integrate_time_halfline(c, 2, "quadrature") - 4 / c) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 5))
def test_integrate_interval_is_linear(a, b, k):
    f = lambda x: np.cos(k * x)
    g = lambda x: x**3 - x
    lhs = integrate_interval(lambda x: a * f(x) + b * g(x), -1.0, 2.0)
    rhs = a * integrate_interval(f, -1.0, 2.0) + b * integrate_interval(g, -1.0, 2.0)
    assert abs(lhs - rhs) < 1e-12


def test_grids():
    g = SpaceGrid(1.0, 5)
    assert np.allclose(g.points, [-1, -0.5, 0, 0.5, 1]) and g.step == 0.5
    assert g.interior.size == 3
    h = IntervalGrid(0.0, 1.0, 3)
    assert np.allclose(h.points, [0, 0.5, 1])
    tg = TimeGrid(1.0, 4)
    assert np.allclose(tg.midpoints, [0.125, 0.375, 0.625, 0.875])
    with pytest.raises(InvalidArgument):
        SpaceGrid(1.0, 2)
    with pytest.raises(InvalidArgument):
        TimeGrid(0.0, 3)
