import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatreach.chebyshev import (Density, PowerSeriesTarget, cheb_u, default_rule, hardy_norm_bound,
                                 invert_k0, orthogonality_matrix, series_kernel, u_series)
from heatreach.errors import DomainError, InvalidArgument, LayoutMismatch
from heatreach.kernels import apply_k0

SQRT_PI = np.sqrt(np.pi)


def test_cheb_u_values():
    assert cheb_u(0, 0.3) == 1.0
    assert cheb_u(1, 0.5) == 1.0
    assert cheb_u(5, 1.0) == 6.0
    theta = np.linspace(0.1, 3.0, 7)
    # trigonometric form as an independent check
    assert np.allclose(cheb_u(4, np.cos(theta)), np.sin(5 * theta) / np.sin(theta), atol=1e-13)
    with pytest.raises(InvalidArgument):
        cheb_u(-1, 0.0)


def test_u_series_matches_sum_of_polynomials():
    c = np.array([0.5, -1.0, 2.0, 0.25j])
    x = np.linspace(-1, 1, 9)
    direct = sum(ck * cheb_u(k, x) for k, ck in enumerate(c))
    assert np.allclose(u_series(c, x), direct, atol=1e-14)


def test_orthogonality_examples():
    g1 = orthogonality_matrix(3, 1.0)
    assert abs(g1[0, 0] - np.pi / 2) < 1e-12
    assert abs(g1[0, 1]) < 1e-12
    g2 = orthogonality_matrix(3, 2.0)
    assert abs(g2[3, 3] - np.pi) < 1e-10
    assert np.allclose(g2, np.pi * np.eye(4), atol=1e-10)


def test_series_kernel_examples():
    assert series_kernel(0.0, 0.7, 1.0, 10) == 1.0
    assert abs(series_kernel(0.5, 0.0, 1.0, 40) - 0.8) < 1e-10
    assert abs(series_kernel(0.9, 0.9, 1.0, 2000) - 1 / 0.19) < 1e-10
    with pytest.raises(DomainError):
        series_kernel(1.0, 0.0, 1.0, 5)


def test_series_kernel_geometric_convergence():
    x, xt, L0 = 0.6, -0.3, 1.0
    exact = 1.0 / (x * x - 2 * x * xt + 1)
    errs = [abs(series_kernel(x, xt, L0, N) - exact) for N in (10, 20, 30)]
    ratios = [errs[1] / errs[0], errs[2] / errs[1]]
    assert all(r < 0.6**10 * 20 for r in ratios)


def test_target_basics():
    k = PowerSeriesTarget([1, 2, 3])
    assert k(0.0) == 1
    assert k(2.0) == 1 + 4 + 12
    assert k.degree == 2
    assert k.summability(2.0) == 17.0
    assert k.is_real()
    back = PowerSeriesTarget.from_json(k.to_json())
    assert np.array_equal(back.coefficients, k.coefficients)
    bare = PowerSeriesTarget.from_json("[[0, 0], [1, -1]]")
    assert bare(1.0) == 1 - 1j


@pytest.mark.parametrize("text", ["{bad", '{"coefficients": 3}', '"x"', '{"nope": []}'])
def test_target_json_errors(text):
    with pytest.raises(InvalidArgument):
        PowerSeriesTarget.from_json(text)


def test_target_degree_cap():
    text = json.dumps({"coefficients": [[1, 0]] * 70})
    with pytest.raises(InvalidArgument):
        PowerSeriesTarget.from_json(text)


def test_truncated_exponential_records_tail():
    from math import factorial
    k = PowerSeriesTarget.from_taylor(lambda m: 1 / factorial(m), 12, 1.38, label="exp")
    # the first dropped term alone is 1.38**13 / 13!
    assert 1.38**13 / factorial(13) < k.truncation_error < 2 * 1.38**13 / factorial(13)
    assert abs(k(1.38) - np.exp(1.38)) <= k.truncation_error + 1e-14


def test_invert_k0_examples():
    x = np.linspace(-0.99, 0.99, 11)
    h = invert_k0(PowerSeriesTarget([SQRT_PI]), 1.0)
    assert np.allclose(h(x), np.sqrt(1 - x * x), atol=1e-14)
    h = invert_k0(PowerSeriesTarget([0, 1]), 1.0)
    assert np.allclose(h(x), 2 * x * np.sqrt(1 - x * x) / SQRT_PI, atol=1e-14)
    h = invert_k0(PowerSeriesTarget([0]), 1.0)
    assert np.all(h.samples == 0)


def test_k0_of_sqrt_is_constant():
    h = invert_k0(PowerSeriesTarget([SQRT_PI]), 1.0)
    x = np.linspace(-0.99, 0.99, 101)
    assert np.max(np.abs(apply_k0(h, 1.0, x) - SQRT_PI)) < 1e-8


def test_round_trip_z_squared_at_point():
    h = invert_k0(PowerSeriesTarget.monomial(2), 1.2)
    assert abs(apply_k0(h, 1.2, np.array([0.3]))[0] - 0.09) < 1e-6


coeffs = st.lists(st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False),
                  min_size=1, max_size=11)


@settings(max_examples=20, deadline=None)
@given(coeffs)
def test_round_trip_property(c):
    k = PowerSeriesTarget(c)
    h = invert_k0(k, 1.2)
    x = np.linspace(-1, 1, 101)
    assert np.max(np.abs(apply_k0(h, 1.2, x) - k(x))) < 1e-6


@settings(max_examples=20, deadline=None)
@given(coeffs, st.floats(0.3, 3.0))
def test_norm_bound_property(c, L0):
    k = PowerSeriesTarget(c)
    h = invert_k0(k, L0)
    assert h.l2_norm_sq() <= hardy_norm_bound(k, L0) + 1e-8


def test_norm_bound_unit_radius_form():
    # at L0 = 1 the bound with prefactor L0/2 coincides with the general one
    k = PowerSeriesTarget([0.3, -1, 0.5j, 2])
    h = invert_k0(k, 1.0)
    assert h.l2_norm_sq() <= 0.5 * np.sum(np.abs(k.coefficients) ** 2) + 1e-8
    assert abs(hardy_norm_bound(k, 1.0) - 0.5 * np.sum(np.abs(k.coefficients) ** 2)) < 1e-14


def test_norm_bound_small_prefactor_fails_for_wide_intervals():
    # with prefactor L0/2 instead of L0**3/2 the bound is violated once L0 > 1
    k = PowerSeriesTarget([1.0])
    L0 = 2.0
    h = invert_k0(k, L0)
    assert h.l2_norm_sq() > 0.5 * L0
    assert h.l2_norm_sq() <= hardy_norm_bound(k, L0)


def test_density_validation():
    rule = default_rule(1.0, 4, 4)
    with pytest.raises(InvalidArgument):
        Density(1.0, "bogus", rule, np.zeros(rule.size))
    with pytest.raises(InvalidArgument):
        Density(1.0, "plus_alpha", rule, np.zeros(rule.size))
    with pytest.raises(LayoutMismatch):
        Density(1.0, "zero", rule, np.zeros(rule.size + 1))
    d = Density(1.0, "zero", rule, np.ones(rule.size))
    with pytest.raises(LayoutMismatch):
        d.require_layout(default_rule(1.0, 8, 4))
    assert abs(d.l2_norm_sq() - 2.0) < 1e-13
    with pytest.raises(ValueError):
        d.samples[0] = 3.0
