import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatreach.chebyshev import Density, PowerSeriesTarget, invert_k0
from heatreach.contour import ContourSpec, Phase, x_minus, x_plus
from heatreach.errors import InvalidArgument, LayoutMismatch
from heatreach.kernels import (apply_k0, apply_k_alpha, cauchy_densities, decompose, density_rule,
                               kernel_denominator, kr_values, residual_kr, write_density_csv)
from heatreach.numerics import composite_rule

SQRT_PI = np.sqrt(np.pi)
L, L0, EPS = 1.0, 1.2, 0.15


@pytest.fixture(scope="module")
def z_squared():
    return decompose(PowerSeriesTarget.monomial(2), L, L0, EPS)


def _sqrt_density(tag, p=None):
    rule = density_rule(1.0)
    return Density(1.0, tag, rule, np.sqrt(1 - rule.nodes**2), p)


def test_zero_phase_alpha_kernel_gives_root_pi():
    h = _sqrt_density("plus_alpha", 0)
    x = np.linspace(-0.99, 0.99, 51)
    assert np.max(np.abs(apply_k_alpha(h, 1, 1.0, x) - SQRT_PI)) < 1e-8


def test_k0_against_brute_force():
    # independent oracle: plain composite rule at ten times the panel count
    h = _sqrt_density("zero")
    x = np.linspace(-0.99, 0.99, 21)
    fine = composite_rule(-1.0, 1.0, 640, 16, breakpoints=(0.0,), graded=True)
    ker = 1.0 / ((x[:, None] - fine.nodes) ** 2 + 1 - fine.nodes**2)
    brute = 2 / SQRT_PI * ker @ (fine.weights * np.sqrt(1 - fine.nodes**2))
    assert np.max(np.abs(apply_k0(h, 1.0, x) - brute)) < 1e-9


def test_alpha_kernel_trivial_cases():
    rule = density_rule(L0, L)
    zero = Density(L0, "plus_alpha", rule, np.zeros(rule.size), 1)
    assert apply_k_alpha(zero, 1, L0, 0.3) == 0
    h = Density(L0, "plus_alpha", rule, np.cos(rule.nodes), 1)
    x = np.linspace(-0.9, 0.9, 7)
    assert np.allclose(apply_k_alpha(h.scaled(2.0), 1, L0, x), 2 * apply_k_alpha(h, 1, L0, x), atol=1e-14)


def test_sign_and_layout_checks():
    rule = density_rule(L0, L)
    h = Density(L0, "plus_alpha", rule, np.ones(rule.size), 1)
    with pytest.raises(InvalidArgument):
        apply_k_alpha(h, -1, L0, 0.0)
    with pytest.raises(LayoutMismatch):
        apply_k_alpha(h, 1, 1.3, 0.0)
    with pytest.raises(LayoutMismatch):
        apply_k_alpha(h, 1, L0, 0.0, rule=density_rule(L0, L, n_panels=32))
    z = Density(L0, "zero", rule, np.ones(rule.size))
    with pytest.raises(InvalidArgument):
        apply_k0(h, L0, 0.0)
    assert isinstance(apply_k0(z, L0, 0.0), complex)


def test_k0_real_and_symmetric():
    rule = density_rule(L0, L)
    h = Density(L0, "zero", rule, np.exp(-rule.nodes**2))
    out = apply_k0(h, L0, np.linspace(-0.9, 0.9, 19))
    assert np.max(np.abs(out.imag)) < 1e-12
    half = composite_rule(0.0, L0, 64, 32, graded=(False, True))
    f = lambda s: np.exp(-s * s) / (L0**2)  # kernel at x = 0 is 1/L0**2 for every s
    assert abs(apply_k0(h, L0, 0.0).real - 2 / SQRT_PI * 2 * half.integrate(f(half.nodes))) < 1e-12


def test_k0_kernel_positive_on_nodes():
    rule = density_rule(L0, L)
    ph = Phase(L0, 0, 0)
    x = np.linspace(-L, L, 41)
    den = kernel_denominator(x, rule.nodes, ph).real
    assert np.all(den >= (L0 - np.abs(x))[:, None] ** 2 - 1e-14)


def test_split_form_matches_direct():
    rng = np.random.default_rng(1)
    rule = density_rule(L0, L, n_panels=16, n_order=8)
    h = Density(L0, "minus_alpha", rule, rng.normal(size=rule.size) + 1j * rng.normal(size=rule.size), 1)
    x = rng.uniform(-0.99, 0.99, 1000)
    a = apply_k_alpha(h, -1, L0, x)
    b = apply_k_alpha(h, -1, L0, x, form="split")
    assert np.max(np.abs(a - b)) < 1e-12 * np.max(np.abs(a)) * 100


def test_cauchy_densities_zero_and_conjugation(z_squared):
    spec = ContourSpec(L0, EPS)
    rule = density_rule(L0, L)
    hp, hm = cauchy_densities(PowerSeriesTarget([0.0]), spec, rule)
    assert np.all(hp.samples == 0) and np.all(hm.samples == 0)
    # real coefficients: h_- is the conjugate of h_+
    assert np.max(np.abs(z_squared.h_minus.samples - np.conj(z_squared.h_plus.samples))) < 1e-14


def test_densities_continuous_at_zero(z_squared):
    e = np.array([-1e-9, 0.0, 1e-9])
    for h in (z_squared.h_plus, z_squared.h_minus):
        v = h(e)
        assert np.max(np.abs(v)) < 1e-12


def test_singularities_outside_ball():
    ph = ContourSpec(L0, EPS).phase
    s = np.linspace(0.001, L0 - 0.001, 500)
    assert np.all(np.abs(x_plus(-s, ph)) > L0)
    assert np.all(np.abs(x_minus(s, ph)) > L0)


def test_kr_zero_target():
    spec = ContourSpec(L0, EPS)
    hp, hm = cauchy_densities(PowerSeriesTarget([0.0]), spec, density_rule(L0, L))
    kr, diag = residual_kr(PowerSeriesTarget([0.0]), hp, hm, spec, 1.1)
    assert np.all(kr.coefficients == 0) and diag.degree == 0


def test_kr_series_matches_pole_sum_and_decays(z_squared):
    d = z_squared
    z = 0.9 * np.exp(1j * np.linspace(0, 2 * np.pi, 13))
    assert np.max(np.abs(d.residual_series(z) - kr_values(z, d.h_plus, d.h_minus, d.spec))) < 1e-10
    assert d.kr_diagnostics.decay_ratio <= d.L1 / d.L0 + 0.02
    assert d.L1 == (L + L0) / 2


@pytest.mark.parametrize("m", range(7))
def test_reconstruction_monomials(m):
    d = decompose(PowerSeriesTarget.monomial(m), L, L0, EPS)
    assert d.residuals["reconstruction_inf"] <= 1e-5


def test_reconstruction_constant_and_cubic():
    d = decompose(PowerSeriesTarget([2.5 - 1j]), L, L0, EPS)
    assert d.residuals["reconstruction_inf"] <= 1e-5
    d = decompose(PowerSeriesTarget.monomial(3), L, L0, EPS)
    x = np.linspace(-L, L, 101)
    assert np.max(np.abs(d.reconstruct(x) - x**3)) <= 1e-4


def test_decompose_is_linear(z_squared):
    d2 = decompose(PowerSeriesTarget.monomial(2, 2.0), L, L0, EPS)
    for a, b in ((d2.h_plus, z_squared.h_plus), (d2.h_minus, z_squared.h_minus), (d2.h_zero, z_squared.h_zero)):
        assert np.allclose(a.samples, 2 * b.samples, atol=1e-12)


@settings(max_examples=5, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=5))
def test_reconstruction_random_real_targets(c):
    d = decompose(PowerSeriesTarget(c), L, L0, EPS)
    assert d.residuals["reconstruction_inf"] <= 1e-5


def test_decompose_rejects_bad_widths():
    with pytest.raises(InvalidArgument):
        decompose(PowerSeriesTarget([1.0]), 1.3, 1.2, EPS)


def test_density_csv(tmp_path, z_squared):
    out = tmp_path / "h.csv"
    write_density_csv(z_squared.h_zero, out)
    lines = out.read_text().splitlines()
    assert len(lines) == z_squared.h_zero.rule.size + 1


def test_k0_round_trip_with_decomposed_residual(z_squared):
    h0 = invert_k0(z_squared.residual_series, z_squared.L1)
    x = np.linspace(-L, L, 31)
    assert np.max(np.abs(apply_k0(h0, z_squared.L1, x) - z_squared.residual_series(x))) < 1e-8
