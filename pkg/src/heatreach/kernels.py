"""Forward kernels ``K_alpha``, ``K_0`` and the three-term decomposition of a target.

A target ``k`` analytic near the square ``|Re z| + |Im z| <= L0 (1 + eps)`` is
written as ``K_alpha h_+ + K_{-alpha} h_- + K_{0,L1} h_0`` on (-L, L), with
``h_+-`` read off from Cauchy's formula on the contour C and ``h_0`` the
explicit ``K_0`` inverse of the remainder ``k_r``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .chebyshev import Density, PowerSeriesTarget, default_rule, invert_k0
from .contour import ContourSpec, Phase, gap_times_prime, sqrt_radicand, x_minus, x_plus, x_prime
from .errors import AccuracyError, ConsistencyError, InvalidArgument, LayoutMismatch
from .numerics import CompositeRule

SQRT_PI = np.sqrt(np.pi)


def _x_array(x):
    x = np.asarray(x, dtype=float)
    return np.atleast_1d(x), x.ndim == 0


def _phase_of(h: Density, sign: int, L0: float) -> Phase:
    if not np.isclose(h.half_width, L0, rtol=0, atol=1e-14 * max(1.0, L0)):
        raise LayoutMismatch(f"density half-width {h.half_width} differs from L0={L0}")
    if sign == 0 or h.phase_tag == "zero":
        if h.phase_tag != "zero" or sign != 0:
            raise InvalidArgument("zero-phase kernels take zero-phase densities only")
        return Phase(L0, 0, 0)
    if h.sign != sign:
        raise InvalidArgument(f"density tagged {h.phase_tag} cannot be used with sign {sign:+d}")
    return Phase(L0, h.phase_p, sign)


def kernel_denominator(x, nodes, phase: Phase):
    """``(x - s)**2 + L0**2 - s**2 + i alpha(s)`` on the grid ``x`` by ``nodes``."""
    x = np.asarray(x, dtype=float)[:, None]
    s = np.asarray(nodes)[None, :]
    return (x - s) ** 2 + phase.L0**2 - s * s + 1j * phase.alpha(nodes)[None, :]


def apply_k_alpha(h: Density, sign: int, L0: float, x, form: str = "direct",
                  rule: Optional[CompositeRule] = None):
    """``2/sqrt(pi) * int h(s) / ((x-s)**2 + L0**2 - s**2 + i sign alpha(s)) ds``.

    ``form="split"`` uses the partial fractions in ``X_{alpha,+-}`` instead of
    the quadratic denominator; the two agree to rounding.
    """
    if rule is not None:
        h.require_layout(rule)
    ph = _phase_of(h, sign, L0)
    xs, scalar = _x_array(x)
    nodes, wh = h.nodes, h.weights * h.samples
    if form == "direct":
        den = kernel_denominator(xs, nodes, ph)
        if np.min(np.abs(den)) < 1e-14:
            raise ConsistencyError("kernel denominator vanishes at a node")
        out = (2.0 / SQRT_PI) * ((1.0 / den) @ wh)
    elif form == "split":
        xp = x_plus(nodes, ph)
        xm = x_minus(nodes, ph)
        d = xs[:, None]
        ker = (1.0 / (d - xp) - 1.0 / (d - xm)) / (xp - xm)
        out = (2.0 / SQRT_PI) * (ker @ wh)
    else:
        raise InvalidArgument(f"unknown form {form!r}")
    return complex(out[0]) if scalar else out


def apply_k0(h: Density, L0: float, x, rule: Optional[CompositeRule] = None):
    """``K_0`` on (-L0, L0); the kernel is real and positive for ``|x| < L0``."""
    if rule is not None:
        h.require_layout(rule)
    ph = _phase_of(h, 0, L0)
    xs, scalar = _x_array(x)
    den = kernel_denominator(xs, h.nodes, ph).real
    if np.min(den) <= 0:
        raise ConsistencyError("K_0 kernel is not positive on the requested points")
    out = (2.0 / SQRT_PI) * ((1.0 / den) @ (h.weights * h.samples))
    return complex(out[0]) if scalar else out


def density_rule(half_width: float, L: Optional[float] = None, n_panels: int = 64, n_order: int = 32,
                 extra_breaks: Sequence[float] = ()) -> CompositeRule:
    """Graded layout on (-a, a) cut at 0 and, when given, at ``+-L``."""
    br = [0.0, *extra_breaks]
    if L is not None and L < half_width:
        br += [-L, L]
    return default_rule(half_width, n_panels, n_order, br)


def _cauchy_density_fn(k: PowerSeriesTarget, phase: Phase, which: str):
    # h = (X_+ - X_-) X' k(X) / (4 i sqrt(pi)) with X picked per side of 0.
    # The gap factor tends to 0 from both sides of s = 0, where alpha' jumps,
    # so the value there is set to that limit.
    def h(s):
        s = np.asarray(s, dtype=float)
        pos = s > 0
        if which == "plus":
            z = np.where(pos, x_plus(s, phase), x_minus(s, phase))
            gp = np.where(pos, gap_times_prime(s, phase, 1), gap_times_prime(s, phase, -1))
            out = k(z) * gp / (4j * SQRT_PI)
        else:
            # minus density lives on the conjugate paths; its gap is conj(X_-) - conj(X_+)
            z = np.where(pos, np.conj(x_plus(s, phase)), np.conj(x_minus(s, phase)))
            gp = np.where(pos, np.conj(gap_times_prime(s, phase, 1)), np.conj(gap_times_prime(s, phase, -1)))
            out = -k(z) * gp / (4j * SQRT_PI)
        if phase.p != 0:
            out = np.where(s == 0, 0.0, out)
        return out

    return h


def cauchy_densities(k: PowerSeriesTarget, spec: ContourSpec, rule: CompositeRule):
    """Densities ``h_+`` (phase ``+alpha``) and ``h_-`` (phase ``-alpha``) on (-L0, L0).

    Chosen so that every pole term of ``K_alpha h_+`` and ``K_{-alpha} h_-``
    lying on the contour reproduces the matching piece of Cauchy's formula
    for ``k`` on C.
    """
    ph = spec.phase
    fp = _cauchy_density_fn(k, ph, "plus")
    fm = _cauchy_density_fn(k, ph, "minus")
    hp = Density(spec.L0, "plus_alpha", rule, fp(rule.nodes), spec.p, fp)
    hm = Density(spec.L0, "minus_alpha", rule, fm(rule.nodes), spec.p, fm)
    return hp, hm


def cauchy_weights(h: Density, phase: Phase):
    """``rho = 2/sqrt(pi) * h / gap`` where gap is the root difference of the density's kernel."""
    s = h.nodes
    gap = 2j * sqrt_radicand(s, phase)
    if h.phase_tag == "minus_alpha":
        gap = np.conj(-gap)
    return (2.0 / SQRT_PI) * h.samples / gap


def kr_values(z, h_plus: Density, h_minus: Density, spec: ContourSpec):
    """Analytic extension of ``k - K_alpha h_+ - K_{-alpha} h_-`` into ``B(0, L0)``.

    Only the pole terms whose singularities lie outside ``B(0, L0)`` remain.
    """
    ph = spec.phase
    s = h_plus.nodes
    if not h_minus.rule.same_layout(h_plus.rule):
        raise LayoutMismatch("h_+ and h_- must share one layout")
    z = np.atleast_1d(np.asarray(z, dtype=complex))[:, None]
    w = h_plus.weights
    rp = cauchy_weights(h_plus, ph) * w
    rm = cauchy_weights(h_minus, ph) * w
    pos = s > 0
    xp, xm = x_plus(s, ph), x_minus(s, ph)
    # x > 0 keeps the X_- pole of K_alpha and the conj(X_-) pole of K_{-alpha}; x < 0 the X_+ ones
    pole_p = np.where(pos, xm, xp)
    sgn_p = np.where(pos, 1.0, -1.0)
    pole_m = np.where(pos, np.conj(xm), np.conj(xp))
    sgn_m = np.where(pos, -1.0, 1.0)
    return (1.0 / (z - pole_p)) @ (sgn_p * rp) + (1.0 / (z - pole_m)) @ (sgn_m * rm)


@dataclass
class KrDiagnostics:
    n_samples: int
    degree: int
    radius: float
    tail_ratio: float
    decay_ratio: float


def residual_kr(k: PowerSeriesTarget, h_plus: Density, h_minus: Density, spec: ContourSpec, L1: float,
                rel_tol: float = 1e-10, n_samples: int = 1024, max_samples: int = 8192):
    """Power series of ``k_r`` from samples on ``|z| = L1`` and a discrete Fourier transform.

    Returns the truncated series and decay diagnostics. Raises
    :class:`AccuracyError` when the coefficients do not fall below ``rel_tol``
    of the leading one within half the sample count.
    """
    if not 0 < L1 < spec.L0:
        raise InvalidArgument("L1 must lie in (0, L0)")
    n = int(n_samples)
    while True:
        theta = 2 * np.pi * np.arange(n) / n
        vals = kr_values(L1 * np.exp(1j * theta), h_plus, h_minus, spec)
        c = np.fft.fft(vals) / n
        scaled = np.abs(c[: n // 2])
        top = float(np.max(scaled))
        if top == 0.0:
            return PowerSeriesTarget(np.zeros(1), label="k_r"), KrDiagnostics(n, 0, L1, 0.0, 0.0)
        small = scaled < rel_tol * top
        # first index after which every coefficient is small
        big = np.nonzero(~small)[0]
        deg = int(big[-1]) if big.size else 0
        if deg < n // 2 - 8:
            break
        if 2 * n > max_samples:
            tail = float(np.max(scaled[-8:]) / top)
            raise AccuracyError(
                f"k_r coefficients decay too slowly: tail/lead = {tail:.2e} at {n} samples")
        n *= 2
    coeffs = c[: deg + 1] / L1 ** np.arange(deg + 1)
    tail = float(np.max(scaled[deg + 1:]) / top) if deg + 1 < scaled.size else 0.0
    m = np.arange(scaled.size)
    mask = scaled > 1e-14 * top
    decay = float(np.exp(np.polyfit(m[mask], np.log(scaled[mask]), 1)[0])) if mask.sum() > 2 else 0.0
    return PowerSeriesTarget(coeffs, label="k_r"), KrDiagnostics(n, deg, L1, tail, decay)


@dataclass
class DecompositionResult:
    h_plus: Density
    h_minus: Density
    h_zero: Density
    L: float
    L0: float
    L1: float
    spec: ContourSpec
    target: PowerSeriesTarget
    residual_series: PowerSeriesTarget
    residuals: dict = field(default_factory=dict)
    kr_diagnostics: Optional[KrDiagnostics] = None

    def reconstruct(self, x):
        return (apply_k_alpha(self.h_plus, 1, self.L0, x)
                + apply_k_alpha(self.h_minus, -1, self.L0, x)
                + apply_k0(self.h_zero, self.L1, x))


def decompose(k: PowerSeriesTarget, L: float, L0: float, eps: float, p: Optional[int] = None,
              n_panels: int = 64, n_order: int = 32, report_points: int = 101) -> DecompositionResult:
    """Split ``k`` into the three kernel images on (-L, L)."""
    if not 0 < L < L0:
        raise InvalidArgument("need 0 < L < L0")
    spec = ContourSpec(L0, eps, p)
    L1 = 0.5 * (L + L0)
    rule = density_rule(L0, L, n_panels, n_order)
    hp, hm = cauchy_densities(k, spec, rule)
    kr, diag = residual_kr(k, hp, hm, spec, L1)
    zero_panels = max(n_panels, kr.degree // 2)
    h0 = invert_k0(kr, L1, rule=density_rule(L1, L, zero_panels, n_order))
    res = DecompositionResult(hp, hm, h0, L, L0, L1, spec, k, kr, kr_diagnostics=diag)
    x = np.linspace(-L, L, report_points)
    kx = k(x)
    k_alpha = apply_k_alpha(hp, 1, L0, x) + apply_k_alpha(hm, -1, L0, x)
    k_zero = apply_k0(h0, L1, x)
    kr_direct = kr_values(x, hp, hm, spec)
    res.residuals = {
        "reconstruction_inf": float(np.max(np.abs(kx - k_alpha - k_zero))),
        "kr_identity_inf": float(np.max(np.abs(kx - k_alpha - kr_direct))),
        "kr_series_inf": float(np.max(np.abs(kr(x) - kr_direct))),
        "k0_inversion_inf": float(np.max(np.abs(k_zero - kr(x)))),
        "kr_degree": kr.degree,
        "kr_decay_ratio": diag.decay_ratio,
        "h_plus_l2": float(np.sqrt(hp.l2_norm_sq())),
        "h_minus_l2": float(np.sqrt(hm.l2_norm_sq())),
        "h_zero_l2": float(np.sqrt(h0.l2_norm_sq())),
    }
    return res


def write_density_csv(h: Density, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "weight", "re_h", "im_h", "phase_tag"])
        for row in h.csv_rows():
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
