"""Second-kind Chebyshev polynomials and the explicit inverse of ``K_0``.

``K_0`` maps a density on (-L0, L0) to

    K_0 h(x) = 2/sqrt(pi) * int h(s) / ((x - s)**2 + L0**2 - s**2) ds.

Expanding the kernel with the generating function of ``U_n`` and using the
orthogonality of ``U_n`` for the weight ``sqrt(1 - s**2)`` gives an explicit
density for every polynomial target.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, InvalidArgument, LayoutMismatch, NumericalFailure
from .numerics import CompositeRule, composite_rule

PHASE_TAGS = ("plus_alpha", "minus_alpha", "zero")
DEFAULT_MAX_DEGREE = 64


def cheb_u(n: int, x):
    """``U_n(x)`` by the three-term recurrence (valid for any real x)."""
    if int(n) != n or n < 0:
        raise InvalidArgument(f"degree must be a nonnegative integer, got {n!r}")
    x = np.asarray(x, dtype=float)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for _ in range(int(n)):
        prev, cur = cur, 2.0 * x * cur - prev
    return cur if cur.ndim else float(cur)


def u_series(coefficients, x):
    """Clenshaw evaluation of ``sum_m c_m U_m(x)``."""
    c = np.asarray(coefficients)
    x = np.asarray(x, dtype=float)
    dtype = np.result_type(c, x, float)
    b1 = np.zeros(x.shape, dtype=dtype)
    b2 = np.zeros(x.shape, dtype=dtype)
    for ck in c[::-1]:
        b1, b2 = ck + 2.0 * x * b1 - b2, b1
    return b1


def default_rule(half_width: float, n_panels: int = 64, n_order: int = 16, breakpoints: Sequence[float] = ()) -> CompositeRule:
    """Graded composite rule on (-a, a); both ends carry square-root behaviour."""
    return composite_rule(-half_width, half_width, n_panels, n_order, breakpoints, graded=True)


def orthogonality_matrix(n_max: int, L0: float, rule: Optional[CompositeRule] = None) -> np.ndarray:
    """Gram matrix of ``U_n(s/L0)`` under the weight ``sqrt(1 - s**2/L0**2)``.

    The exact value is ``pi*L0/2`` times the identity.
    """
    if n_max < 0 or L0 <= 0:
        raise InvalidArgument("orthogonality_matrix needs n_max >= 0 and L0 > 0")
    if rule is None:
        rule = default_rule(L0, n_panels=8, n_order=max(16, n_max + 2))
    t = rule.nodes / L0
    weight = rule.weights * np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    U = np.empty((n_max + 1, t.size))
    U[0] = 1.0
    if n_max >= 1:
        U[1] = 2.0 * t
    for n in range(2, n_max + 1):
        U[n] = 2.0 * t * U[n - 1] - U[n - 2]
    return (U * weight) @ U.T


def series_kernel(x: float, x_tilde: float, L0: float, N: int):
    """Partial sum ``sum_{n<=N} (x/L0)**n U_n(x_tilde/L0)``.

    Converges geometrically with ratio ``|x|/L0`` to
    ``1 / ((x/L0)**2 - 2 (x/L0)(x_tilde/L0) + 1)``.
    """
    if abs(x) >= L0:
        raise DomainError(f"series diverges for |x| >= L0 (x={x}, L0={L0})")
    r = x / L0
    return float(u_series(r ** np.arange(int(N) + 1), x_tilde / L0))


@dataclass(frozen=True)
class PowerSeriesTarget:
    """Finite complex power series ``k(z) = sum_m k_m z**m``.

    ``truncation_error`` bounds the dropped tail on the radius it was
    computed for (zero for genuine polynomials).
    """

    coefficients: np.ndarray
    label: str = ""
    truncation_error: float = 0.0
    truncation_radius: float = 0.0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=complex)).copy()
        if c.ndim != 1 or c.size == 0:
            raise InvalidArgument("coefficients must be a nonempty 1-D sequence")
        if not np.all(np.isfinite(c)):
            raise NumericalFailure("non-finite power series coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def monomial(cls, m: int, scale: complex = 1.0) -> "PowerSeriesTarget":
        c = np.zeros(m + 1, dtype=complex)
        c[m] = scale
        return cls(c, label=f"z^{m}")

    @classmethod
    def from_taylor(cls, coefficient: Callable[[int], complex], degree: int, radius: float,
                    label: str = "", tail_terms: int = 400) -> "PowerSeriesTarget":
        """Truncate an entire series and record ``sum_{m>degree} |k_m| radius**m``."""
        c = np.array([coefficient(m) for m in range(degree + 1)], dtype=complex)
        tail = sum(abs(coefficient(m)) * radius**m for m in range(degree + 1, degree + 1 + tail_terms))
        return cls(c, label=label, truncation_error=float(tail), truncation_radius=float(radius))

    @property
    def degree(self) -> int:
        return self.coefficients.size - 1

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for c in self.coefficients[::-1]:
            out = out * z + c
        return out if out.ndim else complex(out)

    def scaled(self, factor: complex) -> "PowerSeriesTarget":
        return PowerSeriesTarget(self.coefficients * factor, self.label, abs(factor) * self.truncation_error,
                                 self.truncation_radius)

    def summability(self, radius: float) -> float:
        """``sum_m |k_m| radius**m``; finite for every finite radius."""
        return float(np.sum(np.abs(self.coefficients) * radius ** np.arange(self.coefficients.size)))

    def is_real(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coefficients.imag) <= tol))

    def to_json(self) -> str:
        pairs = [[float(c.real), float(c.imag)] for c in self.coefficients]
        return json.dumps({"coefficients": pairs, "label": self.label})

    @classmethod
    def from_json(cls, text: str, max_degree: int = DEFAULT_MAX_DEGREE) -> "PowerSeriesTarget":
        """Parse ``{"coefficients": [[re, im], ...], "label": "..."}``.

        A bare list of pairs is accepted too.
        """
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"malformed target JSON: {exc}") from None
        if isinstance(data, list):
            data = {"coefficients": data}
        try:
            pairs = data["coefficients"]
            coeffs = [complex(float(p[0]), float(p[1])) for p in pairs]
        except (KeyError, TypeError, IndexError, ValueError, AttributeError) as exc:
            raise InvalidArgument(f"malformed target JSON: {exc}") from None
        if len(coeffs) - 1 > max_degree:
            raise InvalidArgument(f"target degree {len(coeffs) - 1} exceeds the maximum {max_degree}")
        return cls(np.array(coeffs), label=str(data.get("label", "")))


@dataclass(frozen=True)
class Density:
    """Complex weight sampled on the nodes of a composite rule on (-a, a).

    ``phase_tag`` says which kernel the density belongs to. ``phase_p`` is the
    exponent of the phase family for the two alpha tags. ``evaluator``, when
    present, gives the same function at arbitrary points of (-a, a) and lets
    callers refine quadrature near kinks of other integrand factors.
    """

    half_width: float
    phase_tag: str
    rule: CompositeRule
    samples: np.ndarray
    phase_p: Optional[float] = None
    evaluator: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.phase_tag not in PHASE_TAGS:
            raise InvalidArgument(f"phase_tag must be one of {PHASE_TAGS}")
        if self.phase_tag != "zero" and self.phase_p is None:
            raise InvalidArgument("alpha-phased densities need phase_p")
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != self.rule.nodes.shape:
            raise LayoutMismatch("samples do not match the rule's node count")
        if not np.all(np.isfinite(s)):
            raise NumericalFailure("density has non-finite samples")
        if not (np.isclose(self.rule.a, -self.half_width) and np.isclose(self.rule.b, self.half_width)):
            raise LayoutMismatch("rule interval does not match the density half-width")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.nodes

    @property
    def weights(self) -> np.ndarray:
        return self.rule.weights

    @property
    def sign(self) -> int:
        return {"plus_alpha": 1, "minus_alpha": -1, "zero": 0}[self.phase_tag]

    def l2_norm_sq(self) -> float:
        return float(np.dot(self.weights, np.abs(self.samples) ** 2))

    def require_layout(self, rule: CompositeRule) -> None:
        if not self.rule.same_layout(rule):
            raise LayoutMismatch("density lives on a different quadrature layout")

    def scaled(self, factor: complex) -> "Density":
        ev = self.evaluator
        new_ev = None if ev is None else (lambda x, ev=ev, f=factor: f * ev(x))
        return Density(self.half_width, self.phase_tag, self.rule, self.samples * factor, self.phase_p, new_ev)

    def __call__(self, x):
        if self.evaluator is None:
            raise InvalidArgument("density has no pointwise evaluator")
        return self.evaluator(x)

    def csv_rows(self):
        for x, w, h in zip(self.nodes, self.weights, self.samples):
            yield (float(x), float(w), float(h.real), float(h.imag), self.phase_tag)


def invert_k0_evaluator(k: PowerSeriesTarget, L0: float) -> Callable:
    coeffs = k.coefficients * L0 ** np.arange(k.coefficients.size) * (L0 / np.sqrt(np.pi))

    def h(x):
        t = np.asarray(x, dtype=float) / L0
        return u_series(coeffs, t) * np.sqrt(np.clip(1.0 - t * t, 0.0, None))

    return h


def invert_k0(k: PowerSeriesTarget, L0: float, rule: Optional[CompositeRule] = None,
              n_panels: int = 64, n_order: int = 16, breakpoints: Sequence[float] = ()) -> Density:
    """Density ``h`` on (-L0, L0) with ``K_0 h = k`` on the ball of radius L0.

    ``h(s) = L0/sqrt(pi) * sum_m L0**m k_m U_m(s/L0) sqrt(1 - s**2/L0**2)``.
    """
    if L0 <= 0:
        raise InvalidArgument("L0 must be positive")
    if rule is None:
        rule = default_rule(L0, n_panels, n_order, breakpoints)
    ev = invert_k0_evaluator(k, L0)
    return Density(L0, "zero", rule, ev(rule.nodes), None, ev)


def hardy_norm_bound(k: PowerSeriesTarget, L0: float) -> float:
    """``int |h|**2 <= L0**3/2 * sum_m L0**(2m) |k_m|**2`` for ``h = invert_k0(k, L0)``."""
    m = np.arange(k.coefficients.size)
    return float(0.5 * L0**3 * np.sum(L0 ** (2 * m) * np.abs(k.coefficients) ** 2))
