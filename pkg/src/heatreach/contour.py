"""Phase family ``alpha_p``, the singularity paths ``X_{alpha,+-}`` and the contour C.

Rescaled coordinates use ``tau = x/L0`` and ``L0 = 1``. Physical quantities
follow from ``X(x) = L0 * Xhat(x/L0)`` and ``alpha(x) = L0**2 * alphahat(x/L0)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BranchCutError, CapabilityError, ConsistencyError, DomainError, InvalidArgument

P_MAX = 10**6
GRID_SIZE = 10**4


def _tau_check(tau):
    tau = np.asarray(tau, dtype=float)
    if np.any(np.abs(tau) > 1.0 + 1e-14):
        raise DomainError("tau must lie in [-1, 1]")
    return tau


def alpha_p(tau, p: float):
    """``2|tau| (1 - tau**(2p))``; ``p = 0`` gives the zero phase."""
    tau = _tau_check(tau)
    a = np.abs(tau)
    out = 2.0 * a * (1.0 - a ** (2 * p))
    return out if out.ndim else float(out)


def alpha_p_prime(tau, p: float):
    """One-sided derivative of :func:`alpha_p`; the value at 0 is the average 0."""
    tau = _tau_check(tau)
    a = np.abs(tau)
    out = 2.0 * np.sign(tau) * (1.0 - (2 * p + 1) * a ** (2 * p))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Phase:
    """Physical phase ``sign * L0**2 * alpha_p(x/L0)`` on (-L0, L0)."""

    L0: float
    p: float
    sign: int = 1

    def __post_init__(self):
        if self.L0 <= 0:
            raise InvalidArgument("L0 must be positive")
        if self.p < 0:
            raise InvalidArgument("p must be nonnegative")
        if self.sign not in (-1, 0, 1):
            raise InvalidArgument("sign must be -1, 0 or 1")

    def alpha(self, x):
        return self.sign * self.L0**2 * alpha_p(np.asarray(x) / self.L0, self.p)

    def alpha_prime(self, x):
        return self.sign * self.L0 * alpha_p_prime(np.asarray(x) / self.L0, self.p)

    def flipped(self) -> "Phase":
        return Phase(self.L0, self.p, -self.sign)


def _radicand(x, phase: Phase):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > phase.L0 * (1 + 1e-14)):
        raise DomainError("|x| must not exceed L0")
    q = phase.L0**2 - x * x + 1j * phase.alpha(x)
    cut = (q.imag == 0.0) & (q.real < 0.0)
    if np.any(cut):
        raise BranchCutError("square-root argument on the negative real axis")
    return q


def sqrt_radicand(x, phase: Phase):
    """Principal ``sqrt(L0**2 - x**2 + i alpha(x))``."""
    return np.sqrt(_radicand(x, phase))


def radicand_prime(x, phase: Phase):
    """``d/dx (L0**2 - x**2 + i alpha(x)) = -2x + i alpha'(x)``."""
    return -2.0 * np.asarray(x, dtype=float) + 1j * phase.alpha_prime(x)


def x_plus(x, phase: Phase):
    out = np.asarray(x) + 1j * sqrt_radicand(x, phase)
    return out if np.ndim(out) else complex(out)


def x_minus(x, phase: Phase):
    out = np.asarray(x) - 1j * sqrt_radicand(x, phase)
    return out if np.ndim(out) else complex(out)


def x_prime(x, phase: Phase, branch: int):
    """Derivative of ``X_{alpha,branch}`` (``branch`` is +1 or -1); infinite at +-L0."""
    s = sqrt_radicand(x, phase)
    num = radicand_prime(x, phase)
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1.0 + branch * 1j * num / (2.0 * s)


def gap_times_prime(x, phase: Phase, branch: int):
    """Bounded product ``(X_+ - X_-) X_branch'``."""
    s = sqrt_radicand(x, phase)
    num = radicand_prime(x, phase)
    return 2j * s - branch * num


def gamma_theta(tau, p: float):
    """Modulus and half-plane angle of ``1 - tau**2 + i alpha_p(tau)``.

    At ``tau = +-1`` the continuous extension ``gamma = 0``, ``theta = pi/2``
    is returned.
    """
    tau = _tau_check(tau)
    re = 1.0 - tau * tau
    im = alpha_p(tau, p)
    g = np.hypot(re, im)
    th = np.where(g > 0, np.arctan2(im, re), np.pi / 2)
    if g.ndim == 0:
        return float(g), float(th)
    return g, th


def g_p(tau, p: float):
    """l1 excess ``|Re X_+| + |Im X_+| - 1`` of the rescaled path on (0, 1)."""
    tau = np.asarray(tau, dtype=float)
    gam, _ = gamma_theta(tau, p)
    w = 1.0 - tau * tau
    out = (tau - 1.0) + (np.sqrt(np.clip(gam + w, 0, None)) - np.sqrt(np.clip(gam - w, 0, None))) / math.sqrt(2.0)
    return out if np.ndim(out) else float(out)


def g_sup(p: float, n_grid: int = GRID_SIZE) -> float:
    """Maximum of :func:`g_p` over ``linspace(0, 1, n_grid)``."""
    return float(np.max(g_p(np.linspace(0.0, 1.0, n_grid), p)))


def select_p(eps: float, p_max: int = P_MAX, n_grid: int = GRID_SIZE) -> int:
    """Smallest integer ``p >= 1`` whose grid supremum of ``g_p`` is at most ``eps``.

    Doubling brackets the answer and bisection narrows it; the result is then
    checked against ``p - 1`` so the returned value is minimal among its
    neighbours.
    """
    if not eps > 0:
        raise InvalidArgument("eps must be positive")
    ok = lambda q: g_sup(q, n_grid) <= eps
    if ok(1):
        return 1
    lo, hi = 1, 2
    while not ok(hi):
        lo, hi = hi, 2 * hi
        if hi > p_max:
            if ok(p_max):
                hi = p_max
                break
            raise CapabilityError(
                f"no p <= {p_max} gives sup g_p <= {eps}; best excess {g_sup(p_max, n_grid):.3e}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    if hi > 1 and ok(hi - 1):
        raise ConsistencyError("sup g_p is not monotone near the selected p")
    return hi


@dataclass(frozen=True)
class ContourSpec:
    """Parameters of the contour: half-width ``L0``, margin ``eps``, exponent ``p``.

    ``p=None`` means "select the minimal admissible p for eps". ``p=0`` is the
    degenerate zero-phase case whose contour is the circle of radius ``L0``.
    """

    L0: float
    eps: float
    p: Optional[int] = None
    n_samples: int = GRID_SIZE

    def __post_init__(self):
        if not self.L0 > 0:
            raise InvalidArgument("L0 must be positive")
        if not self.eps > 0:
            raise InvalidArgument("eps must be positive")
        if self.p is None:
            object.__setattr__(self, "p", select_p(self.eps))
        if int(self.p) != self.p or self.p < 0:
            raise InvalidArgument("p must be a nonnegative integer")
        if self.n_samples < 2:
            raise InvalidArgument("need at least two samples per arc")

    @property
    def phase(self) -> Phase:
        return Phase(self.L0, self.p, 1)


@dataclass(frozen=True)
class Arc:
    arc_id: int
    params: np.ndarray
    points: np.ndarray


@dataclass(frozen=True)
class ContourPath:
    spec: ContourSpec
    arcs: tuple
    closure_gap: float
    closed: bool

    @property
    def points(self) -> np.ndarray:
        return np.concatenate([a.points for a in self.arcs])

    def arc_length(self) -> float:
        return float(sum(np.sum(np.abs(np.diff(a.points))) for a in self.arcs))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tau", "re_z", "im_z", "arc_id"])
            for arc in self.arcs:
                for t, z in zip(arc.params / self.spec.L0, arc.points):
                    w.writerow([repr(float(t)), repr(float(z.real)), repr(float(z.imag)), arc.arc_id])


def build_contour(spec: ContourSpec, closure_tol: float = 1e-10) -> ContourPath:
    """Assemble ``C1..C4`` with the orientation that makes C counterclockwise."""
    ph = spec.phase
    L0 = spec.L0
    n = spec.n_samples
    down = np.linspace(L0, 0.0, n)
    neg = np.linspace(0.0, -L0, n)
    up_neg = np.linspace(-L0, 0.0, n)
    up = np.linspace(0.0, L0, n)
    arcs = (
        Arc(1, down, x_plus(down, ph)),
        Arc(2, neg, np.conj(x_minus(neg, ph))),
        Arc(3, up_neg, x_minus(up_neg, ph)),
        Arc(4, up, np.conj(x_plus(up, ph))),
    )
    gaps = [abs(arcs[i].points[-1] - arcs[(i + 1) % 4].points[0]) for i in range(4)]
    gap = float(max(gaps))
    closed = gap <= closure_tol * L0
    if not closed:
        raise ConsistencyError(f"contour does not close: gap {gap:.3e}")
    return ContourPath(spec, arcs, gap, closed)


def winding_number(points, center: complex = 0.0) -> float:
    """Sum of argument increments of a closed polygon divided by ``2 pi``."""
    z = np.asarray(points, dtype=complex) - center
    z = np.append(z, z[0])
    return float(np.sum(np.angle(z[1:] / z[:-1])) / (2 * np.pi))


@dataclass
class ContourReport:
    item_i: bool
    item_ii: bool
    item_iii: bool
    item_iv: bool
    symmetry_margin: float
    alpha_jump: float
    min_modulus_minus: float
    quadrant_violation_minus: float
    l1_min_plus: float
    l1_max_plus: float
    quadrant_violation_plus: float
    modulus_split: bool
    winding: float
    arc_length: float
    sup_g: float
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.item_i and self.item_ii and self.item_iii and self.item_iv and self.modulus_split

    def as_dict(self) -> dict:
        out = {k: (bool(v) if isinstance(v, (bool, np.bool_)) else v) for k, v in self.__dict__.items()}
        out["ok"] = self.ok
        return out


def verify_contour(path: ContourPath, tol: float = 1e-12) -> ContourReport:
    """Check the four geometric properties of the contour on its samples."""
    spec = path.spec
    L0, eps, ph = spec.L0, spec.eps, spec.phase
    x = np.linspace(0.0, L0, spec.n_samples)
    xm = x_minus(x, ph)
    xp = x_plus(x, ph)
    # (i) continuity: increments of alpha bounded by sup|alpha'| times the step
    xs = np.linspace(-L0, L0, 2 * spec.n_samples + 1)
    al = ph.alpha(xs)
    dal = np.abs(np.diff(al))
    step = xs[1] - xs[0]
    slope = float(np.max(np.abs(ph.alpha_prime(xs))))
    jump = float(np.max(dal)) if dal.size else 0.0
    item_i = bool(jump <= slope * step * (1 + 1e-9) + 1e-15 and np.all(np.isfinite(ph.alpha_prime(xs))))
    # (ii)
    sym = float(np.max(np.abs(x_plus(-x, ph) + xm)))
    item_ii = sym <= max(tol, 1e-12) * max(1.0, L0)
    # (iii) X_-(x) for x in [0, L0]: fourth quadrant, outside the open ball
    qv_m = float(max(0.0, -np.min(xm.real), np.max(xm.imag)))
    min_mod = float(np.min(np.abs(xm)))
    item_iii = qv_m <= tol * L0 and min_mod >= L0 * (1 - tol)
    # (iv) X_+(x) for x in [0, L0]: first quadrant, L0 <= |Re|+|Im| <= L0 (1+eps)
    qv_p = float(max(0.0, -np.min(xp.real), -np.min(xp.imag)))
    l1 = np.abs(xp.real) + np.abs(xp.imag)
    l1_min, l1_max = float(np.min(l1)), float(np.max(l1))
    item_iv = qv_p <= tol * L0 and l1_min >= L0 * (1 - tol) and l1_max <= L0 * (1 + eps) * (1 + tol)
    inner = x[1:-1]
    if spec.p > 0:
        split = bool(np.all(np.abs(x_plus(inner, ph)) < L0) and np.all(np.abs(x_plus(-inner, ph)) > L0))
    else:
        split = bool(np.allclose(np.abs(x_plus(inner, ph)), L0, rtol=1e-12))
    tau = np.linspace(0.0, 1.0, spec.n_samples)
    return ContourReport(
        item_i=item_i,
        item_ii=bool(item_ii),
        item_iii=bool(item_iii),
        item_iv=bool(item_iv),
        symmetry_margin=sym,
        alpha_jump=jump,
        min_modulus_minus=min_mod,
        quadrant_violation_minus=qv_m,
        l1_min_plus=l1_min,
        l1_max_plus=l1_max,
        quadrant_violation_plus=qv_p,
        modulus_split=split,
        winding=winding_number(path.points),
        arc_length=path.arc_length(),
        sup_g=float(np.max(g_p(tau, spec.p))),
        details={"L0": L0, "eps": eps, "p": spec.p, "n_samples": spec.n_samples},
    )
