"""Quadrature rules, grids and half-line time integrals.

Every rule here is deterministic: the same parameters always give the same
nodes, so reports built on top of them are reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, InvalidArgument, NumericalFailure

__all__ = [
    "QuadratureRule",
    "CompositeRule",
    "SpaceGrid",
    "TimeGrid",
    "gauss_legendre",
    "composite_rule",
    "integrate_interval",
    "integrate_time_halfline",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights of a rule on [-1, 1]."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape:
            raise InvalidArgument("nodes and weights differ in shape")

    def integrate(self, values):
        return np.dot(self.weights, values)


@lru_cache(maxsize=64)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule, exact for degree 2n-1 on [-1, 1]."""
    if int(n) != n or n < 1:
        raise InvalidArgument(f"gauss_legendre needs n >= 1, got {n!r}")
    x, w = _leggauss(int(n))
    return QuadratureRule(x, w)


@dataclass(frozen=True)
class CompositeRule:
    """Composite Gauss-Legendre rule on [a, b].

    ``breaks`` are the panel edges. When an end is graded the panels next to it
    shrink geometrically and the innermost one uses the substitution
    ``x = end -+ d s**2``, which integrates inverse square-root and square-root
    endpoint behaviour to near machine precision.
    """

    a: float
    b: float
    nodes: np.ndarray
    weights: np.ndarray
    breaks: np.ndarray
    n_order: int
    graded: tuple = (False, False)
    depth: int = 0
    edges: np.ndarray = field(default=None, repr=False)
    lead: int = 0

    def integrate(self, values):
        return np.dot(values, self.weights)

    def split_panel(self, x: float):
        """Replace the regular panel containing ``x`` by two panels cut at ``x``.

        Returns ``(index_slice, nodes, weights)`` for the replacement, or None
        when ``x`` is outside the regular panels or already on an edge.
        """
        e = self.edges
        if e is None or not (e[0] < x < e[-1]):
            return None
        j = int(np.searchsorted(e, x)) - 1
        lo, hi = e[j], e[j + 1]
        tol = 1e-13 * max(1.0, abs(x))
        if x - lo <= tol or hi - x <= tol:
            return None
        g, w = _leggauss(self.n_order)
        nodes = np.concatenate([0.5 * (lo + x) + 0.5 * (x - lo) * g, 0.5 * (x + hi) + 0.5 * (hi - x) * g])
        weights = np.concatenate([0.5 * (x - lo) * w, 0.5 * (hi - x) * w])
        start = self.lead + j * self.n_order
        return slice(start, start + self.n_order), nodes, weights

    @property
    def size(self):
        return self.nodes.size

    def same_layout(self, other) -> bool:
        return (
            isinstance(other, CompositeRule)
            and self.nodes.shape == other.nodes.shape
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.weights, other.weights)
        )


def _split_counts(lengths, n_panels):
    total = float(sum(lengths))
    counts = [max(1, int(round(n_panels * ell / total))) for ell in lengths]
    return counts


def composite_rule(
    a: float,
    b: float,
    n_panels: int = 16,
    n_order: int = 16,
    breakpoints: Sequence[float] = (),
    graded=False,
    depth: int = 20,
    ratio: float = 0.5,
) -> CompositeRule:
    """Build a composite Gauss-Legendre rule on [a, b].

    Parameters
    ----------
    a, b : float
        Interval ends, ``a < b``.
    n_panels : int
        Approximate total number of uniform panels; they are shared among the
        segments cut by ``breakpoints`` in proportion to segment length.
    n_order : int
        Gauss-Legendre points per panel.
    breakpoints : sequence of float
        Interior points that must be panel edges (kinks of the integrand).
    graded : bool or (bool, bool)
        Geometric refinement toward ``a`` and/or ``b``.
    depth, ratio : int, float
        Number of geometric levels and the shrink factor per level.
    """
    if not a < b:
        raise InvalidArgument(f"need a < b, got a={a}, b={b}")
    if n_panels < 1 or n_order < 1:
        raise InvalidArgument("n_panels and n_order must be positive")
    if isinstance(graded, (bool, np.bool_)):
        graded = (bool(graded), bool(graded))
    graded = tuple(bool(g) for g in graded)
    inner = sorted({float(p) for p in breakpoints if a < p < b})
    cuts = [a, *inner, b]
    lengths = np.diff(cuts)
    counts = _split_counts(lengths, n_panels)
    edges = [a]
    for lo, hi, m in zip(cuts[:-1], cuts[1:], counts):
        edges.extend(np.linspace(lo, hi, m + 1)[1:])
    edges = np.asarray(edges)
    x, w = _leggauss(int(n_order))

    lead = np.empty(0)
    lead_w = np.empty(0)
    tail = np.empty(0)
    tail_w = np.empty(0)
    s = 0.5 * (x + 1.0)
    ws = 0.5 * w
    if graded[0] and depth > 0:
        h = edges[1] - edges[0]
        d = h * ratio**depth
        geo = [a + h * ratio**k for k in range(depth, 0, -1)]
        edges = np.concatenate([[a + d], geo[1:], edges[1:]]) if depth > 1 else np.concatenate([[a + d], edges[1:]])
        lead = a + d * s * s
        lead_w = 2.0 * d * s * ws
    if graded[1] and depth > 0:
        h = edges[-1] - edges[-2]
        d = h * ratio**depth
        geo = [b - h * ratio**k for k in range(1, depth + 1)]
        edges = np.concatenate([edges[:-1], geo[:-1], [b - d]]) if depth > 1 else np.concatenate([edges[:-1], [b - d]])
        tail = (b - d * s * s)[::-1]
        tail_w = (2.0 * d * s * ws)[::-1]

    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x).ravel()
    weights = (half[:, None] * w).ravel()
    nodes = np.concatenate([lead, nodes, tail])
    weights = np.concatenate([lead_w, weights, tail_w])
    breaks = np.concatenate([[a], edges, [b]]) if (graded[0] or graded[1]) else edges
    breaks = np.unique(breaks)
    for arr in (nodes, weights, breaks):
        arr.setflags(write=False)
    edges = np.asarray(edges, dtype=float)
    edges.setflags(write=False)
    return CompositeRule(a, b, nodes, weights, breaks, int(n_order), graded, depth if any(graded) else 0,
                         edges, lead.size)


def integrate_interval(
    f: Callable,
    a: float,
    b: float,
    n_panels: int = 16,
    n_order: int = 16,
    graded=False,
    depth: int = 20,
    breakpoints: Sequence[float] = (),
) -> complex:
    """Composite Gauss-Legendre value of ``int_a^b f``.

    ``f`` is called once on the full node array and must be vectorized.
    """
    rule = composite_rule(a, b, n_panels, n_order, breakpoints, graded, depth)
    vals = np.asarray(f(rule.nodes))
    bad = ~np.isfinite(vals)
    if np.any(bad):
        where = rule.nodes[np.argmax(bad)]
        raise NumericalFailure(f"integrand not finite at x = {where!r}")
    out = rule.integrate(vals)
    return complex(out) if np.iscomplexobj(out) else float(out)


def _phase_bounded_rule(omega, r_max, n_order):
    # panels short enough that the oscillation per panel stays bounded
    osc = float(np.max(np.abs(omega))) if np.size(omega) else 0.0
    n_panels = max(8, int(math.ceil(osc * r_max / 2.0)))
    rule = composite_rule(0.0, r_max, n_panels, n_order)
    return rule.nodes, rule.weights


def integrate_time_halfline(c, p: float, method: str = "auto", n_order: int = 16):
    """Evaluate ``int_0^inf t**(-p) exp(-c / (4 t)) dt`` for ``Re c > 0``.

    The substitution ``u = 1/(4t)`` turns the integral into
    ``4**(p-1) int_0^inf u**(p-2) exp(-c u) du``. For ``p = 2`` the default is
    the exact value ``4/c``; ``method="quadrature"`` forces a composite
    Gauss-Legendre evaluation (used as an independent check). ``p = 3/2`` is
    always done by quadrature after ``u = v**2``.

    ``c`` may be an array; the result then has the same shape.
    """
    c = np.asarray(c, dtype=complex)
    if np.any(c.real <= 0) or not np.all(np.isfinite(c)):
        raise DomainError("integrate_time_halfline needs Re(c) > 0 (the integral diverges otherwise)")
    if p not in (1.5, 2, 2.0):
        raise InvalidArgument(f"p must be 3/2 or 2, got {p!r}")
    if method not in ("auto", "closed", "quadrature"):
        raise InvalidArgument(f"unknown method {method!r}")
    if p == 2 and method in ("auto", "closed"):
        out = 4.0 / c
        return out if out.ndim else complex(out)
    if p != 2 and method == "closed":
        out = 2.0 * np.sqrt(np.pi / c)
        return out if out.ndim else complex(out)

    flat = c.ravel()
    re = flat.real
    omega = flat.imag / re
    if p == 2:
        # (4 / Re c) int_0^R exp(-(1 + i omega) r) dr,  r = Re(c) u
        r_max = 42.0
        r, wr = _phase_bounded_rule(omega, r_max, n_order)
        vals = np.exp(-np.outer(1.0 + 1j * omega, r)) @ wr
        out = 4.0 / re * vals
    else:
        # 2 int_0^inf u^{-1/2} e^{-cu} du = 4 int_0^inf e^{-c v^2} dv,  r = sqrt(Re c) v
        r_max = 6.5
        r, wr = _phase_bounded_rule(omega * r_max, r_max, n_order)
        vals = np.exp(-np.outer(1.0 + 1j * omega, r * r)) @ wr
        out = 4.0 / np.sqrt(re) * vals
    out = out.reshape(c.shape)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform grid of [-half_width, half_width] including both ends."""

    half_width: float
    n_points: int
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.half_width <= 0 or self.n_points < 3:
            raise InvalidArgument("SpaceGrid needs half_width > 0 and at least 3 points")
        pts = np.linspace(-self.half_width, self.half_width, int(self.n_points))
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def step(self) -> float:
        return 2.0 * self.half_width / (self.n_points - 1)

    @property
    def interior(self) -> np.ndarray:
        return self.points[1:-1]


@dataclass(frozen=True)
class IntervalGrid:
    """Uniform grid of [left, right] including both ends."""

    left: float
    right: float
    n_points: int
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.right > self.left or self.n_points < 3:
            raise InvalidArgument("IntervalGrid needs left < right and at least 3 points")
        pts = np.linspace(self.left, self.right, int(self.n_points))
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def step(self) -> float:
        return (self.right - self.left) / (self.n_points - 1)

    @property
    def interior(self) -> np.ndarray:
        return self.points[1:-1]


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    n_steps: int

    def __post_init__(self):
        if not self.horizon > 0:
            raise InvalidArgument("TimeGrid needs T > 0")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise InvalidArgument("TimeGrid needs a positive number of steps")

    @property
    def step(self) -> float:
        return self.horizon / self.n_steps

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_steps) + 0.5) * self.step
