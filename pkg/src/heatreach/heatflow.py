"""Phased sources, the backward solution they generate, and a Crank-Nicolson solver.

A density ``h`` on (-a, a) with phase sign ``s`` defines the source

    g(t, x) = t**(-3/2) exp((x**2 - a**2)/(4t) - i s alpha(x)/(4t)) h(x).

The function ``w(t, x) = int_t^inf (heat kernel) * g`` solves
``-w_t - w_xx = g`` and ``w(0, .) = K_{s alpha} h``. The inner time integral
has the closed form

    I(t; y, B) = -i/(2 beta sqrt t) [erfcx((y - i beta)/(2 sqrt t))
                                    - erfcx((y + i beta)/(2 sqrt t))],

with ``y = |x - s|``, ``B = a**2 - s**2 + i s alpha`` and ``beta = sqrt(B)``,
which tends to ``2/sqrt(pi) / (y**2 + B)`` as ``t -> 0``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import erfcx

from .chebyshev import Density
from .contour import Phase
from .errors import ConsistencyError, DomainError, InvalidArgument, NumericalFailure, PreconditionError
from .numerics import SpaceGrid, TimeGrid, composite_rule, integrate_time_halfline

SQRT_PI = np.sqrt(np.pi)


@dataclass(frozen=True)
class SourceTerm:
    """Source ``g`` built from a density, its phase sign and half-width ``a``."""

    density: Density
    sign: int
    half_width: float

    @property
    def phase(self) -> Phase:
        p = self.density.phase_p if self.sign != 0 else 0
        return Phase(self.half_width, p, self.sign)

    def radicand(self, nodes=None):
        """``B = a**2 - s**2 + i s alpha(s)`` at the density nodes."""
        s = self.density.nodes if nodes is None else np.asarray(nodes)
        return self.half_width**2 - s * s + 1j * self.phase.alpha(s)

    def __call__(self, t, x=None):
        """``g(t, x)``; ``x=None`` evaluates at the density nodes.

        Arbitrary ``x`` needs a density evaluator.
        """
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise DomainError("source is defined for t > 0")
        if x is None:
            s, h = self.density.nodes, self.density.samples
        else:
            s = np.asarray(x, dtype=float)
            h = self.density(s)
        B = self.radicand(s)
        tt = t[..., None] if t.ndim else t
        return tt ** -1.5 * np.exp(-B / (4.0 * tt)) * h


def make_source(h: Density, sign: int, a: float, L: float) -> SourceTerm:
    """Source for density ``h``; requires the weight gap ``a > L``."""
    if not a > L:
        raise PreconditionError(f"source half-width a={a} must exceed L={L}")
    if not np.isclose(h.half_width, a):
        raise InvalidArgument("density half-width must equal a")
    if sign not in (-1, 0, 1):
        raise InvalidArgument("sign must be -1, 0 or +1")
    if (sign == 0) != (h.phase_tag == "zero") or (sign != 0 and h.sign != sign):
        raise InvalidArgument(f"sign {sign} does not match density tag {h.phase_tag}")
    return SourceTerm(h, sign, float(a))


def exponent_P(t, s, x, xt, a: float):
    """Real exponent ``-(x - xt)**2/(4s) + (xt**2 - a**2)/(4(t + s))`` of the double-integral form of ``w``.

    For ``|x| <= L2 < a`` it is at most ``-(L2 - a)**2/(4(t + s))``.
    """
    t, s = np.asarray(t, dtype=float), np.asarray(s, dtype=float)
    if np.any(t < 0) or np.any(s <= 0):
        raise DomainError("need t >= 0 and s > 0")
    return -(x - xt) ** 2 / (4 * s) + (xt * xt - a * a) / (4 * (t + s))


def time_kernel(t, y, B):
    """Closed form of ``int_0^inf (4 pi s)**-1/2 e^{-y^2/4s} (t+s)**-3/2 e^{-B/4(t+s)} ds``.

    ``t`` may be an array of positive times broadcasting against ``y`` and ``B``.
    """
    y = np.asarray(y, dtype=float)
    B = np.asarray(B, dtype=complex)
    if np.ndim(t) == 0 and t == 0:
        return (2.0 / SQRT_PI) / (y * y + B)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("array times must be positive")
    beta = np.sqrt(B)
    r = 2.0 * np.sqrt(t)
    return (-0.5j / (beta * np.sqrt(t))) * (erfcx((y - 1j * beta) / r) - erfcx((y + 1j * beta) / r))


def time_kernel_quadrature(t: float, y, B, n_panels: int = 24, n_order: int = 16):
    """Same integral by composite quadrature after ``u = 1/(4(t+s)) = v**2/(4t)``."""
    if t <= 0:
        raise DomainError("quadrature route needs t > 0")
    y = np.asarray(y, dtype=float)[..., None]
    B = np.asarray(B, dtype=complex)[..., None]
    rule = composite_rule(0.0, 1.0, n_panels, n_order, graded=True)
    v, wv = rule.nodes, rule.weights
    U = 1.0 / (4.0 * t)
    s = t * (1.0 - v * v) / (v * v)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        f = 4.0 * np.sqrt(U) * np.exp(-B * U * v * v - y * y / (4.0 * s)) / np.sqrt(4.0 * np.pi * s)
    f = np.where(np.isfinite(f), f, 0.0)
    return f @ wv


def _sources(src) -> list:
    return [src] if isinstance(src, SourceTerm) else list(src)


def eval_w0(x, source, L: Optional[float] = None):
    """``w(0, x) = 2/sqrt(pi) int h / ((x - s)**2 + B(s)) ds``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros(x.shape, dtype=complex)
    for src in _sources(source):
        if L is not None and np.any(np.abs(x) > L):
            raise DomainError("eval_w0 is evaluated on [-L, L]")
        d = src.density
        den = (x[:, None] - d.nodes) ** 2 + src.radicand()
        out += (2.0 / SQRT_PI) * ((1.0 / den) @ (d.weights * d.samples))
    return out


def _kink_corrections(t, xs, src, kernel):
    # the time-integrated kernel has a |x - s| kink; re-split the panel holding x
    d = src.density
    if d.evaluator is None:
        return np.zeros(xs.size, dtype=complex)
    rule = d.rule
    out = np.zeros(xs.size, dtype=complex)
    for i, xi in enumerate(xs):
        cut = rule.split_panel(xi)
        if cut is None:
            continue
        sl, nodes, weights = cut
        old = kernel(t, np.abs(xi - rule.nodes[sl]), src.radicand(rule.nodes[sl])) @ (rule.weights[sl] * d.samples[sl])
        new = kernel(t, np.abs(xi - nodes), src.radicand(nodes)) @ (weights * d(nodes))
        out[i] = new - old
    return out


def eval_w(t: float, x, source, method: str = "closed", chunk: int = 64):
    """``w(t, x)`` for ``t >= 0`` summed over one or several sources.

    For ``t > 0`` the x-integrand has a kink at ``s = x``; densities with an
    evaluator get their quadrature panel split there.
    """
    if t < 0:
        raise DomainError("w is evaluated for t >= 0")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros(x.shape, dtype=complex)
    if method == "closed":
        kernel = time_kernel
    elif method == "quadrature":
        kernel = lambda tt, y, B: time_kernel_quadrature(tt, y, np.broadcast_to(B, np.shape(y)))
    else:
        raise InvalidArgument(f"unknown method {method!r}")
    for src in _sources(source):
        if np.any(np.abs(x) >= src.half_width):
            raise DomainError("|x| must stay below the source half-width")
        if t == 0:
            out += eval_w0(x, src)
            continue
        d = src.density
        B = src.radicand()
        wh = d.weights * d.samples
        for i in range(0, x.size, chunk):
            y = np.abs(x[i:i + chunk, None] - d.nodes)
            out[i:i + chunk] += kernel(t, y, B) @ wh
        out += _kink_corrections(t, x, src, kernel)
    if not np.all(np.isfinite(out)):
        raise NumericalFailure("non-finite value in eval_w")
    return out


def eval_w_traces(times, source, L: float, chunk: int = 32):
    """``w(t, -L)`` and ``w(t, L)`` at every time in ``times``."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise DomainError("w is evaluated for t >= 0")
    out = np.zeros((times.size, 2), dtype=complex)
    xs = np.array([-L, L])
    for src in _sources(source):
        nodes, B = src.density.nodes, src.radicand()
        wh = src.density.weights * src.density.samples
        y = np.abs(xs[:, None] - nodes)
        zero = times == 0
        if np.any(zero):
            out[zero] += time_kernel(0.0, y, B) @ wh
        pos = np.nonzero(~zero)[0]
        for i in range(0, pos.size, chunk):
            idx = pos[i:i + chunk]
            out[idx] += time_kernel(times[idx, None, None], y, B) @ wh
    if not np.all(np.isfinite(out)):
        raise NumericalFailure("non-finite boundary trace")
    return out[:, 0], out[:, 1]


def fubini_check(source, x):
    """Largest gap between the double integral for ``w(0, .)`` and its closed form.

    The time integral is done numerically for every ``(x, s)`` pair with
    ``c = (x - s)**2 + B(s)``, never through ``4/c``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    worst = 0.0
    for src in _sources(source):
        d = src.density
        B = src.radicand()
        wh = d.weights * d.samples
        for xi in x:
            c = (xi - d.nodes) ** 2 + B
            if np.any(c.real <= 0):
                raise ConsistencyError("Re(c) <= 0 at a quadrature node")
            inner = integrate_time_halfline(c, 2, method="quadrature")
            double = np.dot(inner, wh) / np.sqrt(4.0 * np.pi)
            single = eval_w0(np.array([xi]), src)[0]
            worst = max(worst, abs(double - single))
    return float(worst)


def pde_residual_field(source, t_centers, x_centers, dt: float, dx: float) -> np.ndarray:
    """``-w_t - w_xx - g`` by centred differences, shape ``(len(t), len(x))``."""
    t_centers = np.asarray(t_centers, dtype=float)
    x_centers = np.asarray(x_centers, dtype=float)
    if np.any(t_centers - dt <= 0):
        raise DomainError("stencils must stay inside t > 0")
    srcs = _sources(source)
    n = x_centers.size
    xs = np.concatenate([x_centers - dx, x_centers, x_centers + dx])
    out = np.empty((t_centers.size, n), dtype=complex)
    for k, t in enumerate(t_centers):
        w = eval_w(t, xs, srcs)
        w_t = (eval_w(t + dt, x_centers, srcs) - eval_w(t - dt, x_centers, srcs)) / (2 * dt)
        w_xx = (w[2 * n:] - 2 * w[n:2 * n] + w[:n]) / dx**2
        out[k] = -w_t - w_xx - sum(s(t, x_centers) for s in srcs)
    return out


def pde_residual_w(source, t_centers, x_centers, dt: float, dx: float, T: float = 1.0, L: float = 1.0,
                   norm: str = "l2") -> float:
    """Norm of the centred-difference residual of ``-w_t - w_xx = g``.

    ``norm="l2"`` is the space-time ``L2((0,T) x (-L,L))`` norm estimated from
    uniformly spread centres; ``norm="max"`` is the largest pointwise value.
    """
    r = np.abs(pde_residual_field(source, t_centers, x_centers, dt, dx))
    if norm == "max":
        return float(np.max(r))
    if norm == "l2":
        return float(np.sqrt(np.mean(r**2) * T * 2.0 * L))
    raise InvalidArgument(f"unknown norm {norm!r}")


def weighted_source_norm(source: SourceTerm, L: float, n_panels: int = 32, n_order: int = 16):
    """``int_0^inf int_{-L}^{L} |g|**2 exp((L**2 - x**2)/(2t)) dx dt`` two ways.

    Returns ``(quadrature, closed_form)``. The closed form is
    ``4/(a**2 - L**2)**2 * int_{-L}^{L} |h|**2``.
    """
    a = source.half_width
    if not a > L:
        raise PreconditionError("weighted norm is finite only when a > L")
    xr = composite_rule(-L, L, n_panels, n_order)
    c = a * a - L * L
    # t = 1/u and u = 2r/c; the r-integrand decays like exp(-r)
    rr = composite_rule(0.0, 60.0, 16, n_order)
    u = 2.0 * rr.nodes / c
    t = 1.0 / u
    g = source(t, xr.nodes)
    weight = np.exp((L * L - xr.nodes**2)[None, :] / (2.0 * t[:, None]))
    inner = (np.abs(g) ** 2 * weight) @ xr.weights
    quad_val = float(np.dot(inner / u**2, rr.weights) * 2.0 / c)
    closed = float(4.0 / c**2 * np.dot(xr.weights, np.abs(source.density(xr.nodes)) ** 2))
    return quad_val, closed


def heat_kernel_kL(t, x, L: float):
    """``(4 pi t)**-1/2 sin(x L/(2t)) exp((L**2 - x**2)/(4t))``, a solution of the heat equation."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("k_L is defined for t > 0")
    return np.sin(x * L / (2 * t)) * np.exp((L * L - np.asarray(x) ** 2) / (4 * t)) / np.sqrt(4 * np.pi * t)


@dataclass
class BoundaryControls:
    """Dirichlet data on a uniform time grid.

    With ``staggered=False`` the samples sit on the ``N+1`` time nodes and each
    step uses the average of its two end values; with ``staggered=True`` there
    are ``N`` samples at the step midpoints.
    """

    T: float
    v_minus: np.ndarray
    v_plus: np.ndarray
    staggered: bool = False

    def __post_init__(self):
        self.v_minus = np.asarray(self.v_minus, dtype=complex)
        self.v_plus = np.asarray(self.v_plus, dtype=complex)
        if self.v_minus.shape != self.v_plus.shape or self.v_minus.ndim != 1:
            raise InvalidArgument("control arrays must be 1-D and of equal length")
        if not (np.all(np.isfinite(self.v_minus)) and np.all(np.isfinite(self.v_plus))):
            raise NumericalFailure("non-finite control sample")

    @property
    def n_steps(self) -> int:
        return self.v_minus.size if self.staggered else self.v_minus.size - 1

    @property
    def times(self) -> np.ndarray:
        tg = TimeGrid(self.T, self.n_steps)
        return tg.midpoints if self.staggered else tg.nodes

    def half_step_values(self):
        if self.staggered:
            return self.v_minus, self.v_plus
        return 0.5 * (self.v_minus[1:] + self.v_minus[:-1]), 0.5 * (self.v_plus[1:] + self.v_plus[:-1])

    def l2_norms(self):
        dt = self.T / self.n_steps
        vm, vp = self.half_step_values()
        return float(np.sqrt(dt * np.sum(np.abs(vm) ** 2))), float(np.sqrt(dt * np.sum(np.abs(vp) ** 2)))

    @classmethod
    def zeros(cls, T: float, n_steps: int, staggered: bool = True) -> "BoundaryControls":
        n = n_steps if staggered else n_steps + 1
        return cls(T, np.zeros(n), np.zeros(n), staggered)

    def __add__(self, other: "BoundaryControls") -> "BoundaryControls":
        if self.staggered != other.staggered or self.v_minus.size != other.v_minus.size or self.T != other.T:
            raise InvalidArgument("controls live on different grids")
        return BoundaryControls(self.T, self.v_minus + other.v_minus, self.v_plus + other.v_plus, self.staggered)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "re_v_minus", "im_v_minus", "re_v_plus", "im_v_plus"])
            for t, a, b in zip(self.times, self.v_minus, self.v_plus):
                w.writerow([repr(float(t)), repr(float(a.real)), repr(float(a.imag)),
                            repr(float(b.real)), repr(float(b.imag))])


@dataclass
class HeatState:
    grid: SpaceGrid
    values: np.ndarray
    time: float = 0.0

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "re_u", "im_u"])
            for x, u in zip(self.grid.points, self.values):
                w.writerow([repr(float(self.time)), repr(float(x)), repr(float(u.real)), repr(float(u.imag))])


class CrankNicolson:
    """Factorised Crank-Nicolson step for ``u_t = u_xx`` on interior nodes.

    ``A_+ u^{n+1} = A_- u^n + dt/dx**2 * b^{n+1/2}`` with
    ``A_+- = I -+ dt/2 D`` and ``D`` the Dirichlet second difference.
    """

    def __init__(self, grid: SpaceGrid, dt: float):
        if dt <= 0:
            raise InvalidArgument("time step must be positive")
        self.grid = grid
        self.dt = float(dt)
        self.m = grid.n_points - 2
        self.r = dt / grid.step**2
        r = self.r
        ab = np.zeros((3, self.m))
        ab[0, 1:] = -0.5 * r
        ab[1, :] = 1.0 + r
        ab[2, :-1] = -0.5 * r
        self.ab = ab

    def apply_minus(self, u):
        r = self.r
        out = (1.0 - r) * u
        out[1:] += 0.5 * r * u[:-1]
        out[:-1] += 0.5 * r * u[1:]
        return out

    def solve_plus(self, rhs):
        out = solve_banded((1, 1), self.ab, rhs, check_finite=False)
        if not np.all(np.isfinite(out)):
            raise ConsistencyError("tridiagonal solve failed")
        return out

    def step(self, u, bm=0.0, bp=0.0):
        rhs = self.apply_minus(u)
        rhs[0] += self.r * bm
        rhs[-1] += self.r * bp
        return self.solve_plus(rhs)


def simulate_forward(controls: BoundaryControls, grid: SpaceGrid, initial=None,
                     keep_trajectory: bool = False):
    """Crank-Nicolson solution of ``u_t = u_xx`` with Dirichlet controls.

    Returns the final :class:`HeatState` and, when ``keep_trajectory`` is
    set, the array of full states at every time node as well.
    """
    n = controls.n_steps
    cn = CrankNicolson(grid, controls.T / n)
    bm, bp = controls.half_step_values()
    u = np.zeros(cn.m, dtype=complex) if initial is None else np.asarray(initial, dtype=complex)[1:-1].copy()
    traj = None
    if keep_trajectory:
        traj = np.empty((n + 1, grid.n_points), dtype=complex)
        traj[0, 1:-1] = u
        if controls.staggered:
            traj[0, 0], traj[0, -1] = (bm[0], bp[0]) if initial is None else (initial[0], initial[-1])
        else:
            traj[0, 0], traj[0, -1] = controls.v_minus[0], controls.v_plus[0]
    for k in range(n):
        u = cn.step(u, bm[k], bp[k])
        if keep_trajectory:
            traj[k + 1, 1:-1] = u
            if controls.staggered:
                traj[k + 1, 0], traj[k + 1, -1] = bm[k], bp[k]
            else:
                traj[k + 1, 0], traj[k + 1, -1] = controls.v_minus[k + 1], controls.v_plus[k + 1]
    if controls.staggered:
        ends = (bm[-1], bp[-1])
    else:
        ends = (controls.v_minus[-1], controls.v_plus[-1])
    vals = np.concatenate([[ends[0]], u, [ends[1]]])
    state = HeatState(grid, vals, controls.T)
    return (state, traj) if keep_trajectory else state
