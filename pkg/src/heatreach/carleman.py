"""Weighted observability for the free heat equation, checked on explicit solutions.

With ``zt = z * t * exp((x**2 - L**2)/(4t))``, the energy
``E = int |zt|**2`` and the dissipation ``D = int |zt_x|**2 - L**2/(4t**2) E``
obey

    E' - 2E/t + 2D = 0,
    D' + 2 int |-zt_xx - L**2/(4t**2) zt|**2 = (L/t) (|zt_x(-L)|**2 + |zt_x(L)|**2).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, InvalidArgument, PreconditionError
from .numerics import composite_rule, gauss_legendre


@dataclass(frozen=True)
class AdjointSolution:
    """Solution of ``z_t = z_xx`` on (-L, L) with ``z(t, +-L) = 0``.

    ``decay`` is a rate with ``|z(t, .)| <= C exp(-decay t)``, used to bound
    truncated time integrals.
    """

    L: float
    z: Callable
    z_x: Callable
    z_xx: Callable
    decay: float
    descriptor: str = "custom"


def eigen_solution(n: int, L: float) -> AdjointSolution:
    """``exp(-n**2 pi**2 t/(4 L**2)) sin(n pi (x + L)/(2L))``."""
    if int(n) != n or n < 1:
        raise InvalidArgument("mode index must be a positive integer")
    if L <= 0:
        raise InvalidArgument("L must be positive")
    k = n * np.pi / (2 * L)
    lam = k * k

    def z(t, x):
        return np.exp(-lam * np.asarray(t)) * np.sin(k * (np.asarray(x) + L))

    def z_x(t, x):
        return k * np.exp(-lam * np.asarray(t)) * np.cos(k * (np.asarray(x) + L))

    def z_xx(t, x):
        return -lam * z(t, x)

    return AdjointSolution(L, z, z_x, z_xx, lam, f"mode {n}")


@dataclass(frozen=True)
class Conjugated:
    """``zt = z * phi`` with ``phi = t exp((x**2 - L**2)/(4t))`` and its x-derivatives."""

    base: AdjointSolution

    @property
    def L(self) -> float:
        return self.base.L

    def _phi(self, t, x):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise DomainError("the conjugated variable is defined for t > 0")
        x = np.asarray(x, dtype=float)
        phi = t * np.exp((x * x - self.L**2) / (4 * t))
        phi_x = phi * x / (2 * t)
        phi_xx = phi * (1 / (2 * t) + x * x / (4 * t * t))
        return phi, phi_x, phi_xx

    def value(self, t, x):
        return self.base.z(t, x) * self._phi(t, x)[0]

    def dx(self, t, x):
        phi, phi_x, _ = self._phi(t, x)
        return self.base.z_x(t, x) * phi + self.base.z(t, x) * phi_x

    def dxx(self, t, x):
        phi, phi_x, phi_xx = self._phi(t, x)
        b = self.base
        return b.z_xx(t, x) * phi + 2 * b.z_x(t, x) * phi_x + b.z(t, x) * phi_xx

    __call__ = value


def conjugate(solution: AdjointSolution, L: Optional[float] = None) -> Conjugated:
    if L is not None and not np.isclose(L, solution.L):
        raise InvalidArgument("L differs from the solution's interval")
    return Conjugated(solution)


def conjugated_residual(zt: Conjugated, t: float, x, dt: float):
    """Residual of ``zt_t + (x/t) zt_x - zt/(2t) - zt_xx - L**2/(4t**2) zt`` with a centred t-difference."""
    x = np.asarray(x, dtype=float)
    zt_t = (zt.value(t + dt, x) - zt.value(t - dt, x)) / (2 * dt)
    return zt_t + x / t * zt.dx(t, x) - zt.value(t, x) / (2 * t) - zt.dxx(t, x) - zt.L**2 / (4 * t * t) * zt.value(t, x)


def _x_rule(L: float, n: int = 96):
    rule = gauss_legendre(n)
    return L * rule.nodes, L * rule.weights


def energy_dissipation(zt: Conjugated, t, n_quad: int = 96):
    """``(E(t), D(t))`` by Gauss-Legendre quadrature in x."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x, w = _x_rule(zt.L, n_quad)
    v = zt.value(t[:, None], x)
    vx = zt.dx(t[:, None], x)
    E = np.abs(v) ** 2 @ w
    D = np.abs(vx) ** 2 @ w - zt.L**2 / (4 * t * t) * E
    return E, D


def _b_norm_sq(zt: Conjugated, t, n_quad: int = 96):
    x, w = _x_rule(zt.L, n_quad)
    t = np.atleast_1d(t)[:, None]
    bz = -zt.dxx(t, x) - zt.L**2 / (4 * t * t) * zt.value(t, x)
    return np.abs(bz) ** 2 @ w


def ode_residuals(zt: Conjugated, t_grid, dt: float, n_quad: int = 96):
    """Max residuals of the E and D evolution laws with centred differences of step ``dt``."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(t - dt <= 0):
        raise DomainError("time samples must satisfy t - dt > 0")
    E, D = energy_dissipation(zt, t, n_quad)
    Ep, Dp = energy_dissipation(zt, t + dt, n_quad)
    Em, Dm = energy_dissipation(zt, t - dt, n_quad)
    dE = (Ep - Em) / (2 * dt)
    dD = (Dp - Dm) / (2 * dt)
    L = zt.L
    bd = np.abs(zt.dx(t, -L)) ** 2 + np.abs(zt.dx(t, L)) ** 2
    rE = np.abs(dE - 2 * E / t + 2 * D)
    rD = np.abs(dD + 2 * _b_norm_sq(zt, t, n_quad) - L / t * bd)
    return float(np.max(rE)), float(np.max(rD))


def check_time_condition(T: float, L: float) -> None:
    if not np.pi * T > L * L:
        raise PreconditionError(f"observability needs pi*T > L**2 (T={T}, L={L})")


@dataclass
class ObservabilityResult:
    lhs: float
    rhs: float
    ratio: float
    terminal_term: float
    spacetime_term: float
    old_lhs: float
    tail_bound: float
    degenerate: bool = False


def observability_ratio(sol: AdjointSolution, T: float, n_panels: int = 32, n_order: int = 16,
                        n_quad: int = 96, tail_level: float = 1e-16) -> ObservabilityResult:
    """Both sides of the weighted observability inequality for ``sol``.

    The infinite time integral is truncated where ``exp(-2 decay t)`` drops
    below ``tail_level``; the dropped part is bounded by ``tail_bound``.
    """
    L = sol.L
    check_time_condition(T, L)
    x, wx = _x_rule(L, n_quad)
    zT = sol.z(T, x)
    terminal = float(np.abs(zT) ** 2 * np.exp((x * x - L * L) / (2 * T)) @ wx)
    t_max = max(T, -np.log(tail_level) / (2 * sol.decay)) if sol.decay > 0 else 50.0 * T
    tr = composite_rule(0.0, t_max, n_panels, n_order, graded=(True, False), depth=12)
    t = tr.nodes[:, None]
    z2 = np.abs(sol.z(t, x)) ** 2
    inner = (z2 * np.exp((x * x - L * L) / (2 * t))) @ wx
    inner_old = (z2 * np.exp(-L * L / (2 * t))) @ wx
    spacetime = float(inner @ tr.weights)
    old = float(inner_old @ tr.weights)
    tail = float(2 * L * np.exp(-2 * sol.decay * t_max) / (2 * sol.decay)) if sol.decay > 0 else float("nan")
    rt = composite_rule(0.0, T, n_panels, n_order)
    ts = rt.nodes
    rhs = float((ts * (np.abs(sol.z_x(ts, -L)) ** 2 + np.abs(sol.z_x(ts, L)) ** 2)) @ rt.weights)
    lhs = terminal + spacetime
    if rhs == 0.0:
        return ObservabilityResult(lhs, rhs, 0.0, terminal, spacetime, old, tail, degenerate=True)
    return ObservabilityResult(lhs, rhs, lhs / rhs, terminal, spacetime, old, tail)


def weight_monotonicity_change(L: float, t_grid) -> float:
    """Grid location where ``exp(-2 pi**2 t/(4L**2) - L**2/(2t))`` stops increasing.

    The exact turning point is ``L**2/pi``.
    """
    t = np.asarray(t_grid, dtype=float)
    dlog = -np.pi**2 / (2 * L * L) + L * L / (2 * t * t)
    change = np.nonzero(np.diff(np.sign(dlog)) != 0)[0]
    if change.size == 0:
        raise InvalidArgument("grid does not bracket the monotonicity change")
    i = change[0]
    # linear interpolation of the derivative's zero
    return float(t[i] - dlog[i] * (t[i + 1] - t[i]) / (dlog[i + 1] - dlog[i]))


@dataclass
class EnergyReport:
    descriptor: str
    L: float
    T: float
    t: np.ndarray
    E: np.ndarray
    D: np.ndarray
    residual_E: list
    residual_D: list
    steps: list
    order_E: float
    order_D: float
    observability: ObservabilityResult
    observability_refined: ObservabilityResult
    min_D_after: float
    energy_ratio_monotone: bool
    extra: dict = field(default_factory=dict)

    @property
    def ratio_drift(self) -> float:
        a, b = self.observability.ratio, self.observability_refined.ratio
        return abs(a - b) / abs(b) if b else 0.0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "E", "D", "E_over_t2"])
            for t, e, d in zip(self.t, self.E, self.D):
                w.writerow([repr(float(t)), repr(float(e)), repr(float(d)), repr(float(e / t**2))])

    def summary(self) -> dict:
        return {
            "descriptor": self.descriptor,
            "L": self.L,
            "T": self.T,
            "residual_E": self.residual_E,
            "residual_D": self.residual_D,
            "steps": self.steps,
            "order_E": self.order_E,
            "order_D": self.order_D,
            "lhs": self.observability.lhs,
            "rhs": self.observability.rhs,
            "ratio": self.observability.ratio,
            "ratio_refined": self.observability_refined.ratio,
            "ratio_drift": self.ratio_drift,
            "old_lhs": self.observability.old_lhs,
            "min_D_after_L2_over_pi": self.min_D_after,
            "E_over_t2_nonincreasing": self.energy_ratio_monotone,
            **self.extra,
        }


def carleman_report(sol: AdjointSolution, T: float, n_t: int = 200, dt: float = 1e-3) -> EnergyReport:
    """E, D, ODE residuals at two steps, and the observability ratio at two resolutions."""
    L = sol.L
    check_time_condition(T, L)
    zt = conjugate(sol)
    t0 = L * L / np.pi
    t = np.linspace(0.05 * T, T, n_t)
    E, D = energy_dissipation(zt, t)
    steps = [dt, dt / 2]
    probe = np.linspace(0.1 * T, T, 12)
    res = [ode_residuals(zt, probe, h) for h in steps]
    rE = [r[0] for r in res]
    rD = [r[1] for r in res]
    order = lambda a, b: float(np.log2(a / b)) if b > 0 and a > 0 else float("inf")
    tt = np.linspace(t0, T, 200)
    Et, Dafter = energy_dissipation(zt, tt)
    ratio = Et / tt**2
    monotone = bool(np.all(np.diff(ratio) <= 1e-14 * np.max(ratio)))
    obs = observability_ratio(sol, T)
    obs_fine = observability_ratio(sol, T, n_panels=64, n_order=24, n_quad=128)
    return EnergyReport(
        descriptor=sol.descriptor, L=L, T=T, t=t, E=E, D=D,
        residual_E=rE, residual_D=rD, steps=steps,
        order_E=order(*rE), order_D=order(*rD),
        observability=obs, observability_refined=obs_fine,
        min_D_after=float(np.min(Dafter)), energy_ratio_monotone=monotone,
        extra={"weight_turning_point": weight_monotonicity_change(L, np.linspace(0.05, 5 * L * L, 20001))},
    )
