"""Dual (HUM) construction of boundary controls for the source-driven part.

Everything is discrete: the forward control map ``F`` sends half-step
Dirichlet data to the final Crank-Nicolson state, and the adjoint solver is
its exact transpose. With ``S = A_+^{-1} A_-`` the adjoint state is
``z^n = S^n z0`` and its boundary traces at the adjoint half step ``n`` are
``(A_+^{-1} z^n)_1 / dx`` and ``(A_+^{-1} z^n)_M / dx``. These approximate
``d_x z(-L)`` and ``-d_x z(L)``.

Inner products are ``dx * sum`` in space and ``dt * sum`` in time.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConsistencyError, InvalidArgument, PreconditionError
from .heatflow import BoundaryControls, CrankNicolson, SourceTerm
from .numerics import SpaceGrid, TimeGrid


@dataclass
class AdjointTrajectory:
    """Output of :func:`adjoint_solve`.

    ``d_minus[n]`` and ``d_plus[n]`` approximate ``d_x z(t, -L)`` and
    ``d_x z(t, L)`` at the adjoint time ``t = (n + 1/2) dt``. ``averaged[n]``
    holds ``A_+^{-1} z^n``, the midpoint average of ``z^n`` and ``z^{n+1}``.
    """

    times: np.ndarray
    d_minus: np.ndarray
    d_plus: np.ndarray
    terminal: np.ndarray
    averaged: Optional[np.ndarray] = None


def adjoint_solve(z0, grid: SpaceGrid, T: float, n_steps: int, keep: bool = False) -> AdjointTrajectory:
    """March ``z_t = z_xx`` with zero Dirichlet data from interior samples ``z0``.

    ``z0`` may carry extra trailing axes; every column is marched at once.
    """
    z = np.array(z0, dtype=np.result_type(np.asarray(z0), float), copy=True)
    m = grid.n_points - 2
    if z.shape[0] != m:
        raise InvalidArgument(f"expected {m} interior samples, got {z.shape[0]}")
    if not np.all(np.isfinite(z)):
        raise InvalidArgument("z0 must be finite")
    tg = TimeGrid(T, n_steps)
    cn = CrankNicolson(grid, tg.step)
    dx = grid.step
    dm = np.empty((n_steps,) + z.shape[1:], dtype=z.dtype)
    dp = np.empty_like(dm)
    avg = np.empty((n_steps,) + z.shape, dtype=z.dtype) if keep else None
    for n in range(n_steps):
        y = cn.solve_plus(z)
        dm[n] = y[0] / dx
        dp[n] = -y[-1] / dx
        if keep:
            avg[n] = y
        z = _apply_minus_nd(cn, y)
    return AdjointTrajectory(tg.midpoints, dm, dp, z, avg)


def _apply_minus_nd(cn: CrankNicolson, u):
    r = cn.r
    out = (1.0 - r) * u
    out[1:] += 0.5 * r * u[:-1]
    out[:-1] += 0.5 * r * u[1:]
    return out


def controls_from_traces(traj: AdjointTrajectory, T: float) -> BoundaryControls:
    """Forward-time controls ``v_- = d_x z(-L)``, ``v_+ = -d_x z(L)``, time-reversed."""
    return BoundaryControls(T, traj.d_minus[::-1], -traj.d_plus[::-1], staggered=True)


def gramian(grid: SpaceGrid, T: float, n_steps: int) -> np.ndarray:
    """Matrix of ``F F*`` in the ``dx``-weighted space inner product."""
    m = grid.n_points - 2
    traj = adjoint_solve(np.eye(m), grid, T, n_steps)
    dt = T / n_steps
    return dt / grid.step * (traj.d_minus.T @ traj.d_minus + traj.d_plus.T @ traj.d_plus)


@dataclass
class HUMProblem:
    """Backward heat problem ``-w_t - w_xx = g``, ``w(T) = w_T``, zero walls.

    ``w_T`` holds interior samples. ``mu`` is relative to the largest
    Gramian eigenvalue.
    """

    sources: Sequence[SourceTerm]
    w_T: np.ndarray
    T: float
    grid: SpaceGrid
    n_steps: int
    mu: float = 1e-8
    _g: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        L = self.grid.half_width
        if not np.pi * self.T > L * L:
            raise PreconditionError(f"HUM needs pi*T > L**2 (T={self.T}, L={L})")
        if self.mu < 0:
            raise InvalidArgument("mu must be nonnegative")
        self.w_T = np.asarray(self.w_T, dtype=complex)
        if self.w_T.shape != (self.grid.n_points - 2,):
            raise InvalidArgument("w_T must hold the interior samples")
        if not np.all(np.isfinite(self.w_T)):
            raise InvalidArgument("w_T must be finite")
        self.sources = list(self.sources)
        for s in self.sources:
            if not s.half_width > L:
                raise PreconditionError("source half-width must exceed L for a finite weighted norm")
            if s.density.evaluator is None:
                raise InvalidArgument("sources are sampled on the grid and need a density evaluator")

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    def source_samples(self) -> np.ndarray:
        """``g`` at ``(t_{n+1/2}, x_j)`` on the interior nodes, shape ``(N, M)``."""
        if self._g is None:
            t = TimeGrid(self.T, self.n_steps).midpoints
            x = self.grid.interior
            g = np.zeros((t.size, x.size), dtype=complex)
            for s in self.sources:
                g += s(t, x)
            self._g = g
        return self._g

    @classmethod
    def zero(cls, grid: SpaceGrid, T: float, n_steps: int, mu: float = 1e-8) -> "HUMProblem":
        return cls([], np.zeros(grid.n_points - 2), T, grid, n_steps, mu)


def backward_state(problem: HUMProblem) -> np.ndarray:
    """``w(0)`` from ``A_+ w^n = A_- w^{n+1} + dt g^{n+1/2}`` with ``w^N = w_T``."""
    cn = CrankNicolson(problem.grid, problem.dt)
    g = problem.source_samples() if problem.sources else None
    w = problem.w_T.copy()
    for n in range(problem.n_steps - 1, -1, -1):
        rhs = cn.apply_minus(w)
        if g is not None:
            rhs = rhs + problem.dt * g[n]
        w = cn.solve_plus(rhs)
    return w


def pairing(z0, problem: HUMProblem, traj: Optional[AdjointTrajectory] = None) -> complex:
    """``sum_n dt <g^{n+1/2}, A_+^{-1} z^n> + <w_T, z^N>`` with ``z`` the adjoint of ``z0``.

    The pairing is bilinear (no conjugation).
    """
    dx = problem.grid.step
    if traj is None or traj.averaged is None:
        traj = adjoint_solve(z0, problem.grid, problem.T, problem.n_steps, keep=True)
    total = dx * np.dot(problem.w_T, traj.terminal)
    if problem.sources:
        total += problem.dt * dx * np.sum(problem.source_samples() * traj.averaged)
    return complex(total)


def duality_mismatch(z0, problem: HUMProblem) -> float:
    """``|pairing(z0) - <z0, w(0)>|`` with matched discrete operators."""
    z0 = np.asarray(z0, dtype=float)
    lhs = pairing(z0, problem)
    rhs = problem.grid.step * np.dot(z0, backward_state(problem))
    return float(abs(lhs - rhs))


duality_pairing_check = duality_mismatch


def duality_mismatch_continuum(n: int, problem: HUMProblem) -> float:
    """Same pairing with the exact eigenmode ``n`` sampled in place of the discrete adjoint.

    The mismatch is then a discretisation error of second order.
    """
    L = problem.grid.half_width
    x = problem.grid.interior
    k = n * np.pi / (2 * L)
    t = TimeGrid(problem.T, problem.n_steps).midpoints
    z_mid = np.exp(-k * k * t)[:, None] * np.sin(k * (x + L))
    zT = np.exp(-k * k * problem.T) * np.sin(k * (x + L))
    dx = problem.grid.step
    lhs = dx * np.dot(problem.w_T, zT)
    if problem.sources:
        lhs += problem.dt * dx * np.sum(problem.source_samples() * z_mid)
    rhs = dx * np.dot(np.sin(k * (x + L)), backward_state(problem))
    return float(abs(lhs - rhs))


def functional_J(z0, problem: HUMProblem, mu_abs: float = 0.0) -> float:
    """``1/2 ||traces||**2 - Re <data, conj(z)> + mu_abs/2 ||z0||**2``.

    For complex ``z0 = a + i b`` this is ``J_re(a) + J_im(b)``, the real and
    imaginary problems side by side.
    """
    z0 = np.asarray(z0)
    traj = adjoint_solve(z0, problem.grid, problem.T, problem.n_steps, keep=bool(problem.sources))
    dt, dx = problem.dt, problem.grid.step
    quad = 0.5 * dt * float(np.sum(np.abs(traj.d_minus) ** 2 + np.abs(traj.d_plus) ** 2))
    lin = pairing(np.conj(z0), problem, None) if np.iscomplexobj(z0) else pairing(z0, problem, traj)
    return quad - float(lin.real) + 0.5 * mu_abs * dx * float(np.sum(np.abs(z0) ** 2))


def gradient_J(z0, problem: HUMProblem, G: np.ndarray, r: np.ndarray, mu_abs: float = 0.0):
    """Gradient in the ``dx`` inner product: ``(G + mu_abs) z0 - w(0)``."""
    return G @ z0 + mu_abs * z0 - r


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool


def conjugate_gradient(A: np.ndarray, b: np.ndarray, tol: float = 1e-12, max_iter: Optional[int] = None) -> CGResult:
    """Plain CG on a symmetric positive definite matrix; ``tol`` is relative to ``|b|``."""
    n = b.size
    max_iter = 20 * n if max_iter is None else max_iter
    x = np.zeros_like(b)
    r = b.copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return CGResult(x, 0, 0.0, True)
    p = r.copy()
    rr = r @ r
    for it in range(1, max_iter + 1):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            raise ConsistencyError("operator is not positive definite")
        a = rr / pAp
        x += a * p
        r -= a * Ap
        rr_new = r @ r
        if np.sqrt(rr_new) <= tol * bnorm:
            return CGResult(x, it, float(np.sqrt(rr_new) / bnorm), True)
        p = r + (rr_new / rr) * p
        rr = rr_new
    # report the true residual rather than the recursive one
    res = float(np.linalg.norm(b - A @ x) / bnorm)
    return CGResult(x, max_iter, res, res <= tol)


@dataclass
class HUMSolution:
    z0: np.ndarray
    controls: BoundaryControls
    J: float
    gradient_norm: float
    iterations: int
    mu_abs: float
    target: np.ndarray
    reached: np.ndarray
    spectrum: dict = field(default_factory=dict)

    def convergence_log(self) -> str:
        return json.dumps({
            "J": self.J,
            "gradient_norm": self.gradient_norm,
            "iterations": self.iterations,
            "mu_abs": self.mu_abs,
            "spectrum": self.spectrum,
        }, indent=2)


def minimize_J(problem: HUMProblem, tol: float = 1e-12, max_iter: Optional[int] = None,
               G: Optional[np.ndarray] = None) -> HUMSolution:
    """Minimise J by CG on ``G + mu_abs I``; real and imaginary parts are separate solves."""
    grid = problem.grid
    if G is None:
        G = gramian(grid, problem.T, problem.n_steps)
    eig = np.linalg.eigvalsh(G)
    lam_max = float(eig[-1])
    mu_abs = problem.mu * lam_max
    r = backward_state(problem)
    A = G + mu_abs * np.eye(G.shape[0])
    parts = []
    iters = 0
    for comp in (r.real, r.imag):
        res = conjugate_gradient(A, np.ascontiguousarray(comp), tol, max_iter)
        if not res.converged and res.residual > 1e3 * tol:
            raise ConsistencyError(
                f"CG stagnated at relative residual {res.residual:.3e}; "
                f"Gramian eigenvalues span [{eig[0]:.3e}, {lam_max:.3e}], mu_abs={mu_abs:.3e}")
        parts.append(res.x)
        iters += res.iterations
    z0 = parts[0] + 1j * parts[1]
    grad = A @ z0 - r
    traj = adjoint_solve(z0, grid, problem.T, problem.n_steps)
    controls = controls_from_traces(traj, problem.T)
    dx = grid.step
    reached = G @ z0
    J = 0.5 * problem.dt * float(np.sum(np.abs(traj.d_minus) ** 2 + np.abs(traj.d_plus) ** 2)) \
        - float(dx * np.real(np.vdot(z0, r))) + 0.5 * mu_abs * dx * float(np.sum(np.abs(z0) ** 2))
    return HUMSolution(
        z0=z0, controls=controls, J=J, gradient_norm=float(np.sqrt(dx) * np.linalg.norm(grad)),
        iterations=iters, mu_abs=mu_abs, target=r, reached=reached,
        spectrum={"lambda_min": float(eig[0]), "lambda_max": lam_max,
                  "condition": float((lam_max + mu_abs) / (max(eig[0], 0.0) + mu_abs)) if mu_abs > 0 else float("inf")},
    )


def weighted_terminal_norm(w_T, grid: SpaceGrid, T: float) -> float:
    """``int |w_T|**2 exp((L**2 - x**2)/(2T))`` on the interior nodes."""
    x = grid.interior
    L = grid.half_width
    return float(grid.step * np.sum(np.abs(w_T) ** 2 * np.exp((L * L - x * x) / (2 * T))))


def control_cost_ratio(solution: HUMSolution, problem: HUMProblem, source_norm: float) -> float:
    """Observed constant ``(|v_-|**2 + |v_+|**2) / (weighted g norm + weighted w_T norm)``."""
    a, b = solution.controls.l2_norms()
    denom = source_norm + weighted_terminal_norm(problem.w_T, problem.grid, problem.T)
    return (a * a + b * b) / denom if denom > 0 else 0.0
