"""End-to-end control synthesis for analytic targets.

The target ``k`` is written as ``w(0, .)`` for the explicit backward solution
``w`` of a source problem. ``w`` splits into the part driven by its boundary
traces, which is steered by those traces played backwards, and the part driven
by the source and ``w(T)``, which is steered by HUM. The sum of both control
pairs reaches ``k``.
"""
from __future__ import annotations

import contextlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .chebyshev import PowerSeriesTarget
from .contour import build_contour, verify_contour
from .errors import HeatReachError, InvalidArgument, PreconditionError
from .heatflow import (BoundaryControls, CrankNicolson, HeatState, eval_w, eval_w0, eval_w_traces,
                       fubini_check, make_source, pde_residual_w, simulate_forward, weighted_source_norm)
from .hum import HUMProblem, control_cost_ratio, duality_mismatch, minimize_J, weighted_terminal_norm
from .kernels import DecompositionResult, decompose
from .numerics import IntervalGrid, SpaceGrid, TimeGrid

SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    L: float = 1.0
    L0: float = 1.2
    eps: float = 0.15
    T: float = 1.0
    n_points: int = 201
    n_steps: int = 4000
    n_order: int = 32
    n_panels: int = 64
    mu: float = 1e-8
    cg_tol: float = 1e-12
    p: Optional[int] = None
    fubini_points: int = 5
    pde_probe: int = 4
    target: Optional[str] = None
    out: Optional[str] = None
    real: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not 0 < self.L < self.L0:
            raise PreconditionError(f"need 0 < L < L0 (L={self.L}, L0={self.L0})")
        if not self.eps > 0:
            raise PreconditionError("eps must be positive")
        if not np.pi * self.T > self.L**2:
            raise PreconditionError(f"need pi*T > L**2 (T={self.T}, L={self.L})")
        for name in ("n_points", "n_steps", "n_order", "n_panels"):
            if int(getattr(self, name)) <= 0:
                raise PreconditionError(f"{name} must be positive")
        if self.n_points < 3:
            raise PreconditionError("n_points must be at least 3")
        if self.mu < 0:
            raise PreconditionError("mu must be nonnegative")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InvalidArgument(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"malformed config JSON: {exc}") from None
        if not isinstance(data, dict):
            raise InvalidArgument("config JSON must be an object")
        return cls.from_dict(data)

    def refined(self, factor: int) -> "RunConfig":
        """Space step divided by ``factor``, time step by ``factor**2``."""
        d = asdict(self)
        d["n_points"] = (self.n_points - 1) * factor + 1
        d["n_steps"] = self.n_steps * factor * factor
        return RunConfig(**d)

    @property
    def grid(self) -> SpaceGrid:
        return SpaceGrid(self.L, self.n_points)


@dataclass
class ReachReport:
    stages: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    reach_error: Optional[float] = None
    config: dict = field(default_factory=dict)
    target: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "config": self.config, "target": self.target,
                "stages": self.stages, "timings": self.timings, "reach_error": self.reach_error}

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.as_dict(), indent=2, default=_json_default))


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


@contextlib.contextmanager
def _stage(name: str, timings: dict):
    start = time.perf_counter()
    try:
        yield
    except HeatReachError as exc:
        exc.stage = name
        exc.args = (f"[{name}] {exc}",) + exc.args[1:]
        raise
    finally:
        timings[name] = time.perf_counter() - start


@dataclass
class SynthesisResult:
    controls: BoundaryControls
    report: ReachReport
    decomposition: Optional[DecompositionResult] = None
    final_state: Optional[HeatState] = None
    trace_controls: Optional[BoundaryControls] = None
    hum_controls: Optional[BoundaryControls] = None


def build_sources(dec: DecompositionResult) -> list:
    L = dec.L
    return [make_source(dec.h_plus, 1, dec.L0, L),
            make_source(dec.h_minus, -1, dec.L0, L),
            make_source(dec.h_zero, 0, dec.L1, L)]


def synthesize(target: PowerSeriesTarget, config: RunConfig, simulate: bool = True) -> SynthesisResult:
    """Boundary controls steering 0 to ``target`` on (-L, L) in time ``T``."""
    config.validate()
    report = ReachReport(config=asdict(config),
                         target={"label": target.label, "degree": target.degree,
                                 "truncation_error": target.truncation_error})
    tm = report.timings
    st = report.stages
    grid = config.grid
    tg = TimeGrid(config.T, config.n_steps)
    L = config.L

    with _stage("decompose", tm):
        dec = decompose(target, L, config.L0, config.eps, config.p, config.n_panels, config.n_order)
        st["decompose"] = dict(dec.residuals)
        st["decompose"]["p"] = dec.spec.p
    with _stage("contour", tm):
        cr = verify_contour(build_contour(dec.spec))
        st["contour"] = cr.as_dict()
    with _stage("sources", tm):
        sources = build_sources(dec)
        x_rep = np.linspace(-L, L, 101)
        w0 = eval_w0(x_rep, sources)
        st["three_way"] = {
            "w0_vs_kernels_inf": float(np.max(np.abs(w0 - dec.reconstruct(x_rep)))),
            "w0_vs_target_inf": float(np.max(np.abs(w0 - target(x_rep)))),
        }
        if config.fubini_points > 0:
            st["fubini_inf"] = fubini_check(sources, np.linspace(-L, L, config.fubini_points))
        norms = [weighted_source_norm(s, L)[1] for s in sources]
        st["weighted_source_norms"] = norms
    if config.pde_probe > 0:
        with _stage("pde_residual", tm):
            dt, dx = tg.step, grid.step
            tc = np.linspace(0.1, 0.9, config.pde_probe) * config.T
            xc = np.linspace(-0.9, 0.9, config.pde_probe) * L
            st["pde_residual_max"] = pde_residual_w(sources, tc, xc, dt, dx, config.T, L, norm="max")
    with _stage("traces", tm):
        # forward time tau sees w at T - tau
        vm, vp = eval_w_traces(config.T - tg.midpoints, sources, L)
        trace_controls = BoundaryControls(config.T, vm, vp, staggered=True)
        w_T = eval_w(config.T, grid.interior, sources)
        st["w_T_l2"] = float(np.sqrt(grid.step * np.sum(np.abs(w_T) ** 2)))
        w0_l2 = float(np.sqrt(grid.step * np.sum(np.abs(eval_w0(grid.interior, sources)) ** 2)))
        # T is fixed by the config; the size of w(T) relative to w(0) is reported, not tuned
        st["w_T_over_w0"] = st["w_T_l2"] / w0_l2 if w0_l2 > 0 else 0.0
    with _stage("hum", tm):
        problem = HUMProblem(sources, w_T, config.T, grid, config.n_steps, config.mu)
        sol = minimize_J(problem, tol=config.cg_tol)
        z_probe = np.sin(np.pi * (grid.interior + L) / (2 * L))
        rnorm = float(np.sqrt(grid.step) * np.linalg.norm(sol.target))
        st["hum"] = {
            "gradient_norm": sol.gradient_norm,
            "iterations": sol.iterations,
            "J": sol.J,
            "mu_abs": sol.mu_abs,
            "spectrum": sol.spectrum,
            "duality_mismatch": duality_mismatch(z_probe, problem),
            "mu_reach_error": float(np.sqrt(grid.step) * np.linalg.norm(sol.reached - sol.target) / rnorm)
            if rnorm > 0 else 0.0,
            "control_cost_ratio": control_cost_ratio(sol, problem, float(sum(norms))),
            "weighted_terminal_norm": weighted_terminal_norm(w_T, grid, config.T),
        }
    controls = trace_controls + sol.controls
    if config.real:
        controls = BoundaryControls(config.T, controls.v_minus.real, controls.v_plus.real, staggered=True)
    result = SynthesisResult(controls, report, dec, None, trace_controls, sol.controls)
    if simulate:
        with _stage("simulate", tm):
            err, state, _ = verify_reach(controls, target, config)
            report.reach_error = err
            result.final_state = state
            u = state.interior
            st["imag_over_real"] = float(np.linalg.norm(u.imag) / max(np.linalg.norm(u.real), 1e-300))
    return result


def verify_reach(controls: BoundaryControls, target: PowerSeriesTarget, config: RunConfig):
    """Relative L2 error of the final state against ``target`` on the interior nodes.

    Returns ``(error, final_state, profile)`` with ``profile`` rows
    ``(x, u, k(x), |u - k|)``.
    """
    if controls.n_steps != config.n_steps or not np.isclose(controls.T, config.T):
        raise InvalidArgument("controls live on a different time grid")
    grid = config.grid
    state = simulate_forward(controls, grid)
    x = grid.interior
    u = state.interior
    k = target(x)
    diff = np.abs(u - k)
    tn = np.linalg.norm(k)
    err = float(np.linalg.norm(diff) / tn) if tn > 0 else float(np.linalg.norm(diff) * np.sqrt(grid.step))
    profile = np.column_stack([x, u, k, diff])
    return err, state, profile


def write_profile(profile, path) -> None:
    with open(path, "w") as fh:
        fh.write("x,re_u,im_u,re_target,im_target,abs_error\n")
        for x, u, k, e in profile:
            fh.write(f"{x.real!r},{u.real!r},{u.imag!r},{k.real!r},{k.imag!r},{e.real!r}\n")


def is_odd_series(target: PowerSeriesTarget, tol: float = 1e-12) -> bool:
    return bool(np.all(np.abs(target.coefficients[::2]) <= tol))


@dataclass
class OneSidedResult:
    v: np.ndarray
    T: float
    reach_error: float
    two_sided_error: float
    oddness: float
    state: np.ndarray
    grid: IntervalGrid
    two_sided: SynthesisResult


def simulate_half(v, T: float, L: float, n_points: int) -> tuple:
    """Crank-Nicolson on (0, L) with ``u(t, 0) = 0`` and ``u(t, L) = v`` at the half steps."""
    grid = IntervalGrid(0.0, L, n_points)
    v = np.asarray(v, dtype=complex)
    cn = CrankNicolson(grid, T / v.size)
    u = np.zeros(grid.n_points - 2, dtype=complex)
    for b in v:
        u = cn.step(u, 0.0, b)
    return grid, np.concatenate([[0.0], u, [v[-1]]])


def one_sided(target: PowerSeriesTarget, config: RunConfig) -> OneSidedResult:
    """Control ``v = (V_+ - V_-)/2`` at x = L with ``u(t, 0) = 0``, from the odd extension."""
    if not is_odd_series(target):
        raise InvalidArgument("one-sided synthesis needs an odd series (even coefficients must vanish)")
    if config.n_points % 2 == 0:
        raise InvalidArgument("n_points must be odd so that x = 0 is a grid node")
    res = synthesize(target, config)
    c = res.controls
    v = 0.5 * (c.v_plus - c.v_minus)
    half = (config.n_points + 1) // 2
    grid, u = simulate_half(v, config.T, config.L, half)
    x = grid.interior
    k = target(x)
    err = float(np.linalg.norm(u[1:-1] - k) / np.linalg.norm(k)) if np.any(k) else float(np.linalg.norm(u[1:-1]))
    full = res.final_state.values
    oddness = float(np.max(np.abs(full + full[::-1])))
    return OneSidedResult(v, config.T, err, res.report.reach_error, oddness, u, grid, res)


def spectral_membership(c, L: float = 1.0, N: Optional[int] = None, threshold: float = np.inf):
    """Partial sum ``sum_{n<=N} |c_n|**2 n exp(n pi)`` for sine coefficients ``c_1, c_2, ...``.

    Finite lists always pass; the verdict only flags overflow or a sum above
    ``threshold``. ``L`` fixes the basis ``sin(n pi (x + L)/(2L))`` and does not
    enter the weight.
    """
    if L <= 0:
        raise InvalidArgument("L must be positive")
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    if N is not None:
        c = c[:N]
    if not np.all(np.isfinite(c)):
        raise InvalidArgument("coefficients must be finite")
    n = np.arange(1, c.size + 1)
    total = float(np.sum(np.abs(c) ** 2 * n * np.exp(n * np.pi)))
    return total, bool(np.isfinite(total) and total <= threshold)


def refinement_sweep(target: PowerSeriesTarget, base: RunConfig, factors=(1, 2, 4)) -> list:
    """Reach errors with the space step divided by each factor and the time step by its square."""
    out = []
    for f in factors:
        cfg = base.refined(f)
        start = time.perf_counter()
        res = synthesize(target, cfg)
        out.append({"n_points": cfg.n_points, "n_steps": cfg.n_steps, "reach_error": res.report.reach_error,
                    "seconds": time.perf_counter() - start})
    return out
