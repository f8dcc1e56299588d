"""Command line entry point.

Exit codes: 0 success, 2 precondition or input error, 3 accuracy failure,
1 anything else.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .carleman import carleman_report, check_time_condition, eigen_solution
from .chebyshev import PowerSeriesTarget
from .contour import ContourSpec, build_contour, verify_contour
from .errors import AccuracyError, HeatReachError, InvalidArgument, PreconditionError
from .heatflow import BoundaryControls
from .kernels import decompose, write_density_csv
from .pipeline import (RunConfig, _json_default, one_sided, spectral_membership, synthesize,
                       verify_reach, write_profile)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InvalidArgument(f"cannot read {path}: {exc.strerror}") from None


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_json(_read(args.config)) if args.config else RunConfig()
    if getattr(args, "real", False):
        cfg.real = True
    return cfg


def _load_target(args, cfg: Optional[RunConfig] = None) -> PowerSeriesTarget:
    path = args.target or (cfg.target if cfg else None)
    if not path:
        raise InvalidArgument("a --target JSON file is required")
    return PowerSeriesTarget.from_json(_read(path))


def _out_dir(args, cfg: Optional[RunConfig] = None) -> Path:
    out = Path(args.out or (cfg.out if cfg and cfg.out else "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, default=_json_default))


def _read_controls(path: str, T: float) -> BoundaryControls:
    text = _read(path).splitlines()
    try:
        rows = list(csv.reader(text))[1:]
        data = np.array([[float(v) for v in r] for r in rows])
        return BoundaryControls(T, data[:, 1] + 1j * data[:, 2], data[:, 3] + 1j * data[:, 4], staggered=True)
    except (ValueError, IndexError) as exc:
        raise InvalidArgument(f"malformed controls CSV: {exc}") from None


def _check_tol(value: Optional[float], tol: Optional[float], what: str) -> None:
    if tol is not None and value is not None and value > tol:
        raise AccuracyError(f"{what} {value:.3e} exceeds tolerance {tol:.3e}")


def cmd_synthesize(args) -> int:
    cfg = _load_config(args)
    target = _load_target(args, cfg)
    out = _out_dir(args, cfg)
    res = synthesize(target, cfg)
    res.controls.to_csv(out / "controls.csv")
    res.final_state.to_csv(out / "state.csv")
    res.report.to_json(out / "report.json")
    print(f"reach error {res.report.reach_error:.6e}")
    _check_tol(res.report.reach_error, args.tol, "reach error")
    return 0


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    target = _load_target(args, cfg)
    out = _out_dir(args, cfg)
    controls = _read_controls(args.controls or str(out / "controls.csv"), cfg.T)
    err, state, profile = verify_reach(controls, target, cfg)
    write_profile(profile, out / "profile.csv")
    _dump({"reach_error": err}, out / "verify.json")
    print(f"reach error {err:.6e}")
    _check_tol(err, args.tol, "reach error")
    return 0


def cmd_contour(args) -> int:
    spec = ContourSpec(args.L0, args.eps, args.p)
    path = build_contour(spec)
    rep = verify_contour(path)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        path.to_csv(args.out)
    print(json.dumps(rep.as_dict(), default=_json_default))
    if not rep.ok:
        raise AccuracyError("contour geometry checks failed")
    return 0


def cmd_carleman(args) -> int:
    check_time_condition(args.T, args.L)
    rows = []
    summaries = []
    for n in args.mode:
        rep = carleman_report(eigen_solution(n, args.L), args.T)
        summaries.append(rep.summary())
        rows += [(n, t, e, d) for t, e, d in zip(rep.t, rep.E, rep.D)]
    if args.out:
        out = Path(args.out)
        target = out / "carleman.csv" if out.suffix != ".csv" else out
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["mode", "t", "E", "D"])
            for n, t, e, d in rows:
                w.writerow([n, repr(float(t)), repr(float(e)), repr(float(d))])
    print(json.dumps(summaries, default=_json_default))
    return 0


def cmd_decompose(args) -> int:
    cfg = _load_config(args)
    target = _load_target(args, cfg)
    out = _out_dir(args, cfg)
    dec = decompose(target, cfg.L, cfg.L0, cfg.eps, cfg.p, cfg.n_panels, cfg.n_order)
    write_density_csv(dec.h_plus, out / "h_plus.csv")
    write_density_csv(dec.h_minus, out / "h_minus.csv")
    write_density_csv(dec.h_zero, out / "h_zero.csv")
    _dump({"schema_version": 1, "p": dec.spec.p, "L1": dec.L1, "residuals": dec.residuals}, out / "decomposition.json")
    print(json.dumps(dec.residuals, default=_json_default))
    _check_tol(dec.residuals["reconstruction_inf"], args.tol, "reconstruction error")
    return 0


def cmd_one_sided(args) -> int:
    cfg = _load_config(args)
    target = _load_target(args, cfg)
    out = _out_dir(args, cfg)
    res = one_sided(target, cfg)
    with open(out / "controls_one_sided.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "re_v", "im_v"])
        times = (np.arange(res.v.size) + 0.5) * res.T / res.v.size
        for t, v in zip(times, res.v):
            w.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])
    summary = {"schema_version": 1, "reach_error": res.reach_error,
               "two_sided_error": res.two_sided_error, "oddness": res.oddness}
    _dump(summary, out / "report.json")
    print(json.dumps(summary))
    _check_tol(res.reach_error, args.tol, "reach error")
    return 0


def cmd_spectral(args) -> int:
    text = _read(args.coeffs) if Path(args.coeffs).is_file() else args.coeffs
    try:
        raw = json.loads(text)
        c = [complex(*v) if isinstance(v, list) else complex(v) for v in raw]
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise InvalidArgument(f"malformed coefficient list: {exc}") from None
    total, verdict = spectral_membership(c, args.L, args.N)
    print(json.dumps({"partial_sum": total, "pass": verdict}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heatreach", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, target=True):
        p.add_argument("--config", help="run configuration JSON")
        if target:
            p.add_argument("--target", help="power series target JSON")
        p.add_argument("--out", help="output directory")
        p.add_argument("--real", action="store_true", help="keep only real parts of the controls")
        p.add_argument("--tol", type=float, default=None, help="fail with code 3 above this error")

    p = sub.add_parser("synthesize", help="compute boundary controls for a target")
    common(p)
    p.set_defaults(func=cmd_synthesize)
    p = sub.add_parser("verify", help="simulate stored controls and measure the reach error")
    common(p)
    p.add_argument("--controls", help="controls CSV (default OUT/controls.csv)")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("contour", help="write the integration contour and its checks")
    p.add_argument("--L0", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--out", help="CSV path")
    p.set_defaults(func=cmd_contour)
    p = sub.add_parser("carleman", help="energy identities and observability ratio for eigenmodes")
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--mode", type=int, nargs="+", default=[1, 2])
    p.add_argument("--out", help="directory or CSV path")
    p.set_defaults(func=cmd_carleman)
    p = sub.add_parser("decompose", help="write the three densities of a target")
    common(p)
    p.set_defaults(func=cmd_decompose)
    p = sub.add_parser("one-sided", help="control at x = L with u(t, 0) = 0 for an odd target")
    common(p)
    p.set_defaults(func=cmd_one_sided)
    p = sub.add_parser("spectral", help="weighted sine-coefficient sum")
    p.add_argument("--coeffs", required=True, help="JSON list or file")
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--N", type=int, default=None)
    p.set_defaults(func=cmd_spectral)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AccuracyError as exc:
        print(f"accuracy failure: {exc}", file=sys.stderr)
        return 3
    except HeatReachError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1


cli_main = main


if __name__ == "__main__":
    sys.exit(main())
