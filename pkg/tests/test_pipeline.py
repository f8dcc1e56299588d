import json

import numpy as np
import pytest

from heatreach.chebyshev import PowerSeriesTarget
from heatreach.errors import HeatReachError, InvalidArgument, PreconditionError
from heatreach.pipeline import (ReachReport, RunConfig, is_odd_series, one_sided, spectral_membership,
                                synthesize, verify_reach)


def small(**kw):
    base = dict(n_points=51, n_steps=250, n_panels=32, n_order=16, fubini_points=3, pde_probe=2)
    base.update(kw)
    return RunConfig(**base)


@pytest.fixture(scope="module")
def z2():
    return synthesize(PowerSeriesTarget.monomial(2), small())


def test_config_validation():
    with pytest.raises(PreconditionError):
        RunConfig(L=1.3, L0=1.2)
    with pytest.raises(PreconditionError):
        RunConfig(T=0.2)
    with pytest.raises(PreconditionError):
        RunConfig(n_points=2)
    with pytest.raises(PreconditionError):
        RunConfig(mu=-1)
    with pytest.raises(InvalidArgument):
        RunConfig.from_dict({"bogus": 1})
    with pytest.raises(InvalidArgument):
        RunConfig.from_json("{not json")
    with pytest.raises(InvalidArgument):
        RunConfig.from_json("[1, 2]")
    cfg = RunConfig.from_json('{"n_points": 11, "T": 2.0}')
    assert cfg.n_points == 11 and cfg.T == 2.0


def test_refined_config():
    cfg = small().refined(2)
    assert cfg.n_points == 101 and cfg.n_steps == 1000


def test_small_run_reaches_target(z2):
    rep = z2.report
    assert rep.reach_error < 5e-3
    assert set(rep.timings) == {"decompose", "contour", "sources", "pde_residual", "traces", "hum", "simulate"}
    assert rep.stages["three_way"]["w0_vs_target_inf"] < 1e-4
    assert rep.stages["fubini_inf"] < 1e-6
    assert rep.stages["hum"]["duality_mismatch"] < 1e-10
    assert 0 < rep.stages["w_T_over_w0"] < 1
    assert rep.stages["imag_over_real"] < 1e-2


def test_control_split_adds_up(z2):
    total = z2.trace_controls + z2.hum_controls
    assert np.array_equal(total.v_minus, z2.controls.v_minus)


def test_report_json_round_trip(z2, tmp_path):
    z2.report.to_json(tmp_path / "r.json")
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["schema_version"] == 1
    assert data["reach_error"] == z2.report.reach_error
    assert data["config"]["n_points"] == 51


def test_verify_reach_matches_synthesis(z2):
    err, _, profile = verify_reach(z2.controls, PowerSeriesTarget.monomial(2), small())
    assert err == z2.report.reach_error
    assert profile.shape == (49, 4)
    with pytest.raises(InvalidArgument):
        verify_reach(z2.controls, PowerSeriesTarget.monomial(2), small(n_steps=100))


def test_zero_target_gives_zero_controls():
    res = synthesize(PowerSeriesTarget([0.0]), small(pde_probe=0, fubini_points=0))
    assert np.all(res.controls.v_minus == 0) and np.all(res.controls.v_plus == 0)
    assert res.report.reach_error == 0


def test_synthesis_is_linear(z2):
    twice = synthesize(PowerSeriesTarget.monomial(2, 2.0), small(pde_probe=0, fubini_points=0), simulate=False)
    scale = np.max(np.abs(z2.controls.v_minus))
    assert np.max(np.abs(twice.controls.v_minus - 2 * z2.controls.v_minus)) < 1e-8 * scale
    assert np.max(np.abs(twice.controls.v_plus - 2 * z2.controls.v_plus)) < 1e-8 * scale


def test_real_projection(z2):
    res = synthesize(PowerSeriesTarget.monomial(2), small(real=True, pde_probe=0, fubini_points=0))
    assert np.all(res.controls.v_minus.imag == 0)
    assert np.allclose(res.controls.v_minus.real, z2.controls.v_minus.real, atol=1e-10)
    assert res.report.reach_error < 5e-3


def test_complex_target():
    k = PowerSeriesTarget([0.5j, 0, 1])
    res = synthesize(k, small(pde_probe=0, fubini_points=0))
    assert res.report.reach_error < 5e-3


def test_stage_tags_on_failure():
    with pytest.raises(HeatReachError) as info:
        synthesize(PowerSeriesTarget([1.0]), small(p=-1))
    assert info.value.stage == "decompose"
    assert str(info.value).startswith(f"[{info.value.stage}]")


def test_odd_series_detection():
    assert is_odd_series(PowerSeriesTarget([0, 1, 0, -2]))
    assert not is_odd_series(PowerSeriesTarget([0, 1, 0.1]))


def test_one_sided_rejects_bad_input():
    with pytest.raises(InvalidArgument):
        one_sided(PowerSeriesTarget.monomial(2), small())
    with pytest.raises(InvalidArgument):
        one_sided(PowerSeriesTarget.monomial(3), small(n_points=50))


def test_one_sided_small():
    res = one_sided(PowerSeriesTarget.monomial(3), small(pde_probe=0, fubini_points=0))
    assert res.oddness < 1e-10
    assert res.reach_error < 5e-3
    assert abs(res.reach_error - res.two_sided_error) < 0.5 * res.two_sided_error
    assert res.grid.n_points == 26


def test_spectral_membership():
    total, ok = spectral_membership([1.0, 0.0, 0.0])
    assert abs(total - np.exp(np.pi)) < 1e-12 and ok
    total, _ = spectral_membership([0, 1j])
    assert abs(total - 2 * np.exp(2 * np.pi)) < 1e-9
    assert spectral_membership([1, 1, 1], N=1)[0] == np.exp(np.pi)
    assert not spectral_membership([1.0], threshold=1.0)[1]
    with pytest.raises(InvalidArgument):
        spectral_membership([1.0], L=0.0)
    with pytest.raises(InvalidArgument):
        spectral_membership([np.inf])


def test_report_defaults():
    assert ReachReport().as_dict()["reach_error"] is None
