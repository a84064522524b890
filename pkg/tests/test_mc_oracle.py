import math

import numpy as np
import pytest

from levycredit import (
    ConfigError,
    LevyModel,
    McEstimate,
    OracleConfig,
    PiEvaluator,
    RngStream,
    UnsupportedSchemeError,
    ballot_check,
    estimate_lambda_h,
    martingale_residual,
    uniform_bound_check,
)
from levycredit.mc_oracle import (
    estimate_lambda_schedule,
    first_passage_survival,
    grid_allowance,
    integrated_intensity,
    lambda_target,
    penetration_samples,
)
from levycredit.path_sim import EVENT, GRID, Path


def test_mcestimate_definition():
    x = np.arange(10.0)
    e = McEstimate.from_samples(x, {"seed": 1})
    assert e.mean == 4.5 and e.n_samples == 10
    assert e.std_error == pytest.approx(np.std(x, ddof=1) / math.sqrt(10), rel=1e-15)
    assert e.z(4.5) == 0.0
    with pytest.raises(ConfigError):
        McEstimate.from_samples([1.0])


@pytest.mark.parametrize("kw", [{"n_samples": 1}, {"h_schedule": (1e-3, 1e-2)},
                                {"h_schedule": (1e-2, -1.0)}, {"h_schedule": ()},
                                {"confidence": 0.0}, {"n_samples": 10.0}])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        OracleConfig(**kw)


def test_pure_drift_estimate_is_exactly_zero():
    m = LevyModel.dcp(0.5, 0.0, 1.0)
    e = estimate_lambda_h(m, 0.2, 1e-3, OracleConfig(n_samples=1000), RngStream(1))
    assert e.mean == 0.0 and e.std_error == 0.0


def test_integrand_bounds(vg_ref):
    cfg = OracleConfig(n_samples=5000, h_schedule=(1e-2,))
    d = penetration_samples(vg_ref, 0.0, [1e-2], cfg, RngStream(3))
    lam = -np.expm1(-d) / 1e-2
    assert np.all(lam >= 0) and np.all(lam <= 1 / 1e-2) and np.all(np.isfinite(lam))


def test_dcp_converges_to_closed_form(dcp_unit):
    """DCP(c=1, rho=1, beta=1), gap 0.3: target Pi(0.3) = 0.5 exp(-0.3)."""
    cfg = OracleConfig(n_samples=400_000, h_schedule=(1e-2, 1e-3, 1e-4))
    sched = estimate_lambda_schedule(dcp_unit, 0.3, cfg, RngStream(31))
    target = 0.5 * math.exp(-0.3)
    assert [e.extra["h"] for e in sched] == [1e-2, 1e-3, 1e-4]
    for e in sched:
        assert e.agrees(target, 3.0), (e.extra["h"], e.mean, e.std_error)


def test_schedule_shares_paths_with_single_h(dcp_unit):
    cfg = OracleConfig(n_samples=10_000, h_schedule=(1e-2,))
    one = estimate_lambda_h(dcp_unit, 0.1, 1e-2, cfg, RngStream(4))
    again = estimate_lambda_h(dcp_unit, 0.1, 1e-2, cfg, RngStream(4))
    assert one == again


def test_target_includes_drift_at_zero(dcp_neg):
    ev = PiEvaluator(dcp_neg)
    assert lambda_target(ev, 0.0) == 0.52
    assert lambda_target(ev, 0.0, exact_minimum=False) == 0.5


def test_grid_allowance():
    m = LevyModel.vg(-0.02, 0.1, 0.15, 0.01)
    cfg = OracleConfig(n_samples=2000, h_schedule=(1e-2,), min_steps=16)
    e = estimate_lambda_h(m, 0.0, 1e-2, cfg, RngStream(2))
    assert e.extra["dt"] == pytest.approx(1e-2 / 16)
    allow = grid_allowance(m, e)
    assert 0 < allow <= m.pos.mean() / 16
    exact = estimate_lambda_h(LevyModel.dcp(1, 1, 1), 0.0, 1e-2, cfg, RngStream(2))
    assert grid_allowance(LevyModel.dcp(1, 1, 1), exact) == 0.0


def _line(c, T):
    return Path.from_values([0.0, T], [0.0, c * T], EVENT, drift=c)


def test_integrated_intensity_pure_drift():
    m = LevyModel.dcp(-0.5, 1.0, 1.0)
    ev = PiEvaluator(m)
    # stays at its minimum: intensity -c + Pi(0) throughout
    assert integrated_intensity(ev, _line(-0.5, 2.0), 2.0) == pytest.approx(2.0, rel=1e-15)
    assert integrated_intensity(ev, _line(-0.5, 2.0), 0.5) == pytest.approx(0.5, rel=1e-15)
    up = LevyModel.dcp(1.0, 1.0, 1.0)
    ev = PiEvaluator(up)
    # gap grows as t: int_0^T 0.5 e^{-t} dt
    assert integrated_intensity(ev, _line(1.0, 3.0), 3.0) == pytest.approx(0.5 * (1 - math.exp(-3)),
                                                                          rel=1e-13)


def test_integrated_intensity_after_jump():
    m = LevyModel.dcp(-1.0, 1.0, 1.0)
    ev = PiEvaluator(m)
    # up-jump of 0.5 at t=0.2: gap 0.5 decays to 0 by t=0.7, then sits at the minimum
    p = Path.from_values([0.0, 0.2, 0.2, 1.0], [0.0, -0.2, 0.3, -0.5], EVENT, drift=-1.0)
    want = 0.2 * 1.5 + 0.5 * (1 - math.exp(-0.5)) + 0.3 * 1.5
    assert integrated_intensity(ev, p, 1.0) == pytest.approx(want, rel=1e-13)


def test_integrated_intensity_grid_trapezoid():
    m = LevyModel.dcp(1.0, 1.0, 1.0)
    ev = PiEvaluator(m)
    t = np.linspace(0, 1, 101)
    p = Path.from_values(t, t.copy(), GRID)
    got = integrated_intensity(ev, p, 1.0)
    assert got == pytest.approx(0.5 * (1 - math.exp(-1)), rel=1e-4)


def test_martingale_dcp_positive_and_negative_drift():
    for c, seed in [(1.0, 1), (-0.02, 2)]:
        r = martingale_residual(LevyModel.dcp(c, 1.0, 1.0), 1.0, OracleConfig(n_samples=30_000),
                                RngStream(seed))
        assert abs(r.mean) <= 3 * r.std_error, (c, r)
        assert r.extra["defaults"] > 0.1


def test_martingale_no_negative_jumps():
    m = LevyModel.dcp(1.0, 0.0, 1.0, rho_pos=2.0, beta_pos=1.0)
    r = martingale_residual(m, 1.0, OracleConfig(n_samples=2000), RngStream(3))
    assert r.mean == 0.0 and r.extra["defaults"] == 0.0 and r.extra["compensator"] == 0.0


def test_martingale_grid_refinement():
    """Grid compensator for a drifted gamma model: halving dt moves the
    residual toward 0 or keeps it within the standard error."""
    m = LevyModel.dgamma(0.2, 0.5, 0.1)
    ev = PiEvaluator(m, method="closed")
    res = []
    for spy in (32, 64):
        r = martingale_residual(m, 1.0, OracleConfig(n_samples=4000, steps_per_year=spy),
                                RngStream(9), ev)
        res.append(r)
    assert abs(res[1].mean) <= abs(res[0].mean) + 3 * res[1].std_error


def test_ballot_requires_spectrally_negative_positive_drift():
    with pytest.raises(UnsupportedSchemeError):
        ballot_check(LevyModel.dcp(-1.0, 1.0, 1.0), 0.1, 5, OracleConfig(n_samples=100), RngStream(1))
    with pytest.raises(UnsupportedSchemeError):
        ballot_check(LevyModel.dcp(1.0, 1.0, 1.0, rho_pos=1.0), 0.1, 5, OracleConfig(n_samples=100),
                     RngStream(1))


def test_ballot_no_jumps_degenerate():
    m = LevyModel.dcp(2.0, 0.0, 1.0)
    bb = ballot_check(m, 0.5, 4, OracleConfig(n_samples=100), RngStream(1))
    for b in bb[:-1]:
        assert b.survival_side.mean == 0.0 and b.weighted_side.mean == 0.0
    assert bb[-1].survival_side.mean == 1.0 and bb[-1].weighted_side.mean == 1.0
    assert all(b.z == 0.0 for b in bb)


def test_ballot_bins_sum_to_survival(dcp_unit):
    cfg = OracleConfig(n_samples=100_000)
    bb = ballot_check(dcp_unit, 0.1, 20, cfg, RngStream(6))
    direct, weighted = first_passage_survival(dcp_unit, [0.1], cfg, RngStream(6))
    assert sum(b.survival_side.mean for b in bb) == pytest.approx(direct[0].mean, rel=1e-12)
    assert sum(b.weighted_side.mean for b in bb) == pytest.approx(weighted[0].mean, rel=1e-12)
    assert abs(direct[0].mean - weighted[0].mean) <= 3 * math.hypot(direct[0].std_error,
                                                                   weighted[0].std_error)


def test_ballot_z_is_calibrated(dcp_unit):
    zs = np.array([b.z for s in range(10)
                   for b in ballot_check(dcp_unit, 0.1, 20, OracleConfig(n_samples=50_000),
                                         RngStream(500 + s))])
    assert abs(zs.mean()) < 0.3 and 0.75 < zs.std() < 1.25


def test_uniform_bound_examples():
    m = LevyModel.dcp(-1.0, 1.0, 1.0)
    cfg = OracleConfig(n_samples=50_000, h_schedule=(1e-1, 1e-2, 1e-3))
    rep = uniform_bound_check(m, [0.0, 0.2, 5.0], cfg, RngStream(7))
    assert rep.bound == 1.5 and rep.ok and len(rep.estimates) == 9
    far = [e for e in rep.estimates if e.extra["gap"] == 5.0]
    assert all(e.mean < 0.05 for e in far)
    up = uniform_bound_check(LevyModel.dcp(1.0, 1.0, 1.0), [0.0], cfg, RngStream(7))
    assert up.bound == 0.5 and up.ok


def test_uniform_bound_reports_violation():
    m = LevyModel.dcp(-1.0, 1.0, 1.0)
    cfg = OracleConfig(n_samples=50_000, h_schedule=(1e-2,))
    # k negative turns the check into "mean + |k| SE <= bound", violated at gap 0
    rep = uniform_bound_check(m, [0.0], cfg, RngStream(7), k=-50.0)
    assert not rep.ok and rep.violations
