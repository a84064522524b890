import math

import numpy as np
import pytest

from levycredit import (
    Barrier,
    DataIntegrityError,
    LevyModel,
    ParameterError,
    Path,
    RngStream,
    UnsupportedSchemeError,
    default_time,
    sample_barrier,
    simulate_path,
)
from levycredit.path_sim import (
    EVENT,
    GRID,
    horizon_grid,
    prefix_minimum,
    sample_barriers,
    sample_minima,
)
from levycredit.streams import map_blocks


def test_drift_only_line():
    m = LevyModel.dcp(1.0, 0.0, 1.0)
    p = simulate_path(m, 1.0, RngStream(1), event_driven=True)
    np.testing.assert_array_equal(p.times, [0.0, 1.0])
    np.testing.assert_array_equal(p.values, [0.0, 1.0])
    np.testing.assert_array_equal(p.run_min, [0.0, 0.0])
    g = simulate_path(m, 1.0, RngStream(1), steps_per_year=10)
    np.testing.assert_allclose(g.values, g.times, rtol=0, atol=1e-15)
    assert np.all(g.run_min == 0.0)


def test_vg_path_shape(vg_ref):
    p = simulate_path(vg_ref, 5.0, RngStream(3), steps_per_year=250)
    assert p.scheme == GRID and p.times.size == 1251 and p.horizon == 5.0
    inc = np.diff(p.values)
    assert (inc > 0).any() and (inc < 0).any()
    p.validate()


def test_event_path_structure():
    m = LevyModel.dcp(0.7, 3.0, 2.0, rho_pos=2.0, beta_pos=1.0)
    p = simulate_path(m, 2.0, RngStream(9), event_driven=True)
    p.validate()
    k = p.jump_times.size
    assert k > 0 and p.times.size == 2 * k + 2
    # pre- and post-jump values sit at the same time and differ by the jump
    np.testing.assert_array_equal(p.times[1:-1:2], p.times[2:-1:2])
    np.testing.assert_allclose(p.values[2:-1:2] - p.values[1:-1:2], p.jump_sizes, atol=1e-14)
    # between stored points the path drifts with slope c
    seg = np.diff(p.times) > 0
    slopes = np.diff(p.values)[seg] / np.diff(p.times)[seg]
    np.testing.assert_allclose(slopes, 0.7, rtol=1e-9)


def test_event_driven_rejected_for_gamma(vg_ref):
    with pytest.raises(UnsupportedSchemeError):
        simulate_path(vg_ref, 1.0, RngStream(1), event_driven=True)
    with pytest.raises(UnsupportedSchemeError):
        sample_minima(vg_ref, [1.0], RngStream(1).generator(), 10, event_driven=True)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("inf"), float("nan")])
def test_bad_horizon(bad, dcp_unit):
    with pytest.raises(ParameterError):
        simulate_path(dcp_unit, bad, RngStream(1), event_driven=True)


def test_grid_needs_resolution(vg_ref):
    with pytest.raises(ParameterError):
        simulate_path(vg_ref, 1.0, RngStream(1))


def test_mean_of_x1(dcp_unit):
    # E[X_1] = c - rho / beta = 0
    def block(s, size):
        return sample_minima(dcp_unit, [1.0], s.generator(), size, event_driven=True)[1][:, 0]

    x = map_blocks(block, 10**6, 1 << 16, RngStream(11))
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean()) <= 3 * se


def test_mean_of_x1_two_sided_grid():
    m = LevyModel.vg(0.05, 0.2, 0.2, -0.03)
    gen = RngStream(5).generator()
    _, x = sample_minima(m, [1.0], gen, 200_000, min_steps=8)
    x = x[:, 0]
    assert abs(x.mean() - m.mean_rate()) <= 3 * x.std(ddof=1) / math.sqrt(x.size)


def test_barrier_distribution():
    d = sample_barriers(RngStream(21).generator(), 10**6)
    assert np.all(d < 0)
    p = np.mean(d <= -0.5)
    assert abs(p - math.exp(-0.5)) <= 3 * math.sqrt(p * (1 - p) / d.size)
    assert abs(np.mean(-d) - 1.0) <= 3 * np.std(d, ddof=1) / math.sqrt(d.size)


def test_sample_barrier_is_deterministic():
    b1, b2 = sample_barrier(RngStream(4).barriers()), sample_barrier(RngStream(4).barriers())
    assert b1 == b2 and b1.D < 0
    with pytest.raises(ParameterError):
        Barrier(0.0)


def test_default_time_examples():
    t = np.linspace(0, 1, 11)
    p = Path.from_values(t, np.full(11, -0.5) * (t > 0), GRID)
    assert default_time(p, Barrier(-10.0)) is None
    line = Path.from_values([0.0, 1.0], [0.0, -1.0], EVENT, drift=-1.0)
    assert default_time(line, Barrier(-0.5)) == 0.5
    # closed inequality: touching the barrier is default
    assert default_time(line, Barrier(-1.0)) == 1.0
    # a jump through the barrier defaults at the jump time
    jump = Path.from_values([0.0, 0.3, 0.3, 1.0], [0.0, 0.3, -0.7, 0.0], EVENT, drift=1.0)
    assert default_time(jump, Barrier(-0.5)) == 0.3
    g = Path.from_values([0.0, 0.5, 1.0], [0.0, -0.4, -0.6], GRID)
    assert default_time(g, Barrier(-0.5)) == 1.0


def test_survival_matches_conditional_expectation(dcp_neg):
    # P(tau > t) estimated with sampled barriers vs E[exp(min X)] with the
    # barrier integrated out, on the same 10^5 paths
    m = LevyModel.dcp(-0.3, 1.0, 1.5, rho_pos=0.5, beta_pos=2.0)
    root = RngStream(8)
    n, T = 100_000, 1.0
    gp = root.paths().generator()
    ds = sample_barriers(root.barriers().generator(), n)
    alive = np.empty(n)
    z = np.empty(n)
    for i in range(n):
        p = simulate_path(m, T, root.paths().child(i), event_driven=True)
        alive[i] = default_time(p, Barrier(float(ds[i]))) is None
        z[i] = math.exp(p.run_min[-1])
    diff = alive - z
    assert abs(diff.mean()) <= 3 * diff.std(ddof=1) / math.sqrt(n)


def test_run_min_prefix_check_on_many_paths(vg_ref, dcp_unit):
    for i in range(500):
        p = simulate_path(vg_ref, 0.5, RngStream(i), steps_per_year=64)
        np.testing.assert_array_equal(p.run_min, prefix_minimum(p.values))
        q = simulate_path(dcp_unit, 3.0, RngStream(i), event_driven=True)
        np.testing.assert_array_equal(q.run_min, prefix_minimum(q.values))
        assert np.all(np.diff(q.run_min) <= 0) and np.all(q.run_min <= q.values)


def test_validate_detects_corruption(dcp_unit):
    p = simulate_path(dcp_unit, 5.0, RngStream(2), event_driven=True)
    bad = p.run_min.copy()
    bad[-1] += 1.0
    with pytest.raises(DataIntegrityError):
        Path(p.times, p.values, bad, EVENT).validate()
    with pytest.raises(DataIntegrityError):
        Path(p.times[::-1], p.values, p.run_min, EVENT).validate()


def test_path_arrays_are_read_only(dcp_unit):
    p = simulate_path(dcp_unit, 1.0, RngStream(2), event_driven=True)
    with pytest.raises(ValueError):
        p.values[0] = 1.0


def test_sample_at_event_path():
    p = Path.from_values([0.0, 0.5, 0.5, 1.0], [0.0, 0.5, -0.5, 0.0], EVENT, drift=1.0)
    np.testing.assert_allclose(p.sample_at([0.25, 0.5, 0.75]), [0.25, -0.5, -0.25])


def test_horizon_grid_contains_horizons():
    hs = [1e-4, 1e-3, 0.01, 1.0]
    nodes, idx = horizon_grid(hs, 256)
    assert np.all(nodes[idx] == hs)
    assert np.all(np.diff(nodes) > 0)
    start = 0.0
    for h, k in zip(hs, idx):
        seg = np.diff(nodes[nodes <= h][-(k + 1):])
        assert seg.max() <= h / 256 * (1 + 1e-9)
        start = h
    single, _ = horizon_grid([1e-3], 256)
    assert single.size == 257 and np.allclose(np.diff(single), 1e-3 / 256)


def test_event_minima_agree_with_event_paths():
    # same law from the vectorized kernel and from stored event paths
    m = LevyModel.dcp(0.5, 2.0, 1.0, rho_pos=1.0, beta_pos=1.0)
    n = 40_000
    mins, term = sample_minima(m, [0.5, 2.0], RngStream(1).generator(), n, event_driven=True)
    ref = np.array([[simulate_path(m, 2.0, RngStream(2).child(i), event_driven=True).run_min[-1]]
                    for i in range(n)])[:, 0]
    a, b = mins[:, 1], ref
    se = math.hypot(a.std(ddof=1), b.std(ddof=1)) / math.sqrt(n)
    assert abs(a.mean() - b.mean()) <= 4 * se
    assert np.all(mins[:, 1] <= mins[:, 0]) and np.all(mins <= 0)


def test_grid_refinement_rate(dcp_unit):
    """Grid minima are biased upward by O(dt).

    Each exact event path of DCP(c=1, rho=1, beta=1) on [0, 1] is read off
    on grids dt = 1/8 ... 1/128; its values there have the law of the grid
    scheme, and the per-path bias (grid minimum minus exact minimum) is
    nonnegative. Measured with 20000 paths: slope of log(bias) against
    log(dt) is 0.98, bias about 0.24 dt.
    """
    n = 20_000
    dts = 2.0 ** -np.arange(3, 8)
    grids = [np.linspace(0, 1, int(round(1 / dt)) + 1) for dt in dts]
    bias = np.zeros((n, dts.size))
    for i in range(n):
        p = simulate_path(dcp_unit, 1.0, RngStream(100).child(i), event_driven=True)
        exact = p.run_min[-1]
        for j, g in enumerate(grids):
            bias[i, j] = min(0.0, p.sample_at(g).min()) - exact
    assert np.all(bias >= -1e-15)
    mean = bias.mean(axis=0)
    slope = np.polyfit(np.log(dts), np.log(mean), 1)[0]
    assert 0.9 <= slope <= 1.1
    assert np.all(mean[1:] < mean[:-1])
