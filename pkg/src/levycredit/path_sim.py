"""Path simulation, running minima, barrier sampling and default times.

Two schemes are available:

``event``
    Exact, event-driven simulation for compound-Poisson jump parts. Points
    are stored at ``t = 0``, twice at each jump time (pre- and post-jump)
    and at the horizon; between stored points the path is linear with slope
    ``c``, so the running minimum over stored points is the exact running
    minimum.
``grid``
    Fixed time grid with independent increments ``c dt - dS + dS'``. The
    running minimum is taken over grid points only and is therefore biased
    upward by at most ``max(c, 0) dt`` plus the positive-jump mass of the
    cell holding the true minimum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DataIntegrityError, ParameterError, UnsupportedSchemeError
from .levy_core import CompoundPoissonExp, LevyModel, ZeroSubordinator
from .streams import RngStream

__all__ = [
    "Path",
    "Barrier",
    "simulate_path",
    "simulate_path_from",
    "sample_barrier",
    "sample_barriers",
    "default_time",
    "horizon_grid",
    "sample_minima",
    "check_horizons",
    "EVENT",
    "GRID",
]

EVENT = "event"
GRID = "grid"


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Path:
    """A sampled trajectory of ``X`` with its running minimum.

    ``times`` may repeat (event-driven paths store a jump as two points at
    the same time). ``dt`` is set for grid paths only, ``drift`` for event
    paths only.
    """

    times: np.ndarray
    values: np.ndarray
    run_min: np.ndarray
    scheme: str
    dt: Optional[float] = None
    provenance: Optional[dict] = None
    drift: Optional[float] = None
    jump_times: Optional[np.ndarray] = None
    jump_sizes: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("times", "values", "run_min"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        for name in ("jump_times", "jump_sizes"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.scheme not in (EVENT, GRID):
            raise ParameterError(f"unknown scheme {self.scheme!r}", field="scheme")
        if not (len(self.times) == len(self.values) == len(self.run_min)) or len(self.times) == 0:
            raise DataIntegrityError("path arrays must be nonempty and equally long")

    @classmethod
    def from_values(cls, times, values, scheme, **kw):
        values = np.asarray(values, dtype=float)
        return cls(times, values, prefix_minimum(values), scheme, **kw)

    @property
    def gaps(self):
        return self.values - self.run_min

    @property
    def horizon(self):
        return float(self.times[-1])

    def validate(self):
        """Raise :class:`DataIntegrityError` unless every Path invariant holds."""
        t, x, m = self.times, self.values, self.run_min
        if np.any(np.diff(t) < 0):
            raise DataIntegrityError("times must be nondecreasing")
        if not np.all(np.isfinite(x)):
            raise DataIntegrityError("values must be finite")
        expected = prefix_minimum(x)
        bad = np.flatnonzero(m != expected)
        if bad.size:
            i = int(bad[0])
            raise DataIntegrityError(
                f"run_min[{i}] = {m[i]!r} but the prefix minimum is {expected[i]!r}"
            )
        return self

    def sample_at(self, t):
        """Value of ``X`` at arbitrary times (event paths are piecewise linear)."""
        t = np.asarray(t, dtype=float)
        if self.scheme == GRID:
            idx = np.searchsorted(self.times, t, side="right") - 1
            return self.values[np.clip(idx, 0, len(self.values) - 1)]
        # right-continuous: take the last stored point at or before t, then drift
        idx = np.searchsorted(self.times, t, side="right") - 1
        idx = np.clip(idx, 0, len(self.values) - 1)
        return self.values[idx] + (self.drift or 0.0) * (t - self.times[idx])


def prefix_minimum(values):
    """``out[i] = min(0, values[0], ..., values[i])``."""
    values = np.asarray(values, dtype=float)
    out = np.minimum.accumulate(values)
    if out.size:
        out[0] = min(0.0, values[0])
        np.minimum.accumulate(out, out=out)
    return out


@dataclass(frozen=True)
class Barrier:
    """Log-barrier ``D`` with ``P(D <= x) = e^x`` for ``x < 0``."""

    D: float
    provenance: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.D < 0:
            raise ParameterError(f"barrier must be negative, got {self.D!r}", field="D")


def _positive_uniform(gen, size=None):
    u = gen.random(size)
    if size is None:
        while u == 0.0:
            u = gen.random()
        return u
    zero = u == 0.0
    while zero.any():
        u[zero] = gen.random(int(zero.sum()))
        zero = u == 0.0
    return u


def sample_barrier(rng: RngStream):
    """Draw ``D = ln U`` with ``U`` uniform on (0, 1)."""
    u = _positive_uniform(rng.generator())
    d = math.log(u)
    if d == 0.0:  # spacing of doubles just below 1
        d = -np.finfo(float).epsneg
    return Barrier(d, rng.provenance())


def sample_barriers(gen, size):
    """Vectorized barrier draws from an explicit generator."""
    d = np.log(_positive_uniform(gen, size))
    return np.minimum(d, -np.finfo(float).epsneg)


def _check_horizon(horizon):
    if not (isinstance(horizon, (int, float)) and math.isfinite(horizon) and horizon > 0):
        raise ParameterError(f"horizon must be a positive real, got {horizon!r}", field="horizon")
    return float(horizon)


def _require_event_model(m):
    if not m.supports_event_driven:
        raise UnsupportedSchemeError(
            f"event-driven simulation needs compound Poisson jumps; family {m.family!r} has "
            f"{m.neg.kind}/{m.pos.kind} components"
        )


def _draw_cp_jumps(gen, sub, horizon, counts_size=None):
    """Jump times and sizes of one compound Poisson component on [0, horizon]."""
    if isinstance(sub, ZeroSubordinator):
        if counts_size is None:
            return np.empty(0), np.empty(0)
        return np.zeros(counts_size, dtype=np.int64), np.empty(0), np.empty(0)
    assert isinstance(sub, CompoundPoissonExp)
    if counts_size is None:
        k = gen.poisson(sub.rate * horizon)
        return gen.uniform(0.0, horizon, k), gen.exponential(1.0 / sub.beta, k)
    counts = gen.poisson(sub.rate * horizon, counts_size)
    k = int(counts.sum())
    return counts, gen.uniform(0.0, horizon, k), gen.exponential(1.0 / sub.beta, k)


def simulate_path(m: LevyModel, horizon, rng: RngStream, *, steps_per_year=None,
                  event_driven=False):
    """Simulate one path of ``X`` on ``[0, horizon]``.

    Parameters
    ----------
    m : LevyModel
    horizon : float
        Path length in years.
    rng : RngStream
        Source of randomness; the path is a deterministic function of it.
    steps_per_year : float, optional
        Grid resolution. Required unless ``event_driven`` is set.
    event_driven : bool
        Exact simulation; compound Poisson models only.
    """
    return simulate_path_from(m, horizon, rng.generator(), steps_per_year=steps_per_year,
                              event_driven=event_driven, provenance=rng.provenance())


def simulate_path_from(m: LevyModel, horizon, gen, *, steps_per_year=None, event_driven=False,
                       provenance=None):
    """:func:`simulate_path` drawing from an explicit ``numpy`` generator."""
    horizon = _check_horizon(horizon)
    prov = provenance
    c = m.c
    if event_driven:
        _require_event_model(m)
        tn, yn = _draw_cp_jumps(gen, m.neg, horizon)
        tp, yp = _draw_cp_jumps(gen, m.pos, horizon)
        jt = np.concatenate([tn, tp])
        js = np.concatenate([-yn, yp])
        order = np.argsort(jt, kind="stable")
        jt, js = jt[order], js[order]
        cum = np.cumsum(js)
        cum_prev = np.concatenate([[0.0], cum])[:-1]
        pre = c * jt + cum_prev
        post = c * jt + cum
        total = cum[-1] if cum.size else 0.0
        times = np.concatenate([[0.0], np.repeat(jt, 2), [horizon]])
        values = np.empty(times.size)
        values[0] = 0.0
        values[1:-1:2] = pre
        values[2:-1:2] = post
        values[-1] = c * horizon + total
        return Path.from_values(times, values, EVENT, provenance=prov, drift=c,
                                jump_times=jt, jump_sizes=js)

    if steps_per_year is None or not steps_per_year > 0:
        raise ParameterError("grid simulation needs steps_per_year > 0", field="steps_per_year")
    steps = max(1, int(math.ceil(horizon * steps_per_year - 1e-9)))
    times = np.linspace(0.0, horizon, steps + 1)
    dts = np.diff(times)
    inc = c * dts - m.neg.sample_increments(gen, dts) + m.pos.sample_increments(gen, dts)
    values = np.concatenate([[0.0], np.cumsum(inc)])
    return Path.from_values(times, values, GRID, dt=horizon / steps, provenance=prov)


def default_time(p: Path, b: Barrier):
    """First time ``X_t <= D``; ``None`` if the path stays above ``D``.

    Exact on event paths (linear interpolation on drift segments); on grid
    paths the first grid point at or below the barrier, which is
    right-biased.
    """
    D = b.D if isinstance(b, Barrier) else float(b)
    # the running minimum is nonincreasing, so the first crossing is a binary search
    i = int(np.searchsorted(-p.run_min, -D, side="left"))
    if i >= len(p.values):
        return None
    if p.scheme == GRID or i == 0:
        return float(p.times[i])
    t0, t1 = p.times[i - 1], p.times[i]
    if t1 == t0:
        return float(t1)
    v0, v1 = p.values[i - 1], p.values[i]
    if v1 == v0:
        return float(t0)
    # drift segment: solve v0 + slope * (t - t0) = D
    tau = t0 + (D - v0) / (v1 - v0) * (t1 - t0)
    return float(min(max(tau, t0), t1))


# ----------------------------------------------------------------------------
# Vectorized minima for the Monte Carlo estimators
# ----------------------------------------------------------------------------


def horizon_grid(horizons, min_steps=256, steps_per_year=None):
    """Time grid containing every horizon as a node.

    On the segment ending at ``h_k`` the step is at most ``h_k / min_steps``
    (and at most ``1 / steps_per_year`` when given). Returns ``(nodes,
    idx)`` with ``nodes[idx[k]] == horizons[k]``.
    """
    hs = np.asarray(horizons, dtype=float)
    nodes = [np.zeros(1)]
    idx = []
    start = 0.0
    count = 0
    for h in hs:
        length = h - start
        n = int(math.ceil(length * min_steps / h - 1e-9))
        if steps_per_year:
            n = max(n, int(math.ceil(length * steps_per_year - 1e-9)))
        n = max(n, 1)
        seg = np.linspace(start, h, n + 1)[1:]
        seg[-1] = h
        nodes.append(seg)
        count += n
        idx.append(count)
        start = h
    return np.concatenate(nodes), np.asarray(idx)


def check_horizons(horizons):
    hs = np.atleast_1d(np.asarray(horizons, dtype=float))
    if hs.ndim != 1 or hs.size == 0 or np.any(~np.isfinite(hs)) or np.any(hs <= 0):
        raise ParameterError("horizons must be positive and finite", field="horizons")
    if np.any(np.diff(hs) <= 0):
        raise ParameterError("horizons must be strictly increasing", field="horizons")
    return hs


def sample_minima(m: LevyModel, horizons, gen, size, *, event_driven=False, min_steps=256,
                  steps_per_year=None):
    """Running minimum and terminal value of ``size`` fresh paths.

    All horizons are read off the same paths (common random numbers).

    Returns
    -------
    minimum, terminal : ndarray, shape (size, len(horizons))
        ``inf_{0 <= s <= h} X_s`` (so always ``<= 0``) and ``X_h``.
    """
    hs = check_horizons(horizons)
    if event_driven:
        _require_event_model(m)
        return _event_minima(m, hs, gen, size)
    nodes, idx = horizon_grid(hs, min_steps, steps_per_year)
    dts = np.broadcast_to(np.diff(nodes), (size, nodes.size - 1))
    inc = m.c * dts - m.neg.sample_increments(gen, dts) + m.pos.sample_increments(gen, dts)
    x = np.cumsum(inc, axis=1)
    run = np.minimum.accumulate(x, axis=1)
    col = idx - 1
    minimum = np.minimum(run[:, col], 0.0)
    return minimum, x[:, col]


def _event_minima(m, hs, gen, size):
    c = m.c
    hmax = float(hs[-1])
    cn, tn, yn = _draw_cp_jumps(gen, m.neg, hmax, size)
    cp, tp, yp = _draw_cp_jumps(gen, m.pos, hmax, size)
    counts = cn + cp
    kmax = int(counts.max()) if size else 0
    minimum = np.empty((size, hs.size))
    terminal = np.empty((size, hs.size))
    if kmax == 0:
        for k, h in enumerate(hs):
            terminal[:, k] = c * h
            minimum[:, k] = min(0.0, c * h)
        return minimum, terminal
    pid = np.concatenate([np.repeat(np.arange(size), cn), np.repeat(np.arange(size), cp)])
    et = np.concatenate([tn, tp])
    ej = np.concatenate([-yn, yp])
    order = np.lexsort((et, pid))
    pid, et, ej = pid[order], et[order], ej[order]
    start = np.cumsum(counts) - counts
    rank = np.arange(pid.size) - start[pid]
    T2 = np.full((size, kmax), np.inf)
    J2 = np.zeros((size, kmax))
    T2[pid, rank] = et
    J2[pid, rank] = ej
    # row-wise cumsum is sequential within each path, as in simulate_path
    cum0 = np.concatenate([np.zeros((size, 1)), np.cumsum(J2, axis=1)], axis=1)
    cum_prev, cum = cum0[:, :-1], cum0[:, 1:]
    rows = np.arange(size)
    for k, h in enumerate(hs):
        valid = T2 <= h
        drift = c * np.where(valid, T2, 0.0)
        pre = np.where(valid, drift + cum_prev, np.inf)
        post = np.where(valid, drift + cum, np.inf)
        term = c * h + cum0[rows, valid.sum(axis=1)]
        lo = np.minimum(pre.min(axis=1), post.min(axis=1))
        terminal[:, k] = term
        minimum[:, k] = np.minimum(np.minimum(lo, term), 0.0)
    return minimum, terminal
