"""Brute-force Monte Carlo estimators used to check the intensity formula.

Everything here simulates; nothing calls the closed-form intensity except to
produce the *target* that an estimate is compared with.

On ``{tau > t}`` with gap ``y = X_t - inf X``, the probability of default in
``(t, t + h]`` is ``E[1 - exp(-((-y) - M_h)^+)]`` where ``M_h`` is the running
minimum of a fresh path over ``[0, h]`` (the barrier is exponential, so only
the penetration below the current minimum matters). Dividing by ``h`` gives
the finite-horizon likelihood ``lambda^h`` whose limit is the intensity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import ConfigError, ParameterError, UnsupportedSchemeError
from .intensity import GapState, PiEvaluator, intensity_at, intensity_series
from .levy_core import LevyModel
from .path_sim import (
    EVENT,
    default_time,
    sample_barriers,
    sample_minima,
    simulate_path_from,
)
from .streams import RngStream, map_blocks

__all__ = [
    "McEstimate",
    "OracleConfig",
    "penetration_samples",
    "estimate_lambda_h",
    "estimate_lambda_schedule",
    "lambda_target",
    "grid_allowance",
    "integrated_intensity",
    "martingale_residual",
    "BallotBin",
    "ballot_check",
    "first_passage_survival",
    "BoundReport",
    "uniform_bound_check",
]

# Gauss-Legendre rule for integrating Pi along drift segments of event paths.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with its standard error (``std(ddof=1) / sqrt(n)``)."""

    mean: float
    std_error: float
    n_samples: int
    provenance: Optional[dict] = None
    extra: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_samples(cls, samples, provenance=None, **extra):
        x = np.asarray(samples, dtype=float).ravel()
        if x.size < 2:
            raise ConfigError("need at least two samples for a standard error", field="n_samples")
        mean = float(np.mean(x))
        se = float(np.std(x, ddof=1) / math.sqrt(x.size))
        return cls(mean, se, int(x.size), provenance, extra)

    def z(self, target):
        """Signed z-score against ``target``; 0 for an exact, error-free match."""
        diff = self.mean - target
        if self.std_error == 0.0:
            return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        return diff / self.std_error

    def agrees(self, target, k=3.0, allowance=0.0):
        return abs(self.mean - target) <= k * self.std_error + allowance

    def to_dict(self):
        return {"mean": self.mean, "std_error": self.std_error, "n_samples": self.n_samples,
                "provenance": self.provenance, **self.extra}


@dataclass(frozen=True)
class OracleConfig:
    """Monte Carlo settings shared by the oracle and spread estimators.

    Parameters
    ----------
    n_samples : int
        Paths (or path/barrier pairs) per estimate.
    h_schedule : tuple of float
        Strictly decreasing horizons for the ``h -> 0`` study.
    min_steps : int
        Grid paths use at most ``h / min_steps`` as step on ``[0, h]``.
    confidence : float
        Multiplier on the standard error in every pass/fail decision.
    event_driven : bool, optional
        Exact simulation. ``None`` picks it whenever the model allows.
    steps_per_year : float, optional
        Extra cap on the grid step (used for long horizons and paths).
    """

    n_samples: int = 100_000
    h_schedule: tuple = (1e-2, 1e-3, 1e-4)
    min_steps: int = 256
    confidence: float = 3.0
    block_size: int = 4096
    workers: Optional[int] = None
    event_driven: Optional[bool] = None
    steps_per_year: Optional[float] = None

    def __post_init__(self):
        if isinstance(self.n_samples, bool) or not isinstance(self.n_samples, (int, np.integer)):
            raise ConfigError("n_samples must be an integer", field="n_samples")
        if self.n_samples < 2:
            raise ConfigError("n_samples must be at least 2", field="n_samples")
        hs = tuple(float(h) for h in self.h_schedule)
        if not hs or any(not (math.isfinite(h) and h > 0) for h in hs):
            raise ConfigError("h_schedule entries must be positive", field="h_schedule")
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise ConfigError("h_schedule must be strictly decreasing", field="h_schedule")
        object.__setattr__(self, "h_schedule", hs)
        if int(self.min_steps) < 1:
            raise ConfigError("min_steps must be positive", field="min_steps")
        if not self.confidence > 0:
            raise ConfigError("confidence must be positive", field="confidence")
        if int(self.block_size) < 1:
            raise ConfigError("block_size must be positive", field="block_size")
        if self.steps_per_year is not None and not self.steps_per_year > 0:
            raise ConfigError("steps_per_year must be positive", field="steps_per_year")

    def use_events(self, m: LevyModel):
        if self.event_driven is None:
            return m.supports_event_driven
        if self.event_driven and not m.supports_event_driven:
            raise UnsupportedSchemeError(f"event-driven simulation is not available for {m.family!r}")
        return bool(self.event_driven)

    def replace(self, **kw):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(kw)
        return OracleConfig(**d)


def _check_gap(y):
    y = float(y)
    if not (math.isfinite(y) and y >= 0):
        raise ParameterError(f"gap must be a nonnegative real, got {y!r}", field="gap")
    return y


# ----------------------------------------------------------------------------
# Finite-horizon likelihood
# ----------------------------------------------------------------------------


def penetration_samples(m: LevyModel, gap, horizons, cfg: OracleConfig, rng: RngStream):
    """Per-path depth ``((-gap) - M_h)^+`` below the current minimum.

    Returns an array of shape ``(n_samples, len(horizons))``; ``horizons``
    must be increasing and all columns share the same paths.
    """
    y = _check_gap(gap)
    events = cfg.use_events(m)

    def block(s, size):
        mins, _ = sample_minima(m, horizons, s.generator(), size, event_driven=events,
                                min_steps=cfg.min_steps, steps_per_year=cfg.steps_per_year)
        return np.maximum(-y - mins, 0.0)

    return map_blocks(block, cfg.n_samples, cfg.block_size, rng.paths(), cfg.workers)


def _likelihood(depth, h):
    # (1 - e^{-d}) / h, computed without cancellation for shallow penetrations
    return -np.expm1(-depth) / h


def estimate_lambda_h(m: LevyModel, gap, h, cfg: OracleConfig, rng: RngStream):
    """Monte Carlo estimate of ``lambda^h`` at the given gap.

    The estimate carries ``extra["active_fraction"]`` (share of paths that
    penetrated) and ``extra["dt"]`` (grid step, ``None`` for exact paths),
    both needed by :func:`grid_allowance`.
    """
    h = float(h)
    if not (math.isfinite(h) and h > 0):
        raise ParameterError("h must be positive", field="h")
    return estimate_lambda_schedule(m, gap, cfg.replace(h_schedule=(h,)), rng)[0]


def estimate_lambda_schedule(m: LevyModel, gap, cfg: OracleConfig, rng: RngStream):
    """``lambda^h`` for every ``h`` of ``cfg.h_schedule`` from one set of paths.

    Results are returned in schedule order (decreasing ``h``).
    """
    hs = np.asarray(cfg.h_schedule)[::-1]
    depth = penetration_samples(m, gap, hs, cfg, rng)
    events = cfg.use_events(m)
    out = []
    for k in range(hs.size - 1, -1, -1):
        h = float(hs[k])
        d = depth[:, k]
        dt = None if events else _grid_step(h, cfg)
        out.append(McEstimate.from_samples(
            _likelihood(d, h), rng.provenance(), h=h, gap=float(gap),
            active_fraction=float(np.count_nonzero(d) / d.size), dt=dt,
        ))
    return out


def _grid_step(h, cfg):
    """Bound on the grid step used on ``[0, h]`` by :func:`horizon_grid`."""
    dt = h / cfg.min_steps
    if cfg.steps_per_year:
        dt = min(dt, 1.0 / cfg.steps_per_year)
    return float(dt)


def lambda_target(ev: PiEvaluator, gap, exact_minimum=True):
    """Intensity the estimator should converge to.

    At gap 0 for ``c < 0`` the drift term is included only when the inner
    paths are exact: on a grid the creeping part of the minimum is seen only
    at grid points.
    """
    y = _check_gap(gap)
    if exact_minimum:
        return intensity_at(ev, GapState(y))
    return ev.big_pi(y)


def grid_allowance(m: LevyModel, est: McEstimate):
    """Upper bound on the grid bias of a ``lambda^h`` estimate.

    The grid minimum overshoots the true one by at most the upward motion
    inside one cell, ``max(c, 0) dt + dS'``. The likelihood integrand is
    1-Lipschitz in the depth and vanishes unless the path penetrates, so the
    bias is at most ``(max(c, 0) + E[S'_1]) dt / h`` times the penetration
    probability, here replaced by a 3-sigma upper bound on the observed
    active fraction. Zero for exact paths.
    """
    dt = est.extra.get("dt")
    if dt is None:
        return 0.0
    h = est.extra["h"]
    p = est.extra["active_fraction"]
    n = est.n_samples
    p_hi = min(1.0, p + 3.0 * math.sqrt(max(p * (1 - p), 1.0 / n) / n))
    return (max(m.c, 0.0) + m.pos.mean()) * dt / h * p_hi


# ----------------------------------------------------------------------------
# Compensator
# ----------------------------------------------------------------------------


def _integrate_pi(ev, lo, hi):
    """``int_lo^hi Pi(g) dg`` for arrays of gap intervals."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.size == 0:
        return np.zeros(0)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = ev.evaluate(np.maximum(nodes, 0.0))
    return half * (vals @ _GL_W)


def integrated_intensity(ev: PiEvaluator, p, until):
    """``int_0^until lambda_s ds`` along a path (ignoring default).

    Event paths are integrated exactly per drift segment: the gap is linear
    in time with slope ``c`` until it hits 0, after which (``c < 0``) it stays
    at 0 with intensity ``-c + Pi(0)``. Grid paths use the trapezoid rule on
    the grid intensity, which is all the information a grid path carries.
    """
    until = float(until)
    t = p.times
    if p.scheme != EVENT:
        k = int(np.searchsorted(t, until, side="right"))
        if k < 2:
            return 0.0
        lam = intensity_series(ev, p).lambdas
        return float(integrate.trapezoid(lam[:k], t[:k]))
    c = ev.model.c
    g0 = p.gaps[:-1]
    length = np.minimum(t[1:], until) - t[:-1]
    keep = length > 0
    g0, length = g0[keep], length[keep]
    if c > 0:
        return float(np.sum(_integrate_pi(ev, g0, g0 + c * length)) / c)
    if c == 0:
        return float(np.sum(length * ev.evaluate(g0)))
    a = -c
    l1 = np.minimum(length, g0 / a)
    l2 = length - l1
    part1 = _integrate_pi(ev, g0 - a * l1, g0) / a
    part2 = l2 * (a + ev.big_pi(0.0))
    return float(np.sum(part1) + np.sum(part2))


def martingale_residual(m: LevyModel, T, cfg: OracleConfig, rng: RngStream, ev=None):
    """Estimate ``E[N_T] - E[int_0^{T ^ tau} lambda ds]`` over path/barrier pairs.

    Path ``i`` and barrier ``i`` come from disjoint stream domains. The mean
    is taken over per-pair differences, so the standard error accounts for
    the positive correlation of the two terms. ``extra`` holds the two terms
    separately.
    """
    if not (isinstance(T, (int, float)) and math.isfinite(T) and T > 0):
        raise ParameterError("T must be a positive real", field="T")
    ev = ev if ev is not None else PiEvaluator(m)
    events = cfg.use_events(m)
    spy = None if events else (cfg.steps_per_year or 256.0)

    def block(s, size):
        gp = s.paths().generator()
        ds = sample_barriers(s.barriers().generator(), size)
        out = np.empty((size, 2))
        for i in range(size):
            p = simulate_path_from(m, float(T), gp, steps_per_year=spy, event_driven=events)
            tau = default_time(p, float(ds[i]))
            out[i, 0] = 0.0 if tau is None else 1.0
            out[i, 1] = integrated_intensity(ev, p, T if tau is None else tau)
        return out

    pairs = map_blocks(block, cfg.n_samples, cfg.block_size, rng, cfg.workers)
    n_hat = McEstimate.from_samples(pairs[:, 0])
    a_hat = McEstimate.from_samples(pairs[:, 1])
    return McEstimate.from_samples(
        pairs[:, 0] - pairs[:, 1], rng.provenance(),
        defaults=n_hat.mean, defaults_se=n_hat.std_error,
        compensator=a_hat.mean, compensator_se=a_hat.std_error,
        scheme="event" if events else "grid",
    )


# ----------------------------------------------------------------------------
# Ballot identities (spectrally negative, c > 0)
# ----------------------------------------------------------------------------


def _require_ballot_model(m):
    if not (m.spectrally_negative and m.c > 0):
        raise UnsupportedSchemeError("ballot identities need X_t = ct - S_t with c > 0")


def _minima_and_terminal(m, ts, cfg, rng):
    events = cfg.use_events(m)

    def block(s, size):
        mins, term = sample_minima(m, ts, s.generator(), size, event_driven=events,
                                   min_steps=cfg.min_steps, steps_per_year=cfg.steps_per_year)
        return np.stack([mins, term], axis=-1)

    out = map_blocks(block, cfg.n_samples, cfg.block_size, rng.paths(), cfg.workers)
    return out[..., 0], out[..., 1]


@dataclass(frozen=True)
class BallotBin:
    lo: float
    hi: float
    survival_side: McEstimate
    weighted_side: McEstimate
    z: float


def ballot_check(m: LevyModel, t, bins, cfg: OracleConfig, rng: RngStream):
    """Both sides of the ballot identity on ``bins`` equal bins of ``[0, ct]``.

    Side one is ``E[1{T_1 > t} 1{X_t in B}]`` with ``T_1`` the first passage
    below 0; side two is ``E[(X_t / ct) 1{0 <= X_t <= ct} 1{X_t in B}]``. The
    top bin is closed so the no-jump atom at ``ct`` is counted.

    ``z`` is the per-path difference ``d`` scaled by its variance under the
    identity: given ``X_t = x`` survival is Bernoulli(``w = x / ct``), so
    ``Var(d) = E[1{X_t in B} w (1 - w)]``. The sample variance of ``d`` is
    not usable in the edge bins, where ``d`` is heavily skewed and its
    sample variance collapses whenever the rare opposite-sign paths are
    missing from the sample.
    """
    _require_ballot_model(m)
    t = float(t)
    if not (math.isfinite(t) and t > 0):
        raise ParameterError("t must be positive", field="t")
    if int(bins) < 1:
        raise ParameterError("bins must be positive", field="bins")
    mins, term = _minima_and_terminal(m, [t], cfg, rng)
    mins, x = mins[:, 0], term[:, 0]
    ct = m.c * t
    edges = np.linspace(0.0, ct, int(bins) + 1)
    which = np.searchsorted(edges, x, side="right") - 1
    which[x == ct] = int(bins) - 1
    inside = (x >= 0) & (x <= ct)
    which[~inside] = -1
    alive = mins >= 0.0
    weight = np.where(inside, x / ct, 0.0)
    out = []
    for b in range(int(bins)):
        inb = which == b
        lhs = (alive & inb).astype(float)
        rhs = np.where(inb, weight, 0.0)
        diff = float(np.mean(lhs - rhs))
        se = math.sqrt(float(np.mean(np.where(inb, weight * (1.0 - weight), 0.0))) / x.size)
        z = diff / se if se > 0 else (0.0 if diff == 0 else math.copysign(math.inf, diff))
        out.append(BallotBin(float(edges[b]), float(edges[b + 1]),
                             McEstimate.from_samples(lhs, rng.provenance()),
                             McEstimate.from_samples(rhs, rng.provenance()), z))
    return out


def first_passage_survival(m: LevyModel, ts, cfg: OracleConfig, rng: RngStream):
    """``P(T_1 > t)`` two ways, from one path set across all ``ts``.

    Returns ``(direct, ballot)`` lists aligned with ``ts``: the direct
    frequency of ``inf_{s <= t} X_s >= 0`` and the ballot-weighted mean of
    ``(X_t / ct) 1{0 <= X_t <= ct}``.
    """
    _require_ballot_model(m)
    ts = np.asarray(ts, dtype=float)
    order = np.argsort(ts)
    mins, term = _minima_and_terminal(m, ts[order], cfg, rng)
    direct = [None] * ts.size
    ballot = [None] * ts.size
    for col, k in enumerate(order):
        ct = m.c * ts[k]
        x = term[:, col]
        w = np.where((x >= 0) & (x <= ct), x / ct, 0.0)
        direct[k] = McEstimate.from_samples((mins[:, col] >= 0).astype(float), rng.provenance(),
                                            t=float(ts[k]))
        ballot[k] = McEstimate.from_samples(w, rng.provenance(), t=float(ts[k]))
    return direct, ballot


# ----------------------------------------------------------------------------
# Uniform bound
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    bound: float
    estimates: list
    violations: list

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok


def uniform_bound_check(m: LevyModel, gaps, cfg: OracleConfig, rng: RngStream, k=None):
    """Check ``lambda^h <= -min(c, 0) + Pi(0)`` over gaps and the h schedule.

    An estimate violates the bound when ``mean - k * SE`` exceeds it.
    Each gap uses its own child stream of ``rng``.
    """
    k = cfg.confidence if k is None else float(k)
    bound = m.intensity_bound()
    ests, bad = [], []
    for i, y in enumerate(gaps):
        for e in estimate_lambda_schedule(m, y, cfg, rng.child(i)):
            ests.append(e)
            if e.mean - k * e.std_error > bound:
                bad.append(e)
    return BoundReport(bound, ests, bad)
