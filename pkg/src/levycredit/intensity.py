"""Default intensity as a function of the distance to the running minimum.

For a finite-variation model with negative-jump Lévy density ``nu`` the
intensity before default is

    lambda_t = -c 1{gap = 0} 1{c < 0} + Pi(gap),
    Pi(x)    = int_0^inf (1 - e^{-u}) nu(x + u) du,

where ``gap = X_t - inf_{s <= t} X_s``. ``Pi`` is nonincreasing with
``Pi(0)`` equal to the Laplace exponent of the negative-jump subordinator at 1.
"""
from __future__ import annotations

import math
import threading
import warnings
from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import ParameterError, QuadratureError
from .levy_core import CompoundPoissonExp, GammaSubordinator, LevyModel, ZeroSubordinator
from .path_sim import EVENT, Path

__all__ = [
    "GapState",
    "PiEvaluator",
    "IntensitySeries",
    "big_pi",
    "intensity_at",
    "intensity_series",
    "grid_gap_tolerance",
]


@dataclass(frozen=True)
class GapState:
    gap: float
    predefault: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.gap) and self.gap >= 0):
            raise ParameterError(f"gap must be a nonnegative real, got {self.gap!r}", field="gap")


def _memo_key(x):
    return float(f"{x:.12g}")


def _x_density(sub, u):
    """``u * nu(u)``; finite at ``u = 0`` for all supported families."""
    if isinstance(sub, GammaSubordinator):
        return sub.shape_rate * math.exp(-sub.rate * u)
    return u * float(sub.density(u)) if u > 0 else 0.0


class PiEvaluator:
    """Evaluates ``Pi(x)`` for one model.

    Parameters
    ----------
    model : LevyModel
    atol, rtol : float
        Quadrature tolerances. A result whose error estimate exceeds
        ``max(atol, rtol * |value|)`` raises :class:`QuadratureError`.
    method : {"auto", "quadrature", "closed"}
        ``auto`` uses the compound Poisson closed form and adaptive quadrature
        for gamma-type jumps. ``quadrature`` integrates every family.
        ``closed`` also uses the exponential-integral form for gamma jumps.
    memo_size : int
        Bound on cached scalar evaluations (keyed on 12 significant digits).
    scale : float
        Multiplies every returned value. Only meant for mutation testing of
        the validation suite.
    """

    def __init__(self, model: LevyModel, atol=1e-10, rtol=1e-8, method="auto", memo_size=1 << 16,
                 scale=1.0):
        if method not in ("auto", "quadrature", "closed"):
            raise ParameterError(f"unknown method {method!r}", field="method")
        if not (atol > 0 and rtol > 0):
            raise ParameterError("tolerances must be positive", field="atol")
        self.model = model
        self.atol = float(atol)
        self.rtol = float(rtol)
        self.method = method
        self.memo_size = int(memo_size)
        self.scale = float(scale)
        self._memo = OrderedDict()
        self._lock = threading.Lock()

    def __repr__(self):
        return f"PiEvaluator({self.model.family}, method={self.method!r})"

    @property
    def pi0(self):
        return self.big_pi(0.0)

    # -- quadrature -----------------------------------------------------------

    def truncation(self, x):
        """Upper integration limit ``U`` for ``Pi(x)``.

        The neglected tail is at most ``nu((x + U, inf))``. Since ``1 - e^{-u}
        >= 1 - e^{-1}`` for ``u >= 1``, ``Pi(x) >= 0.63 nu((x + 1, inf))``; ``U``
        keeps the tail below ``atol / 10`` and below ``1e-3 * rtol`` times
        that lower bound.
        """
        sub = self.model.neg
        target = self.atol / 10.0
        lower = -math.expm1(-1.0) * sub.tail_mass(x + 1.0)
        if lower > 0:
            target = min(target, 1e-3 * self.rtol * lower)
        u = 1.0 / sub.tail_rate()
        while sub.tail_mass(x + u) > target and u < 1e6:
            u *= 1.5
        return u

    def quadrature(self, x):
        """Adaptive quadrature of ``Pi(x)``; returns ``(value, error_estimate)``."""
        x = float(x)
        if not (math.isfinite(x) and x >= 0):
            raise ParameterError(f"Pi is defined for x >= 0, got {x!r}", field="x")
        sub = self.model.neg
        if isinstance(sub, ZeroSubordinator):
            return 0.0, 0.0
        upper = self.truncation(x)

        # (1 - e^{-u}) / (x + u) is bounded and, at x = 0, tends to 1 as u -> 0,
        # which cancels the 1/u singularity of gamma densities; (x + u) nu(x + u)
        # is bounded for every family
        def f(u):
            s = x + u
            if s == 0.0:
                return _x_density(sub, 0.0)
            return -math.expm1(-u) / s * _x_density(sub, s)

        # the integrand bends on the length scale x; log-spaced breakpoints
        # keep the adaptive rule from missing that when x is tiny
        points = []
        b = x
        while 0 < b < 0.1 * upper and len(points) < 40:
            points.append(b)
            b *= 10.0
        points = points or None
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(f, 0.0, upper, epsabs=0.0, epsrel=max(self.rtol * 1e-2, 1e-13),
                                      limit=400, points=points)
        if not err <= max(self.atol, self.rtol * abs(val)):
            raise QuadratureError(f"Pi({x!r}) did not converge", err)
        # 0 <= Pi(x) <= Pi(0), the latter known in closed form
        return min(max(val, 0.0), sub.laplace_exponent()), err

    def _uses_closed_form(self):
        sub = self.model.neg
        if self.method == "closed" or isinstance(sub, ZeroSubordinator):
            return True
        return self.method == "auto" and isinstance(sub, CompoundPoissonExp)

    # -- public evaluation ----------------------------------------------------

    def big_pi(self, x):
        """``Pi(x)`` for a scalar ``x >= 0``.

        Quadrature results are memoized on ``x`` rounded to 12 significant
        digits and are computed at the rounded point, so a value never
        depends on cache state.
        """
        x = float(x)
        if not (math.isfinite(x) and x >= 0):
            raise ParameterError(f"Pi is defined for x >= 0, got {x!r}", field="x")
        if self._uses_closed_form():
            return self.scale * float(self.model.neg.pi_closed_form(x))
        key = _memo_key(x)
        with self._lock:
            hit = self._memo.get(key)
        if hit is None:
            hit = self.quadrature(key)[0]
            with self._lock:
                self._memo[key] = hit
                if len(self._memo) > self.memo_size:
                    self._memo.popitem(last=False)
        return self.scale * hit

    __call__ = big_pi

    def evaluate(self, xs):
        """Vectorized ``Pi`` over an array of gaps; agrees exactly with ``big_pi``."""
        xs = np.asarray(xs, dtype=float)
        if np.any(~np.isfinite(xs)) or np.any(xs < 0):
            raise ParameterError("Pi is defined for x >= 0", field="x")
        if self._uses_closed_form():
            return self.scale * self.model.neg.pi_closed_form(xs)
        uniq, inv = np.unique(xs.ravel(), return_inverse=True)
        vals = np.array([self.big_pi(u) for u in uniq])
        return vals[inv].reshape(xs.shape)

    def intensity(self, gap, predefault=True, gap_tol=0.0):
        return intensity_at(self, GapState(gap, predefault), gap_tol)


def big_pi(ev: PiEvaluator, x):
    return ev.big_pi(x)


def intensity_at(ev: PiEvaluator, s: GapState, gap_tol=0.0):
    """Intensity before default at the given gap; zero after default."""
    if not s.predefault:
        return 0.0
    c = ev.model.c
    drift = -c if (c < 0 and s.gap <= gap_tol) else 0.0
    return drift + ev.big_pi(s.gap)


def grid_gap_tolerance(path: Path):
    """Gap-zero tolerance: exact for event paths, a few ulps for grid paths."""
    if path.scheme == EVENT:
        return 0.0
    scale = max(1.0, float(np.max(np.abs(path.values))))
    return 4.0 * np.finfo(float).eps * scale


@dataclass(frozen=True, eq=False)
class IntensitySeries:
    times: np.ndarray
    gaps: np.ndarray
    lambdas: np.ndarray
    pi_values: np.ndarray
    default_time: Optional[float] = None


def intensity_series(ev: PiEvaluator, p: Path, default_time=None):
    """Intensity at every stored point of ``p``.

    Points at or after ``default_time`` get intensity 0 (the indicator
    ``1{tau > t}`` is off from the default time on).
    """
    p.validate()
    gaps = p.gaps
    pis = ev.evaluate(gaps)
    c = ev.model.c
    tol = grid_gap_tolerance(p)
    lam = pis.copy()
    if c < 0:
        lam[gaps <= tol] += -c
    if default_time is not None:
        lam[p.times >= default_time] = 0.0
    return IntensitySeries(p.times, gaps, lam, pis, default_time)
