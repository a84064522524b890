"""Credit-spread term structure at a fixed pre-default state.

Given the current gap ``y``, survival to ``t + h`` is
``E[exp(-((-y) - M_h)^+)]`` over fresh paths of length ``h`` and the spread
is ``S(h) = -ln(survival) / h``. As ``h -> 0`` the spread tends to the
intensity, which is used as the ``h = 0`` anchor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NumericalFailure, ParameterError
from .intensity import GapState, PiEvaluator, intensity_at
from .levy_core import LevyModel
from .mc_oracle import McEstimate, OracleConfig, penetration_samples
from .path_sim import check_horizons
from .streams import RngStream

__all__ = ["SpreadCurve", "conditional_survival", "spread_term_structure", "default_horizons"]


def default_horizons(h_max=4.5, n=40, h_min=0.01):
    """Log-spaced horizons on ``[h_min, h_max]``."""
    return np.geomspace(h_min, h_max, n)


@dataclass(frozen=True, eq=False)
class SpreadCurve:
    """Spreads ``S(h)`` at one gap, with delta-method standard errors.

    ``anchor`` is the intensity at the gap, i.e. the ``h = 0`` value.
    """

    gap: float
    horizons: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    anchor: float
    survival: np.ndarray
    n_samples: int
    provenance: Optional[dict] = None

    def rows(self):
        """``(h, spread, std_error)`` rows, anchor first."""
        yield 0.0, self.anchor, 0.0
        for h, s, e in zip(self.horizons, self.values, self.std_errors):
            yield float(h), float(s), float(e)


def conditional_survival(m: LevyModel, gap, h, cfg: OracleConfig, rng: RngStream):
    """Monte Carlo survival probability over ``(t, t + h]`` given the gap."""
    h = float(h)
    if not (math.isfinite(h) and h > 0):
        raise ParameterError("h must be positive", field="h")
    depth = penetration_samples(m, gap, [h], cfg, rng)[:, 0]
    return McEstimate.from_samples(np.exp(-depth), rng.provenance(), h=h, gap=float(gap))


def spread_term_structure(m: LevyModel, gap, horizons, cfg: OracleConfig, rng: RngStream,
                          ev: Optional[PiEvaluator] = None):
    """Spread curve on increasing ``horizons`` from one shared path set.

    Raises
    ------
    NumericalFailure
        If a survival estimate is not strictly positive.
    """
    hs = check_horizons(horizons)
    ev = ev if ev is not None else PiEvaluator(m)
    anchor = intensity_at(ev, GapState(float(gap)))
    depth = penetration_samples(m, gap, hs, cfg, rng)
    surv = np.exp(-depth)
    mean = np.mean(surv, axis=0)
    se = np.std(surv, axis=0, ddof=1) / math.sqrt(surv.shape[0])
    if np.any(~(mean > 0)):
        k = int(np.flatnonzero(~(mean > 0))[0])
        raise NumericalFailure(f"survival estimate {mean[k]!r} at h = {hs[k]!r} has no logarithm")
    values = -np.log(mean) / hs + 0.0  # +0.0 maps -0.0 to 0.0
    errors = se / (mean * hs)
    return SpreadCurve(float(gap), hs, values, errors, float(anchor), mean, surv.shape[0],
                       rng.provenance())
