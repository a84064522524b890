"""Finite-variation Lévy models used as log-asset processes.

Every model is reduced at construction to its canonical form

    X_t = c t - S_t + S'_t,

where ``S`` (negative jumps) and ``S'`` (positive jumps) are independent
pure-jump subordinators. Three families are exposed:

* drifted compound Poisson with exponential jumps (``"dcp"``),
* drifted gamma, ``X_t = c t - G_t`` (``"dgamma"``),
* variance gamma with an extra drift (``"vg"``), written as the difference
  of two gamma subordinators.

Gamma subordinators are parameterized by mean rate ``mu`` and variance rate
``nu`` per unit time, so the Lévy density is
``(mu**2 / nu) * exp(-(mu / nu) * x) / x``.
"""
from __future__ import annotations

import math
from dataclasses import MISSING, dataclass, field
from typing import Union

import numpy as np
from scipy import special

from .errors import ParameterError

__all__ = [
    "CompoundPoissonExp",
    "GammaSubordinator",
    "ZeroSubordinator",
    "Subordinator",
    "DcpParams",
    "DGammaParams",
    "VgParams",
    "LevyModel",
    "vg_decompose",
    "neg_levy_density",
    "laplace_exponent_neg",
    "FAMILIES",
]


def _require_positive(value, name):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value)):
        raise ParameterError(f"{name} must be a finite real number, got {value!r}", field=name)
    if value <= 0:
        raise ParameterError(f"{name} must be positive, got {value!r}", field=name)
    return float(value)


def _require_finite(value, name):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value)):
        raise ParameterError(f"{name} must be a finite real number, got {value!r}", field=name)
    return float(value)


# ----------------------------------------------------------------------------
# Subordinators
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class CompoundPoissonExp:
    """Compound Poisson subordinator with Exp(beta) jump sizes.

    Lévy density ``rate * beta * exp(-beta * x)`` on ``x > 0``.
    """

    rate: float
    beta: float
    kind: str = field(default="cpexp", init=False)

    def __post_init__(self):
        object.__setattr__(self, "rate", _require_positive(self.rate, "rate"))
        object.__setattr__(self, "beta", _require_positive(self.beta, "beta"))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return self.rate * self.beta * np.exp(-self.beta * x)

    def tail_rate(self):
        return self.beta

    def laplace_exponent(self):
        return self.rate / (1.0 + self.beta)

    def mean(self):
        return self.rate / self.beta

    def pi_closed_form(self, x):
        x = np.asarray(x, dtype=float)
        return self.rate / (1.0 + self.beta) * np.exp(-self.beta * x)

    def tail_mass(self, x):
        """Lévy measure of ``(x, inf)``."""
        return self.rate * math.exp(-self.beta * x)

    def sample_increments(self, gen, dt):
        counts = gen.poisson(self.rate * np.asarray(dt))
        # Sum of k iid Exp(beta) is Gamma(k, 1/beta); numpy returns 0 for k = 0.
        return gen.gamma(counts, 1.0 / self.beta)


@dataclass(frozen=True)
class GammaSubordinator:
    """Gamma subordinator with mean rate ``mu`` and variance rate ``nu``."""

    mu: float
    nu: float
    kind: str = field(default="gamma", init=False)

    def __post_init__(self):
        object.__setattr__(self, "mu", _require_positive(self.mu, "mu"))
        object.__setattr__(self, "nu", _require_positive(self.nu, "nu"))

    @property
    def shape_rate(self):
        """Gamma shape per unit time, ``mu**2 / nu``."""
        return self.mu * self.mu / self.nu

    @property
    def rate(self):
        """Gamma rate (inverse scale), ``mu / nu``."""
        return self.mu / self.nu

    def density(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return self.shape_rate * np.exp(-self.rate * x) / x

    def tail_rate(self):
        return self.rate

    def laplace_exponent(self):
        return self.shape_rate * math.log1p(self.nu / self.mu)

    def mean(self):
        return self.mu

    def pi_closed_form(self, x):
        """Exponential-integral form ``a [E1(b x) - e^x E1((b+1) x)]``."""
        x = np.asarray(x, dtype=float)
        a, b = self.shape_rate, self.rate
        out = np.empty_like(x)
        zero = x == 0.0
        out[zero] = self.laplace_exponent()
        xp = x[~zero]
        with np.errstate(over="ignore", invalid="ignore"):
            vals = a * (special.exp1(b * xp) - np.exp(xp) * special.exp1((b + 1.0) * xp))
        out[~zero] = np.where(np.isfinite(vals), np.maximum(vals, 0.0), 0.0)
        return out

    def tail_mass(self, x):
        if x <= 0:
            return math.inf
        return self.shape_rate * float(special.exp1(self.rate * x))

    def sample_increments(self, gen, dt):
        return gen.gamma(self.shape_rate * np.asarray(dt), 1.0 / self.rate)


@dataclass(frozen=True)
class ZeroSubordinator:
    """The identically-zero subordinator (empty Lévy measure)."""

    kind: str = field(default="zero", init=False)

    def density(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def tail_rate(self):
        return math.inf

    def laplace_exponent(self):
        return 0.0

    def mean(self):
        return 0.0

    def pi_closed_form(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def tail_mass(self, x):
        return 0.0

    def sample_increments(self, gen, dt):
        return np.zeros(np.shape(dt))


Subordinator = Union[CompoundPoissonExp, GammaSubordinator, ZeroSubordinator]


# ----------------------------------------------------------------------------
# Family parameters
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class DcpParams:
    """Drifted compound Poisson: ``ct - sum Y_i + sum Y'_i``.

    A zero rate switches the corresponding jump component off.
    """

    c: float
    rho: float
    beta: float
    rho_pos: float = 0.0
    beta_pos: float = 1.0

    def __post_init__(self):
        _require_finite(self.c, "c")
        for name in ("rho", "rho_pos"):
            v = _require_finite(getattr(self, name), name)
            if v < 0:
                raise ParameterError(f"{name} must be nonnegative, got {v!r}", field=name)
        _require_positive(self.beta, "beta")
        _require_positive(self.beta_pos, "beta_pos")


@dataclass(frozen=True)
class DGammaParams:
    """Drifted gamma: ``ct - G_t`` with ``G`` of mean rate mu, variance rate nu."""

    c: float
    mu: float
    nu: float

    def __post_init__(self):
        _require_finite(self.c, "c")
        _require_positive(self.mu, "mu")
        _require_positive(self.nu, "nu")


@dataclass(frozen=True)
class VgParams:
    """Variance gamma VG(c, nu, sigma, theta).

    Brownian motion ``theta t + sigma W_t`` run on a gamma clock of unit mean
    rate and variance rate ``nu``, plus a drift ``c t``.
    """

    c: float
    nu: float
    sigma: float
    theta: float

    def __post_init__(self):
        _require_finite(self.c, "c")
        _require_finite(self.theta, "theta")
        _require_positive(self.nu, "nu")
        _require_positive(self.sigma, "sigma")


def vg_decompose(p: VgParams):
    """Split a VG process into drift plus two independent gamma subordinators.

    Returns ``(c, pos, neg)`` where ``pos`` carries ``(mu_+, nu_+)`` and ``neg``
    carries ``(mu_-, nu_-)``, with ``mu_pm = sqrt(theta**2 + 2 sigma**2/nu)/2
    +- theta/2`` and ``nu_pm = mu_pm**2 * nu``.
    """
    if not isinstance(p, VgParams):
        p = VgParams(*p)
    root = math.sqrt(p.theta * p.theta + 2.0 * p.sigma * p.sigma / p.nu)
    product = p.sigma * p.sigma / (2.0 * p.nu)
    # The smaller root loses digits to cancellation; recover it from the product.
    if p.theta >= 0:
        mu_pos = 0.5 * root + 0.5 * p.theta
        mu_neg = product / mu_pos
    else:
        mu_neg = 0.5 * root - 0.5 * p.theta
        mu_pos = product / mu_neg
    pos = GammaSubordinator(mu_pos, mu_pos * mu_pos * p.nu)
    neg = GammaSubordinator(mu_neg, mu_neg * mu_neg * p.nu)
    return p.c, pos, neg


# ----------------------------------------------------------------------------
# Model
# ----------------------------------------------------------------------------

FAMILIES = {"dcp": DcpParams, "dgamma": DGammaParams, "vg": VgParams}


@dataclass(frozen=True)
class LevyModel:
    """A finite-variation Lévy model together with its canonical form.

    Use the ``dcp``, ``dgamma`` and ``vg`` constructors, or :meth:`from_dict`
    for the JSON layout ``{"family": ..., "params": {...}}``.
    """

    family: str
    params: Union[DcpParams, DGammaParams, VgParams]
    c: float = field(init=False)
    neg: Subordinator = field(init=False)
    pos: Subordinator = field(init=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(
                f"unknown family {self.family!r}; expected one of {sorted(FAMILIES)}",
                field="family",
            )
        if not isinstance(self.params, FAMILIES[self.family]):
            raise ParameterError(
                f"family {self.family!r} needs {FAMILIES[self.family].__name__}", field="params"
            )
        p = self.params
        if self.family == "dcp":
            c = float(p.c)
            neg = CompoundPoissonExp(p.rho, p.beta) if p.rho > 0 else ZeroSubordinator()
            pos = CompoundPoissonExp(p.rho_pos, p.beta_pos) if p.rho_pos > 0 else ZeroSubordinator()
        elif self.family == "dgamma":
            c = float(p.c)
            neg = GammaSubordinator(p.mu, p.nu)
            pos = ZeroSubordinator()
        else:
            c, pos, neg = vg_decompose(p)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "neg", neg)
        object.__setattr__(self, "pos", pos)

    @classmethod
    def dcp(cls, c, rho, beta, rho_pos=0.0, beta_pos=1.0):
        return cls("dcp", DcpParams(c, rho, beta, rho_pos, beta_pos))

    @classmethod
    def dgamma(cls, c, mu, nu):
        return cls("dgamma", DGammaParams(c, mu, nu))

    @classmethod
    def vg(cls, c, nu, sigma, theta):
        return cls("vg", VgParams(c, nu, sigma, theta))

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ParameterError("model must be a JSON object", field="model")
        family = doc.get("family")
        if family not in FAMILIES:
            raise ParameterError(
                f"unknown family {family!r}; expected one of {sorted(FAMILIES)}", field="family"
            )
        raw = doc.get("params")
        if not isinstance(raw, dict):
            raise ParameterError("'params' must be a JSON object", field="params")
        ptype = FAMILIES[family]
        names = list(ptype.__dataclass_fields__)
        unknown = sorted(set(raw) - set(names))
        if unknown:
            raise ParameterError(f"unknown parameter(s) for {family}: {unknown}", field=unknown[0])
        kwargs = {}
        for name in names:
            if name not in raw:
                if ptype.__dataclass_fields__[name].default is MISSING:
                    raise ParameterError(f"missing parameter {name!r} for {family}", field=name)
                continue
            value = raw[name]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ParameterError(f"parameter {name!r} must be a number, got {value!r}", field=name)
            kwargs[name] = value
        return cls(family, ptype(**kwargs))

    def to_dict(self):
        return {"family": self.family, "params": dict(vars(self.params))}

    @property
    def spectrally_negative(self):
        return isinstance(self.pos, ZeroSubordinator)

    @property
    def supports_event_driven(self):
        return all(isinstance(s, (CompoundPoissonExp, ZeroSubordinator)) for s in (self.neg, self.pos))

    def mean_rate(self):
        """``E[X_1] = c - E[S_1] + E[S'_1]``."""
        return self.c - self.neg.mean() + self.pos.mean()

    def intensity_bound(self):
        """Uniform bound ``-(c ^ 0) + Pi(0)`` on the finite-h likelihood."""
        return -min(self.c, 0.0) + self.neg.laplace_exponent()


def neg_levy_density(m: LevyModel, x):
    """Lévy density of the negative-jump subordinator at ``x > 0``."""
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise ParameterError(f"Lévy density is defined for x > 0, got {x!r}", field="x")
    out = m.neg.density(xa)
    return float(out) if np.ndim(out) == 0 else out


def laplace_exponent_neg(m: LevyModel):
    """``Pi(0) = -ln E[exp(-S_1)]`` in closed form."""
    return m.neg.laplace_exponent()
