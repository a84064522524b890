"""Structural credit model with a finite-variation Lévy asset process.

The default intensity is an explicit function of the distance between the
log-asset value and its running minimum. This package evaluates it, builds
credit-spread curves, and checks both against brute-force simulation.
"""
from .errors import (
    ConfigError,
    DataIntegrityError,
    LevyCreditError,
    NumericalFailure,
    ParameterError,
    QuadratureError,
    UnsupportedSchemeError,
)
from .intensity import GapState, IntensitySeries, PiEvaluator, big_pi, intensity_at, intensity_series
from .levy_core import (
    CompoundPoissonExp,
    DcpParams,
    DGammaParams,
    GammaSubordinator,
    LevyModel,
    VgParams,
    ZeroSubordinator,
    laplace_exponent_neg,
    neg_levy_density,
    vg_decompose,
)
from .mc_oracle import (
    McEstimate,
    OracleConfig,
    ballot_check,
    estimate_lambda_h,
    martingale_residual,
    uniform_bound_check,
)
from .path_sim import Barrier, Path, default_time, sample_barrier, simulate_path
from .spread import SpreadCurve, conditional_survival, spread_term_structure
from .streams import RngStream

__version__ = "0.1.0"
