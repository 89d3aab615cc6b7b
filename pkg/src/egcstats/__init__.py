"""First- and second-order statistics of the EGC output SIR under Rayleigh cochannel interference."""

from .analytic import (
    AfdUndefinedError,
    BeaulieuParams,
    DerivativeVariances,
    DerivedParams,
    Estimate,
    Method,
    MethodDomainError,
    Scenario,
    SeriesConvergenceWarning,
    StatPoint,
    SystemConfig,
    average_fade_duration,
    derivative_variances,
    derived_params,
    level_crossing_rate,
    nsirth_db_from_z,
    outage_probability,
    stat_point,
    z_from_nsirth_db,
)
from .quadrature import QuadratureBudgetError, QuadratureResult, QuadratureSpec

__version__ = "0.1.0"

__all__ = [
    "AfdUndefinedError",
    "BeaulieuParams",
    "DerivativeVariances",
    "DerivedParams",
    "Estimate",
    "Method",
    "MethodDomainError",
    "QuadratureBudgetError",
    "QuadratureResult",
    "QuadratureSpec",
    "Scenario",
    "SeriesConvergenceWarning",
    "StatPoint",
    "SystemConfig",
    "average_fade_duration",
    "derivative_variances",
    "derived_params",
    "level_crossing_rate",
    "nsirth_db_from_z",
    "outage_probability",
    "stat_point",
    "z_from_nsirth_db",
]
