"""Outage probability, level crossing rate and fade duration of the EGC output SIR.

Every statistic is evaluated on the scale-normalized axis: with
``X' = X/sqrt(Omega_S)`` (sum of M unit-power Rayleigh envelopes) and ``Y'``
the unit-scale Nakagami-like envelope of shape ``alpha``, the SIR event
``X^2/Y^2 < z`` becomes ``X' < h Y'`` with ``h = sqrt(z/beta)``. Results then
depend on ``(M, alpha, z/beta)`` only, plus a Doppler prefactor for the LCR.

Four methods are available:

* ``DENSITY``: ``int F_X'(h y) f_Y'(y) dy`` (M <= 2, where ``F_X'`` is closed form).
* ``QUADRATURE``: Gil-Pelaez / Parseval inversion of the CF product on [0, inf).
* ``SERIES``: odd-harmonic sampling of the same CF product (period ``T``, ``L`` terms).
* ``CLOSED``: exact expressions for M = 1 and M = 2.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .charfun import BranchCF, PoweredCF
from .quadrature import (
    QuadratureSpec,
    adaptive_finite,
    adaptive_semi_infinite,
)
from .specfun import erf_array, gamma_ratio, incomplete_beta

__all__ = [
    "Scenario",
    "Method",
    "MethodDomainError",
    "AfdUndefinedError",
    "SeriesConvergenceWarning",
    "SystemConfig",
    "DerivedParams",
    "DerivativeVariances",
    "BeaulieuParams",
    "Estimate",
    "StatPoint",
    "derived_params",
    "derivative_variances",
    "z_from_nsirth_db",
    "nsirth_db_from_z",
    "lcr_prefactor",
    "outage_probability",
    "level_crossing_rate",
    "average_fade_duration",
    "stat_point",
    "desired_envelope_cdf_m2",
    "desired_envelope_pdf_m2",
    "op_closed_m1",
    "op_closed_m2",
    "lcr_closed_m1",
    "lcr_closed_m2_equal_doppler",
    "lcr_closed_m2_general",
]

_SQRT_PI = math.sqrt(math.pi)
_OMEGA_LIMIT = 1e-6
_SERIES_SPREAD_TOL = 1e-8
# |f_Y'| below exp(-745) is zero in double precision; 40 sd of Y'^2 is far past that.
_Y_SPAN_SD = 40.0


class Scenario(enum.Enum):
    INCOHERENT = "incoherent"
    COHERENT = "coherent"


class Method(enum.Enum):
    DENSITY = "density"
    QUADRATURE = "quadrature"
    SERIES = "series"
    CLOSED = "closed"


class MethodDomainError(ValueError):
    """The requested method does not support this configuration."""


class AfdUndefinedError(ArithmeticError):
    """The LCR vanished (or underflowed), so the fade duration is unbounded or undefined."""


class SeriesConvergenceWarning(RuntimeWarning):
    """Partial sums of the harmonic series were still moving at the last terms."""


@dataclass(frozen=True)
class SystemConfig:
    """M-branch EGC receiver with N Rayleigh cochannel interferers."""

    m_branches: int
    n_interferers: int
    omega_s: float = 1.0
    omega_i: float = 1.0
    f_m0: float = 1.0
    f_mi: float = 1.0
    scenario: Scenario = Scenario.INCOHERENT

    def __post_init__(self):
        if isinstance(self.scenario, str):
            object.__setattr__(self, "scenario", Scenario(self.scenario.lower()))
        for name in ("m_branches", "n_interferers"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")
            object.__setattr__(self, name, int(v))
        for name in ("omega_s", "omega_i"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        for name in ("f_m0", "f_mi"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be nonnegative and finite, got {v!r}")
        if not math.isfinite(self.gamma) or self.gamma <= 0:
            raise ValueError("omega_s/omega_i must be positive and finite")

    @classmethod
    def from_gamma(cls, m: int, n: int, gamma: float, scenario=Scenario.INCOHERENT,
                   f_m0: float = 1.0, f_mi: float = 1.0) -> "SystemConfig":
        """Config with ``Omega_I = 1`` and ``Omega_S = gamma``."""
        return cls(m, n, float(gamma), 1.0, f_m0, f_mi, scenario)

    @property
    def gamma(self) -> float:
        return self.omega_s / self.omega_i

    @property
    def equal_doppler(self) -> bool:
        return self.f_m0 == self.f_mi


@dataclass(frozen=True)
class DerivedParams:
    alpha: float
    beta: float
    gamma: float


@dataclass(frozen=True)
class DerivativeVariances:
    sigma2_xdot: float
    sigma2_ydot: float


@dataclass(frozen=True)
class BeaulieuParams:
    """Sampling period ``T`` and number of odd harmonics ``L`` of the series method."""

    t_period: float = 80.0
    l_terms: int = 200

    def __post_init__(self):
        if not (math.isfinite(self.t_period) and self.t_period > 0):
            raise ValueError(f"t_period must be positive, got {self.t_period!r}")
        if int(self.l_terms) != self.l_terms or self.l_terms < 1:
            raise ValueError(f"l_terms must be a positive integer, got {self.l_terms!r}")
        object.__setattr__(self, "l_terms", int(self.l_terms))

    @property
    def omega0(self) -> float:
        return 2.0 * math.pi / self.t_period


@dataclass(frozen=True)
class Estimate:
    """One statistic from one method, with its cost."""

    value: float
    method: Method
    evaluations: int = 0
    error_estimate: float | None = None


@dataclass(frozen=True)
class StatPoint:
    z: float
    nsirth_db: float
    op: float
    lcr_norm: float
    afd_norm: float
    method: Method
    diagnostics: dict = field(default_factory=dict, compare=False)


def derived_params(config: SystemConfig) -> DerivedParams:
    """Scenario mapping: ``(alpha, beta) = (M N, gamma)`` or ``(N, gamma/M)``."""
    g = config.gamma
    m, n = config.m_branches, config.n_interferers
    if config.scenario is Scenario.INCOHERENT:
        return DerivedParams(float(m * n), g, g)
    return DerivedParams(float(n), g / m, g)


def derivative_variances(config: SystemConfig) -> DerivativeVariances:
    """Variances of the time derivatives of the desired sum and the interference envelope."""
    m = config.m_branches
    sx = (math.pi * config.f_m0) ** 2 * m * config.omega_s
    sy = (math.pi * config.f_mi) ** 2 * config.omega_i
    if config.scenario is Scenario.COHERENT:
        sy *= m
    return DerivativeVariances(sx, sy)


def z_from_nsirth_db(nsirth_db: float, gamma: float) -> float:
    """Linear threshold ``z`` for a normalized threshold ``gamma/z`` given in dB."""
    return gamma * 10.0 ** (-nsirth_db / 10.0)


def nsirth_db_from_z(z: float, gamma: float) -> float:
    return 10.0 * math.log10(gamma / z)


def lcr_prefactor(z: float, config: SystemConfig) -> float:
    """Factor turning ``int f_X'(h y) f_Y'(y) dy`` into ``N_Z/f_m0``.

    Equal Doppler shifts reduce it to ``sqrt(pi/2) sqrt(M + z/beta)``.
    """
    if not config.f_m0 > 0:
        raise ValueError("normalized LCR needs f_m0 > 0")
    if config.equal_doppler:
        beta = derived_params(config).beta
        return math.sqrt(0.5 * math.pi) * math.sqrt(config.m_branches + z / beta)
    var = derivative_variances(config)
    return math.sqrt((var.sigma2_xdot + z * var.sigma2_ydot) / (2.0 * math.pi)) / (
        config.f_m0 * math.sqrt(config.omega_s))


# ---------------------------------------------------------------------------
# Closed forms on the normalized axis (h^2 = z/beta).


def op_closed_m1(zb: float, alpha: float) -> float:
    """``1 - (1 + z/beta)^-alpha``."""
    return -math.expm1(-alpha * math.log1p(zb))


def op_closed_m2(zb: float, alpha: float) -> float:
    """Dual-branch outage probability (incomplete-beta form)."""
    first = -math.expm1(-alpha * math.log1p(zb))
    x = 0.5 * zb / (1.0 + zb)
    second = alpha * math.sqrt(0.5 * zb) * math.exp(-(alpha + 0.5) * math.log1p(0.5 * zb))
    return first - second * incomplete_beta(x, 0.5, alpha + 0.5)


def lcr_closed_m1(zb: float, alpha: float) -> float:
    """Single-branch normalized LCR for equal Doppler shifts."""
    r = gamma_ratio(alpha, 0.5)
    return math.sqrt(2.0 * math.pi) * r * math.sqrt(zb) * math.exp(-alpha * math.log1p(zb))


def _density_integral_m1(h: float, alpha: float) -> float:
    """``int f_X'(h y) f_Y'(y) dy`` for M = 1."""
    r = gamma_ratio(alpha, 0.5)
    return 2.0 * h * r * math.exp(-(alpha + 0.5) * math.log1p(h * h))


def _m2_kernel(s: float, alpha: float) -> float:
    """Bracketed sum shared by the dual-branch LCR forms, with ``s = h^2 = z/beta``.

    The two terms are each ~sqrt(s) while their sum is ~s^1.5, so for small
    ``s alpha`` the incomplete beta is replaced by its positive series
    ``B(x; 1/2, alpha) = 2 sqrt(x) (1-x)^alpha 2F1(alpha+1/2, 1; 3/2; x)``
    and the leading terms are cancelled analytically.
    """
    x = 0.5 * s / (1.0 + s)
    if s * (alpha + 0.5) > 0.5:
        t1 = math.sqrt(s) * math.exp(-(alpha - 0.5) * math.log1p(s))
        t2 = (math.sqrt(0.5) * ((alpha - 0.5) * s - 1.0) * math.exp(-alpha * math.log1p(0.5 * s))
              * incomplete_beta(x, 0.5, alpha))
        return t1 + t2
    term = (alpha + 0.5) / 1.5 * x
    f1 = 0.0
    n = 1
    while term > 1e-17 * f1 or f1 == 0.0:
        f1 += term
        term *= (alpha + 0.5 + n) / (1.5 + n) * x
        n += 1
    bracket = s * (1.0 + (alpha - 0.5) * (1.0 + f1)) - f1
    return math.sqrt(s) * math.exp(-(alpha + 0.5) * math.log1p(s)) * bracket


def _density_integral_m2(h: float, alpha: float) -> float:
    """``int f_X'(h y) f_Y'(y) dy`` for M = 2, valid for any Doppler pair."""
    h2 = h * h
    return gamma_ratio(alpha, 0.5) / (1.0 + 0.5 * h2) * _m2_kernel(h2, alpha)


def lcr_closed_m2_equal_doppler(zb: float, alpha: float) -> float:
    """Dual-branch normalized LCR when ``f_m0 = f_mi``."""
    r = gamma_ratio(alpha, 0.5)
    return _SQRT_PI * r / math.sqrt(1.0 + 0.5 * zb) * _m2_kernel(zb, alpha)


def lcr_closed_m2_general(z: float, config: SystemConfig) -> float:
    """Dual-branch normalized LCR with the general Doppler prefactor."""
    p = derived_params(config)
    var = derivative_variances(config)
    pref = math.sqrt((var.sigma2_xdot + z * var.sigma2_ydot) / (2.0 * math.pi)) / (
        config.f_m0 * math.sqrt(config.omega_s))
    return pref * _density_integral_m2(math.sqrt(z / p.beta), p.alpha)


# ---------------------------------------------------------------------------
# Envelope distributions.


def desired_envelope_cdf_m2(x, omega_s: float = 1.0):
    """CDF of the sum of two i.i.d. Rayleigh envelopes of power ``omega_s``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    u = x * x / omega_s
    out = (-np.expm1(-u) - np.sqrt(0.5 * math.pi * u) * np.exp(-0.5 * u)
           * erf_array(np.sqrt(0.5 * u)))
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def desired_envelope_pdf_m2(x, omega_s: float = 1.0):
    """PDF of the sum of two i.i.d. Rayleigh envelopes of power ``omega_s``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    u = x * x / omega_s
    e = erf_array(np.sqrt(0.5 * u))
    g = np.exp(-0.5 * u)
    out = (x / omega_s * np.exp(-u)
           + math.sqrt(0.5 * math.pi / omega_s) * (u - 1.0) * g * e)
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def _cdf_x_norm(m: int, x):
    if m == 1:
        return -np.expm1(-x * x)
    return desired_envelope_cdf_m2(x)


def _pdf_x_norm(m: int, x):
    if m == 1:
        return 2.0 * x * np.exp(-x * x)
    return desired_envelope_pdf_m2(x)


def _pdf_y_norm(y, alpha: float):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    pos = y > 0
    yp = y[pos]
    out[pos] = np.exp(math.log(2.0) + (2.0 * alpha - 1.0) * np.log(yp) - yp * yp
                      - math.lgamma(alpha))
    if alpha == 0.5:
        out[~pos] = 2.0 / _SQRT_PI
    return out


# ---------------------------------------------------------------------------
# CF product shared by the quadrature and series methods.


class _CfProduct:
    """``Phi_X'(w) Phi_Y'(-h w)``, memoized per abscissa array.

    The OP and LCR integrands share every tail panel, so the cache halves
    the cost of computing both statistics at one threshold.
    """

    def __init__(self, m: int, alpha: float, h: float):
        self.m = m
        self.alpha = alpha
        self.h = h
        self.phi_x = PoweredCF(BranchCF(1.0, 1.0), m)
        self.phi_y = BranchCF(1.0, alpha)
        self.mean_diff = m * _SQRT_PI / 2.0 - h * gamma_ratio(alpha, 0.5)
        self._cache: dict[bytes, np.ndarray] = {}

    def __call__(self, w: np.ndarray) -> np.ndarray:
        key = w.tobytes()
        v = self._cache.get(key)
        if v is None:
            v = self.phi_x(w) * self.phi_y(-self.h * w)
            self._cache[key] = v
        return v

    def op_integrand(self, w):
        w = np.asarray(w, dtype=float)
        p = self(w)
        small = np.abs(w) < _OMEGA_LIMIT
        safe = np.where(small, 1.0, w)
        return np.where(small, self.mean_diff, p.imag / safe)

    def lcr_integrand(self, w):
        return self(np.asarray(w, dtype=float)).real


def _product(z: float, config: SystemConfig) -> _CfProduct:
    p = derived_params(config)
    return _CfProduct(config.m_branches, p.alpha, math.sqrt(z / p.beta))


def _tail_spec(spec: QuadratureSpec, m: int) -> QuadratureSpec:
    if spec.tail_panel_width is not None:
        return spec
    return QuadratureSpec(spec.abs_tol, spec.rel_tol, spec.max_subdivisions,
                          2.0 * math.pi / math.sqrt(m), spec.tail_stop_threshold)


def _series_sum(terms: np.ndarray, scale: float, what: str) -> float:
    partial = np.cumsum(terms)
    last = max(1, len(terms) // 10)
    tail = partial[-last:]
    spread = scale * float(tail.max() - tail.min())
    if spread > _SERIES_SPREAD_TOL:
        warnings.warn(
            f"{what} series partial sums spread {spread:.2e} over the last {last} terms",
            SeriesConvergenceWarning, stacklevel=4)
    return math.fsum(terms)


def _y_span(alpha: float) -> float:
    return math.sqrt(alpha + _Y_SPAN_SD * math.sqrt(alpha) + 2.0 * _Y_SPAN_SD)


# ---------------------------------------------------------------------------
# Dispatch.


def _check_z(z: float) -> float:
    z = float(z)
    if not (z >= 0 and math.isfinite(z)):
        raise ValueError(f"threshold z must be finite and >= 0, got {z!r}")
    return z


def _check_method(method, config: SystemConfig, params):
    method = Method(method) if not isinstance(method, Method) else method
    m = config.m_branches
    if method in (Method.CLOSED, Method.DENSITY) and m > 2:
        word = "closed form" if method is Method.CLOSED else "density integral"
        raise MethodDomainError(f"{word} requires M ≤ 2 (got M={m})")
    if method is Method.SERIES:
        params = BeaulieuParams() if params is None else params
        if not isinstance(params, BeaulieuParams):
            raise TypeError("series method takes BeaulieuParams")
    elif method in (Method.QUADRATURE, Method.DENSITY):
        params = QuadratureSpec() if params is None else params
        if not isinstance(params, QuadratureSpec):
            raise TypeError(f"{method.value} method takes QuadratureSpec")
    return method, params


def _op(z, config, method, params, prod=None) -> Estimate:
    p = derived_params(config)
    m = config.m_branches
    zb = z / p.beta
    h = math.sqrt(zb)
    if method is Method.CLOSED:
        v = op_closed_m1(zb, p.alpha) if m == 1 else op_closed_m2(zb, p.alpha)
        return Estimate(v, method, 0, 0.0)
    if method is Method.DENSITY:
        res = adaptive_finite(
            lambda y: _cdf_x_norm(m, h * y) * _pdf_y_norm(y, p.alpha),
            0.0, _y_span(p.alpha), params)
        return Estimate(min(max(res.value, 0.0), 1.0), method, res.evaluations, res.error_estimate)
    prod = prod or _product(z, config)
    if method is Method.QUADRATURE:
        res = adaptive_semi_infinite(prod.op_integrand, _tail_spec(params, m))
        v = 0.5 - res.value / math.pi
        return Estimate(v, method, res.evaluations, res.error_estimate / math.pi)
    n = np.arange(1, params.l_terms + 1)
    k = 2.0 * n - 1.0
    terms = prod(k * params.omega0).imag / k
    s = _series_sum(terms, 2.0 / math.pi, "OP")
    return Estimate(0.5 - 2.0 / math.pi * s, method, params.l_terms, None)


def _lcr(z, config, method, params, prod=None) -> Estimate:
    p = derived_params(config)
    m = config.m_branches
    zb = z / p.beta
    h = math.sqrt(zb)
    pref = lcr_prefactor(z, config)
    if method is Method.CLOSED:
        if m == 1:
            v = lcr_closed_m1(zb, p.alpha) if config.equal_doppler else pref * _density_integral_m1(h, p.alpha)
        else:
            v = lcr_closed_m2_equal_doppler(zb, p.alpha) if config.equal_doppler else lcr_closed_m2_general(z, config)
        return Estimate(v, method, 0, 0.0)
    if method is Method.DENSITY:
        res = adaptive_finite(
            lambda y: _pdf_x_norm(m, h * y) * _pdf_y_norm(y, p.alpha),
            0.0, _y_span(p.alpha), params)
        return Estimate(pref * res.value, method, res.evaluations, pref * res.error_estimate)
    prod = prod or _product(z, config)
    if method is Method.QUADRATURE:
        res = adaptive_semi_infinite(prod.lcr_integrand, _tail_spec(params, m))
        scale = pref / math.pi
        return Estimate(scale * res.value, method, res.evaluations, scale * res.error_estimate)
    n = np.arange(1, params.l_terms + 1)
    terms = prod((2.0 * n - 1.0) * params.omega0).real
    scale = pref * 4.0 / params.t_period
    s = _series_sum(terms, scale, "LCR")
    return Estimate(scale * s, method, params.l_terms, None)


def outage_probability(z: float, config: SystemConfig, method=Method.QUADRATURE, params=None) -> Estimate:
    """``P(Z < z)`` for the EGC output SIR ``Z``.

    ``params`` is a :class:`QuadratureSpec` for the quadrature and density
    methods and a :class:`BeaulieuParams` for the series method.
    """
    z = _check_z(z)
    method, params = _check_method(method, config, params)
    if z == 0.0:
        return Estimate(0.0, method)
    return _op(z, config, method, params)


def level_crossing_rate(z: float, config: SystemConfig, method=Method.QUADRATURE, params=None) -> Estimate:
    """Normalized LCR ``N_Z(z)/f_m0`` (downward crossings per desired Doppler period)."""
    z = _check_z(z)
    method, params = _check_method(method, config, params)
    if z == 0.0:
        return Estimate(0.0, method)
    return _lcr(z, config, method, params)


def _afd(op: float, lcr: float) -> float:
    if op == 0.0:
        return 0.0
    if not (lcr > 0 and math.isfinite(op / lcr)):
        raise AfdUndefinedError(f"LCR is {lcr!r} while OP is {op!r}: fade duration undefined")
    return op / lcr


def average_fade_duration(z: float, config: SystemConfig, method=Method.QUADRATURE, params=None) -> Estimate:
    """Normalized AFD ``f_m0 T_Z(z) = OP / (N_Z/f_m0)``, both from the same method."""
    pt = stat_point(z, config, method, params)
    if math.isnan(pt.afd_norm):
        raise AfdUndefinedError(f"LCR is {pt.lcr_norm!r} at z={z!r}: fade duration undefined")
    return Estimate(pt.afd_norm, pt.method, pt.diagnostics.get("evaluations", 0))


def stat_point(z: float, config: SystemConfig, method=Method.QUADRATURE, params=None) -> StatPoint:
    """OP, normalized LCR and normalized AFD at one threshold with one method.

    An undefined AFD (LCR vanished while OP did not) is reported as NaN.
    """
    z = _check_z(z)
    method, params = _check_method(method, config, params)
    nsirth = math.inf if z == 0.0 else nsirth_db_from_z(z, config.gamma)
    if z == 0.0:
        return StatPoint(z, nsirth, 0.0, 0.0, 0.0, method, {"evaluations": 0})
    prod = _product(z, config) if method in (Method.QUADRATURE, Method.SERIES) else None
    op = _op(z, config, method, params, prod)
    lcr = _lcr(z, config, method, params, prod)
    try:
        afd = _afd(op.value, lcr.value)
    except AfdUndefinedError:
        afd = math.nan
    diag = {
        "evaluations": op.evaluations + lcr.evaluations,
        "op_evaluations": op.evaluations,
        "lcr_evaluations": lcr.evaluations,
    }
    if op.error_estimate is not None:
        diag["op_error_estimate"] = op.error_estimate
        diag["lcr_error_estimate"] = lcr.error_estimate
    return StatPoint(z, nsirth, op.value, lcr.value, afd, method, diag)
