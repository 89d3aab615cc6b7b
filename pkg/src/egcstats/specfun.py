"""Real-argument special functions used by the analytic formulas.

Gamma and erf come from the standard library (Lanczos-class ``lgamma``).
The Kummer function 1F1, the Gauss function 2F1 and the non-regularized
incomplete beta function are implemented here.

1F1 on the negative real axis is evaluated by the first applicable path:

1. Kummer transformation ``1F1(a;b;x) = e^x 1F1(b-a;b;-x)`` followed by the
   ascending series (summed in log space, so huge terms never overflow);
   terminates exactly when ``b - a`` is a non-positive integer.
2. Large-argument asymptotic expansion (algebraic part; accepted only when the
   exponentially small part is below tolerance).
3. For ``b`` in {1/2, 3/2} and ``a >= 1/2``: the integral representation
   ``1F1(a;1/2;-X) = E[cos(2 sqrt(X G))]`` and
   ``1F1(a;3/2;-X) = E[sinc(2 sqrt(X G))]`` with ``G ~ Gamma(a, 1)``,
   integrated with composite Gauss-Legendre. This covers large ``a`` at
   moderate ``X`` where every series cancels catastrophically.

Convergence is declared when the estimated error is at most
``TOL * max(|value|, 1)``. For the b in {1/2, 3/2} family on x <= 0 the
function is bounded by 1, so this is the natural scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TOL",
    "TERM_BUDGET",
    "SpecFunError",
    "SpecFunDomainError",
    "SpecFunResult",
    "gamma_fn",
    "log_gamma",
    "gamma_ratio",
    "erf_fn",
    "erf_array",
    "kummer_1f1",
    "hyp1f1_array",
    "hyp1f1_direct",
    "gauss_2f1",
    "incomplete_beta",
    "beta_fn",
]

TOL = 1e-14
TERM_BUDGET = 10_000
EPS = float(np.finfo(float).eps)

# The asymptotic expansion is only attempted beyond this argument.
_ASYM_MIN_X = 20.0
# Above this the log-ratio series beats an lgamma difference.
_RATIO_ASYM_MIN_X = 30.0
_ASYM_MAX_TERMS = 200
# Non-terminating Kummer series costs ~X iterations; beyond this use path 3.
_KUMMER_MAX_X = 1000.0
_KUMMER_MAX_X_WITH_INTEGRAL = 50.0

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


class SpecFunError(ArithmeticError):
    """A special function could not be evaluated to tolerance."""


class SpecFunDomainError(SpecFunError, ValueError):
    """Argument outside the supported domain."""


@dataclass(frozen=True)
class SpecFunResult:
    value: float
    converged: bool
    terms_used: int


def gamma_fn(x: float) -> float:
    if not x > 0:
        raise SpecFunDomainError(f"gamma_fn requires x > 0, got {x!r}")
    if x > 171.0:
        return math.inf
    return math.gamma(x)


def log_gamma(x: float) -> float:
    if not x > 0:
        raise SpecFunDomainError(f"log_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


# B_2k / (2k (2k - 1)) for the Stirling series of log Gamma.
_STIRLING = (1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0, -691.0 / 360360.0)


def _log_gamma_ratio(x: float, shift: float) -> float:
    """``log Gamma(x + shift) - log Gamma(x)`` for ``x >= 30``, ``x + shift >= 30``.

    The Stirling difference is arranged so no two large terms cancel.
    """
    y = x + shift
    out = (x - 0.5) * math.log1p(shift / x) + shift * math.log(y) - shift
    for k, c in enumerate(_STIRLING):
        p = 2 * k + 1
        out += c * (y ** -p - x ** -p)
    return out


def gamma_ratio(x: float, shift: float = 0.5) -> float:
    """``Gamma(x + shift) / Gamma(x)``.

    For large arguments the difference of two large lgamma values loses
    digits, so the Stirling series of the log ratio is used instead.
    """
    if not (x > 0 and x + shift > 0):
        raise SpecFunDomainError(f"gamma_ratio requires x > 0 and x + shift > 0, got {x!r}, {shift!r}")
    if min(x, x + shift) >= _RATIO_ASYM_MIN_X:
        return math.exp(_log_gamma_ratio(x, shift))
    return math.exp(math.lgamma(x + shift) - math.lgamma(x))


def erf_fn(x: float) -> float:
    return math.erf(x)


erf_array = np.vectorize(math.erf, otypes=[float])


def _is_nonpositive_int(v: float) -> bool:
    return v <= 0 and float(v).is_integer()


def _lgamma_sign(v: float) -> tuple[float, float]:
    """Return ``(log|Gamma(v)|, sign(Gamma(v)))``; sign is 0 at the poles."""
    if _is_nonpositive_int(v):
        return math.inf, 0.0
    if v > 0:
        return math.lgamma(v), 1.0
    # Gamma alternates sign between consecutive negative integers.
    sign = -1.0 if math.floor(v) % 2 else 1.0
    return math.lgamma(v), sign


# --------------------------------------------------------------------------
# 1F1 building blocks (vectorized over the argument)


def _ascending(c: float, b: float, X: np.ndarray, log_scale: np.ndarray):
    """``exp(log_scale) * sum_k (c)_k/(b)_k X^k/k!`` for X > 0, in log space.

    Returns ``(value, err, terms, converged)``.
    """
    n = X.size
    lt = np.array(log_scale, dtype=float, copy=True).reshape(n)
    sign = np.ones(n)
    first = np.exp(lt)
    total = first.copy()
    abs_total = first.copy()
    terms = np.ones(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    log_x = np.log(X)
    k = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while active.any() and k < TERM_BUDGET - 1:
            num = c + k
            den = b + k
            if num == 0:
                # Every later term carries the factor (c + k) = 0.
                active[:] = False
                break
            idx = np.flatnonzero(active)
            lt[idx] += math.log(abs(num)) - math.log(abs(den)) - math.log(k + 1) + log_x[idx]
            if (num < 0) != (den < 0):
                sign[idx] = -sign[idx]
            t = sign[idx] * np.exp(lt[idx])
            total[idx] += t
            abs_total[idx] += np.abs(t)
            terms[idx] += 1
            nxt = abs((c + k + 1) / (b + k + 1)) * X[idx] / (k + 2)
            done = (np.abs(t) <= EPS * np.abs(total[idx])) & (nxt < 0.5)
            active[idx[done]] = False
            k += 1
    err = 4.0 * EPS * abs_total
    converged = ~active & np.isfinite(total) & np.isfinite(abs_total)
    return total, err, terms, converged


def _asymptotic_neg(a: float, b: float, X: np.ndarray):
    """Algebraic large-X expansion of ``1F1(a;b;-X)``."""
    n = X.size
    lg_b, sg_b = _lgamma_sign(b)
    lg_ba, sg_ba = _lgamma_sign(b - a)
    if sg_ba == 0.0 or a <= 0:
        return np.zeros(n), np.full(n, np.inf), np.zeros(n, dtype=np.int64), np.zeros(n, dtype=bool)
    term = np.ones(n)
    total = np.ones(n)
    max_abs = np.ones(n)
    terms = np.ones(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    failed = np.zeros(n, dtype=bool)
    for s in range(_ASYM_MAX_TERMS):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        r = (a + s) * (a - b + 1 + s) / ((s + 1) * X[idx])
        term[idx] *= r
        total[idx] += term[idx]
        max_abs[idx] = np.maximum(max_abs[idx], np.abs(term[idx]))
        terms[idx] += 1
        conv = np.abs(term[idx]) <= EPS * np.abs(total[idx])
        grow = ~conv & (np.abs(r) >= 1.0)
        failed[idx[grow]] = True
        active[idx[conv | grow]] = False
    failed |= active
    with np.errstate(over="ignore", under="ignore"):
        pref = sg_b * sg_ba * np.exp(lg_b - lg_ba - a * np.log(X))
        value = pref * total
        err = np.abs(pref) * 4.0 * EPS * max_abs * terms
        # Neglected exponentially small contribution.
        err += np.exp(lg_b - math.lgamma(a) - X + (a - b) * np.log(X))
    return value, err, terms, ~failed


def _u_support(a: float) -> tuple[float, float]:
    """Interval holding all but ~1e-18 of the density of sqrt(Gamma(a, 1))."""
    log_norm = math.log(2.0) - math.lgamma(a)
    mode = math.sqrt(max(a - 0.5, 0.0))

    def logp(u: float) -> float:
        if u <= 0:
            return -math.inf if a > 0.5 else log_norm
        return log_norm + (2 * a - 1) * math.log(u) - u * u

    floor = math.log(1e-20)
    d = 0.5
    while logp(mode + d) > floor:
        d *= 1.5
    hi = mode + d
    lo = 0.0
    if mode > 0:
        d = 0.5
        while mode - d > 0 and logp(mode - d) > floor:
            d *= 1.5
        lo = max(mode - d, 0.0)
    return lo, hi


def _integral_rep(a: float, b: float, X: np.ndarray):
    """``E[K(2 sqrt(X) U)]`` with ``U^2 ~ Gamma(a)``; K = cos (b=1/2), sinc (b=3/2)."""
    lo, hi = _u_support(a)
    x_max = float(X.max())
    width = min(0.5, math.pi / math.sqrt(x_max)) if x_max > 0 else 0.5
    n_panels = max(1, math.ceil((hi - lo) / width))
    edges = np.linspace(lo, hi, n_panels + 1)
    if lo == 0.0 and not float(2 * a - 1).is_integer():
        # Geometric grading resolves the u^(2a-1) branch point at the origin.
        first = edges[1]
        grade = first * 2.0 ** -np.arange(0, 45)[::-1]
        edges = np.concatenate(([0.0], grade, edges[2:]))
    left = edges[:-1, None]
    half = 0.5 * np.diff(edges)[:, None]
    u = (left + half * (1.0 + _GL_NODES[None, :])).ravel()
    w = (half * _GL_WEIGHTS[None, :]).ravel()
    with np.errstate(divide="ignore"):
        logp = math.log(2.0) - math.lgamma(a) + (2 * a - 1) * np.log(u) - u * u
    pw = w * np.exp(logp)
    mass = pw.sum()
    # lgamma carries ~1e-16 * a absolute error; normalizing by the computed
    # mass removes it. A mass far from 1 means the support was clipped.
    pw /= mass
    arg = 2.0 * np.sqrt(X)[:, None] * u[None, :]
    kern = np.cos(arg) if b == 0.5 else np.sinc(arg / math.pi)
    value = kern @ pw
    err = np.full(X.size, 8.0 * EPS)
    converged = np.full(X.size, abs(mass - 1.0) < 1e-9)
    return value, err, np.full(X.size, u.size, dtype=np.int64), converged


def _check_b(b: float) -> None:
    if _is_nonpositive_int(b):
        raise SpecFunDomainError(f"1F1 undefined for non-positive integer b={b!r}")


def hyp1f1_direct(a: float, b: float, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Plain ascending series ``sum (a)_k/(b)_k x^k/k!`` (no transformation).

    Intended for x >= 0 and for test cross-checks at small |x|.
    Returns ``(value, converged, terms)``.
    """
    _check_b(b)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.ones(x.size)
    conv = np.ones(x.size, dtype=bool)
    terms = np.ones(x.size, dtype=np.int64)
    nz = x != 0
    if nz.any():
        xs = x[nz]
        # Series in |x| with alternating sign for x < 0: (a)_k/(b)_k (-1)^k |x|^k/k!
        total = np.ones(xs.size)
        term = np.ones(xs.size)
        abs_total = np.ones(xs.size)
        active = np.ones(xs.size, dtype=bool)
        tt = np.ones(xs.size, dtype=np.int64)
        k = 0
        with np.errstate(over="ignore", invalid="ignore"):
            while active.any() and k < TERM_BUDGET - 1:
                idx = np.flatnonzero(active)
                term[idx] *= (a + k) / (b + k) * xs[idx] / (k + 1)
                total[idx] += term[idx]
                abs_total[idx] += np.abs(term[idx])
                tt[idx] += 1
                nxt = abs((a + k + 1) / (b + k + 1)) * np.abs(xs[idx]) / (k + 2)
                done = (np.abs(term[idx]) <= EPS * np.abs(total[idx])) & (nxt < 0.5)
                done |= term[idx] == 0
                active[idx[done]] = False
                k += 1
        ok = ~active & np.isfinite(total) & (4 * EPS * abs_total <= TOL * np.maximum(np.abs(total), 1.0))
        out[nz] = total
        conv[nz] = ok
        terms[nz] = tt
    return out, conv, terms


def hyp1f1_array(a: float, b: float, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized Kummer 1F1(a; b; x). Returns ``(value, converged, terms)``."""
    _check_b(b)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    value = np.full(x.size, np.nan)
    conv = np.zeros(x.size, dtype=bool)
    terms = np.zeros(x.size, dtype=np.int64)

    zero = x == 0
    value[zero] = 1.0
    conv[zero] = True
    terms[zero] = 1

    pos = x > 0
    if pos.any():
        v, c, t = hyp1f1_direct(a, b, x[pos])
        value[pos], conv[pos], terms[pos] = v, c, t

    todo = np.flatnonzero(x < 0)
    if todo.size == 0:
        return value, conv, terms
    X = -x[todo]
    c_par = b - a
    terminating = _is_nonpositive_int(c_par) and -c_par < TERM_BUDGET

    def accept(sel, v, err, t, ok):
        good = ok & np.isfinite(v) & (err <= TOL * np.maximum(np.abs(v), 1.0))
        where = sel[good]
        value[todo[where]] = v[good]
        conv[todo[where]] = True
        terms[todo[where]] = t[good]
        # keep a best-effort value for the caller even when not converged
        miss = ~np.isfinite(value[todo[sel]])
        value[todo[sel[miss]]] = v[miss]
        terms[todo[sel[miss]]] = t[miss]
        return sel[~good]

    remaining = np.arange(todo.size)
    if terminating:
        v, err, t, ok = _ascending(c_par, b, X, -X)
        remaining = accept(remaining, v, err, t, ok)
    else:
        big = remaining[X[remaining] >= _ASYM_MIN_X]
        if big.size:
            v, err, t, ok = _asymptotic_neg(a, b, X[big])
            left = accept(big, v, err, t, ok)
            remaining = np.union1d(remaining[X[remaining] < _ASYM_MIN_X], left)
        has_integral = b in (0.5, 1.5) and a >= 0.5
        kummer_max = _KUMMER_MAX_X_WITH_INTEGRAL if has_integral else _KUMMER_MAX_X
        mid = remaining[X[remaining] <= kummer_max]
        if has_integral and c_par < 0:
            # Alternating head of the transformed series peaks near
            # exp(2 sqrt(|c| X) - X); skip it where cancellation is certain.
            hopeless = 2.0 * np.sqrt(-c_par * X[mid]) - X[mid] > math.log(100.0)
            mid = mid[~hopeless]
            remaining = np.setdiff1d(remaining, mid)
        if mid.size:
            v, err, t, ok = _ascending(c_par, b, X[mid], -X[mid])
            left = accept(mid, v, err, t, ok)
            remaining = np.union1d(np.setdiff1d(remaining, mid), left)
    if remaining.size and b in (0.5, 1.5) and a >= 0.5:
        v, err, t, ok = _integral_rep(a, b, X[remaining])
        remaining = accept(remaining, v, err, t, ok)
    return value, conv, terms


def kummer_1f1(a: float, b: float, x: float) -> SpecFunResult:
    """Confluent hypergeometric function 1F1(a; b; x) for real arguments."""
    v, c, t = hyp1f1_array(a, b, x)
    return SpecFunResult(float(v[0]), bool(c[0]), int(max(t[0], 1)))


# --------------------------------------------------------------------------
# 2F1 and the incomplete beta function


def _gauss_series(a: float, b: float, c: float, z: float) -> SpecFunResult:
    total = 1.0
    term = 1.0
    abs_total = 1.0
    if z == 0:
        return SpecFunResult(1.0, True, 1)
    for k in range(TERM_BUDGET - 1):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z
        total += term
        abs_total += abs(term)
        if term == 0.0:
            return SpecFunResult(total, True, k + 2)
        ratio = abs((a + k + 1) * (b + k + 1) / ((c + k + 1) * (k + 2)) * z)
        if abs(term) <= EPS * abs(total) and ratio < 1.0:
            ok = 4 * EPS * abs_total <= TOL * max(abs(total), 1.0)
            return SpecFunResult(total, ok, k + 2)
    return SpecFunResult(total, False, TERM_BUDGET)


def gauss_2f1(a: float, b: float, c: float, z: float) -> SpecFunResult:
    """Gauss hypergeometric function 2F1(a, b; c; z) for |z| < 1.

    For z < -1/2 the alternating series loses digits, so the sum is taken at
    ``w = z/(z-1)`` in (1/3, 1/2) via ``(1-z)^-a 2F1(a, c-b; c; w)``.
    """
    if _is_nonpositive_int(c):
        raise SpecFunDomainError(f"2F1 undefined for non-positive integer c={c!r}")
    if not abs(z) < 1:
        raise SpecFunDomainError(f"2F1 series requires |z| < 1, got z={z!r}")
    if z < -0.5:
        r = _gauss_series(a, c - b, c, z / (z - 1.0))
        return SpecFunResult((1.0 - z) ** (-a) * r.value, r.converged, r.terms_used)
    return _gauss_series(a, b, c, z)


def beta_fn(a: float, b: float) -> float:
    """Complete beta function B(a, b)."""
    if not (a > 0 and b > 0):
        raise SpecFunDomainError(f"beta_fn requires a, b > 0, got {a!r}, {b!r}")
    small, big = min(a, b), max(a, b)
    if big >= _RATIO_ASYM_MIN_X:
        return math.exp(math.lgamma(small) - _log_gamma_ratio(big, small))
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def _betacf(z: float, a: float, b: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * z / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, TERM_BUDGET + 1):
        m2 = 2 * m
        aa = m * (b - m) * z / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * z / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= EPS:
            return h
    raise SpecFunError(f"incomplete beta continued fraction did not converge (z={z}, a={a}, b={b})")


def incomplete_beta(z: float, a: float, b: float) -> float:
    """Non-regularized incomplete beta ``B(z; a, b) = int_0^z t^(a-1) (1-t)^(b-1) dt``."""
    if not (0.0 <= z <= 1.0):
        raise SpecFunDomainError(f"incomplete_beta requires 0 <= z <= 1, got {z!r}")
    if not (a > 0 and b > 0):
        raise SpecFunDomainError(f"incomplete_beta requires a, b > 0, got {a!r}, {b!r}")
    if z == 0.0:
        return 0.0
    if z == 1.0:
        return beta_fn(a, b)
    if z > (a + 1.0) / (a + b + 2.0):
        return beta_fn(a, b) - incomplete_beta(1.0 - z, b, a)
    front = math.exp(a * math.log(z) + b * math.log1p(-z))
    return front * _betacf(z, a, b) / a
