"""Adaptive Gauss-Kronrod (G7/K15) quadrature on finite panels and on [0, inf).

Integrands are called with a numpy array of abscissae and must return an
array of the same shape, so that one panel costs a single vectorized call.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "QuadratureError",
    "QuadratureBudgetError",
    "QuadratureSpec",
    "QuadratureResult",
    "gk_panel",
    "adaptive_finite",
    "adaptive_semi_infinite",
]

# Kronrod abscissae (positive half, descending) and weights, QUADPACK qk15.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
# Gauss weights for the 7-point rule, which uses the odd-indexed Kronrod nodes.
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])  # 15 nodes, ascending
_WK15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5]] = _WG[:3]
_WG15[7] = _WG[3]
_WG15[[9, 11, 13]] = _WG[2::-1]

N_NODES = 15
_INITIAL_CONSTANT_PANELS = 16


class QuadratureError(ArithmeticError):
    """Integrand or integration failure."""


class QuadratureBudgetError(QuadratureError):
    """Subdivision budget exhausted before the tolerance was met.

    The partial result is attached as ``partial``.
    """

    def __init__(self, message: str, partial: "QuadratureResult"):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and tail rules for :func:`adaptive_semi_infinite`.

    ``tail_panel_width=None`` means "let the caller choose", which the analytic
    module resolves to ``2*pi/sqrt(M)`` on the scale-normalized axis.
    """

    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    max_subdivisions: int = 2000
    tail_panel_width: float | None = None
    tail_stop_threshold: float = 1e-13

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("abs_tol and rel_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.tail_panel_width is not None and not self.tail_panel_width > 0:
            raise ValueError("tail_panel_width must be positive")
        if not self.tail_stop_threshold >= 0:
            raise ValueError("tail_stop_threshold must be nonnegative")


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int
    subdivisions: int


def _eval(f: Callable, x: np.ndarray) -> np.ndarray:
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    if not np.all(np.isfinite(y)):
        bad = x[~np.isfinite(y)]
        raise QuadratureError(f"non-finite integrand value at x={bad[:3]}")
    return y


def gk_panel(f: Callable, a: float, b: float) -> tuple[float, float]:
    """Integrate ``f`` over ``[a, b]`` with the G7/K15 pair.

    Returns ``(kronrod_value, error_estimate)``. The error estimate is the
    QUADPACK heuristic ``resasc * min(1, (200 |K - G| / resasc)^1.5)``.
    """
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    half = 0.5 * (b - a)
    center = 0.5 * (a + b)
    y = _eval(f, center + half * _NODES)
    resk = float(_WK15 @ y)
    resg = float(_WG15 @ y)
    mean = 0.5 * resk
    resasc = float(_WK15 @ np.abs(y - mean)) * abs(half)
    err = abs((resk - resg) * half)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    return resk * half, err


def _refine(f, panels, spec: QuadratureSpec, evaluations: int, subdivisions: int):
    """Bisect the worst panel until the global tolerance is met."""
    heap = [(-err, a, b, val) for a, b, val, err in panels]
    heapq.heapify(heap)
    total = math.fsum(p[3] for p in heap)
    err_total = sum(-p[0] for p in heap)

    def tol():
        return max(spec.abs_tol, spec.rel_tol * abs(total))

    while err_total > tol():
        if subdivisions >= spec.max_subdivisions:
            partial = QuadratureResult(total, err_total, evaluations, subdivisions)
            raise QuadratureBudgetError(
                f"subdivision budget {spec.max_subdivisions} exhausted: "
                f"value={total:.12g}, error estimate={err_total:.3g}",
                partial,
            )
        neg_err, a, b, val = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        v1, e1 = gk_panel(f, a, mid)
        v2, e2 = gk_panel(f, mid, b)
        evaluations += 2 * N_NODES
        subdivisions += 1
        heapq.heappush(heap, (-e1, a, mid, v1))
        heapq.heappush(heap, (-e2, mid, b, v2))
        total = math.fsum(p[3] for p in heap)
        err_total = sum(-p[0] for p in heap)
    return QuadratureResult(total, err_total, evaluations, subdivisions)


def adaptive_finite(f: Callable, a: float, b: float, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """Adaptive integral of ``f`` over the finite interval ``[a, b]``."""
    spec = spec or QuadratureSpec()
    if a == b:
        return QuadratureResult(0.0, 0.0, 0, 0)
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    val, err = gk_panel(f, a, b)
    res = _refine(f, [(a, b, val, err)], spec, N_NODES, 0)
    return QuadratureResult(sign * res.value, res.error_estimate, res.evaluations, res.subdivisions)


def adaptive_semi_infinite(
    f: Callable, spec: QuadratureSpec | None = None, start: float = 0.0
) -> QuadratureResult:
    """Integrate ``f`` over ``[start, inf)``.

    Tail panels are appended until two consecutive panels contribute
    ``|value| + error < tail_stop_threshold``. The first panels share the
    nominal width; after that each panel doubles, so slowly (algebraically)
    decaying integrands still terminate. The collected panels are then
    refined worst-error-first.
    """
    spec = spec or QuadratureSpec()
    width = spec.tail_panel_width if spec.tail_panel_width is not None else 2.0 * math.pi
    panels = []
    evaluations = 0
    a = float(start)
    quiet = 0
    while quiet < 2:
        if len(panels) >= spec.max_subdivisions:
            total = math.fsum(p[2] for p in panels)
            partial = QuadratureResult(total, sum(p[3] for p in panels), evaluations, len(panels))
            raise QuadratureBudgetError(
                f"tail did not decay below {spec.tail_stop_threshold:g} within "
                f"{spec.max_subdivisions} panels (reached x={a:.6g})",
                partial,
            )
        b = a + width
        val, err = gk_panel(f, a, b)
        evaluations += N_NODES
        panels.append((a, b, val, err))
        quiet = quiet + 1 if abs(val) + err < spec.tail_stop_threshold else 0
        if len(panels) >= _INITIAL_CONSTANT_PANELS:
            width *= 2.0
        a = b
    # Panels appended for the tail count as subdivisions of [start, inf).
    return _refine(f, panels, spec, evaluations, len(panels) - 1)
