"""Characteristic functions of the desired-signal and interference envelopes.

All characteristic functions here belong to the Nakagami-like envelope with
density ``2 u^(2a-1) exp(-u^2/Omega) / (Omega^a Gamma(a))``:

    Phi(w, Omega, a) = 1F1(a; 1/2; -w^2 Omega/4)
                       + j w sqrt(Omega) Gamma(a+1/2)/Gamma(a) 1F1(a+1/2; 3/2; -w^2 Omega/4)

Values are plain Python/numpy complex numbers.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Callable

import numpy as np

from .specfun import SpecFunError, gamma_ratio, hyp1f1_array

if TYPE_CHECKING:
    from .analytic import SystemConfig

__all__ = ["CfEvaluationError", "BranchCF", "PoweredCF", "branch_cf", "system_cfs"]

# Repeated multiplication up to this power, polar form above.
_MAX_DIRECT_POWER = 8


class CfEvaluationError(SpecFunError):
    """A hypergeometric evaluation inside a characteristic function did not converge."""


class BranchCF:
    """Vectorized ``Phi(w, Omega, alpha)`` with the gamma ratio cached."""

    def __init__(self, omega_avg: float, alpha: float):
        if not omega_avg > 0:
            raise ValueError(f"average power must be positive, got {omega_avg!r}")
        if not alpha > 0:
            raise ValueError(f"shape alpha must be positive, got {alpha!r}")
        self.omega_avg = float(omega_avg)
        self.alpha = float(alpha)
        self._ratio = gamma_ratio(self.alpha, 0.5)
        self._sqrt_omega = math.sqrt(self.omega_avg)

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        flat = np.atleast_1d(w).ravel()
        x = -0.25 * flat * flat * self.omega_avg
        re, ok_re, _ = hyp1f1_array(self.alpha, 0.5, x)
        im, ok_im, _ = hyp1f1_array(self.alpha + 0.5, 1.5, x)
        if not (ok_re.all() and ok_im.all()):
            bad = flat[~(ok_re & ok_im)]
            raise CfEvaluationError(
                f"1F1 did not converge in Phi(w, {self.omega_avg}, {self.alpha}) at w={bad[:5]}"
            )
        out = re + 1j * (flat * self._sqrt_omega * self._ratio) * im
        if w.ndim == 0:
            return complex(out[0])
        return out.reshape(w.shape)

    def __repr__(self) -> str:
        return f"BranchCF(omega_avg={self.omega_avg}, alpha={self.alpha})"


class PoweredCF:
    """``[Phi(w)]^power`` for the sum of ``power`` i.i.d. envelopes."""

    def __init__(self, base: BranchCF, power: int):
        if power < 1:
            raise ValueError(f"power must be >= 1, got {power!r}")
        self.base = base
        self.power = int(power)

    def __call__(self, w):
        v = self.base(w)
        if self.power == 1:
            return v
        if self.power <= _MAX_DIRECT_POWER:
            out = v
            for _ in range(self.power - 1):
                out = out * v
            return out
        return np.abs(v) ** self.power * np.exp(1j * self.power * np.angle(v))


def branch_cf(omega: float, omega_avg: float, alpha: float) -> complex:
    """Single evaluation of ``Phi(omega, omega_avg, alpha)``."""
    return BranchCF(omega_avg, alpha)(float(omega))


def system_cfs(config: "SystemConfig") -> tuple[Callable, Callable]:
    """Return ``(phi_x, phi_y)`` evaluators for the desired sum and the interference.

    ``phi_x = Phi(., Omega_S, 1)^M``; ``phi_y`` is ``Phi(., Omega_I, MN)`` for
    incoherent and ``Phi(., M Omega_I, N)`` for coherent interference combining.
    """
    from .analytic import Scenario

    m, n = config.m_branches, config.n_interferers
    phi_x = PoweredCF(BranchCF(config.omega_s, 1.0), m)
    if config.scenario is Scenario.INCOHERENT:
        phi_y = BranchCF(config.omega_i, m * n)
    else:
        phi_y = BranchCF(m * config.omega_i, n)
    return phi_x, phi_y
