"""Closed-form figures of merit for storage and retrieval of a unitary pair.

Notation follows the canonical pair: ``c~n = cos(2 n alpha)``,
``c~ = cos(2 alpha)``, ``s~ = sin(2 alpha)``.  Two regimes exist for the
optimal probabilistic protocol, separated by the angle ``chi_n`` solving
``cos(2 n a) (cos 2a + sin 2a) = 1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

BOUNDARY_TOL = 1e-12
RANGE_SLACK = 1e-12


class Regime(str, enum.Enum):
    SMALL = "small_alpha"
    LARGE = "large_alpha"
    BOUNDARY = "boundary"
    DEGENERATE = "degenerate"


def _check_range(n, alpha):
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if alpha < -RANGE_SLACK or 4 * n * alpha > np.pi + RANGE_SLACK:
        raise ValueError(f"alpha={alpha} outside [0, pi/(4n)] for n={n}")


def _g(alpha, n):
    return np.cos(2 * n * alpha) * (np.cos(2 * alpha) + np.sin(2 * alpha)) - 1


@lru_cache(maxsize=None)
def chi(n: int) -> float:
    """Regime-transition angle ``chi_n``.

    ``g`` vanishes trivially at ``alpha = 0``; the bracket starts at
    ``1e-6`` where ``g > 0`` and ends at ``pi/(4n)`` where ``g = -1``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    return float(brentq(_g, 1e-6, np.pi / (4 * n), args=(n,), xtol=1e-16, rtol=8.9e-16,
                        maxiter=500))


def deterministic_fidelity(n: int, alpha: float) -> float:
    """Optimal process fidelity of deterministic retrieval (qubits)."""
    _check_range(n, alpha)
    x = np.sin(2 * alpha) * np.cos(2 * n * alpha)
    return float(0.5 + 0.5 * np.sqrt(max(0.0, 1 - x * x)))


def average_fidelity(f_e: float, d: int) -> float:
    """Average state fidelity from process fidelity."""
    return 1 / (d + 1) + d * f_e / (d + 1)


def small_branch(n: int, alpha: float) -> float:
    """``(1 - c~n^2) / (2 (1 - c~n c~))`` written without cancellation."""
    a, b = 2 * n * alpha, 2 * alpha
    den = np.sin((a - b) / 2) ** 2 + np.sin((a + b) / 2) ** 2
    if den == 0:
        return n * n / (n * n + 1)
    return float(np.sin(a) ** 2 / (2 * den))


def large_branch(n: int, alpha: float) -> float:
    """``1 - c~n s~``."""
    return float(1 - np.cos(2 * n * alpha) * np.sin(2 * alpha))


def regime(n: int, alpha: float) -> Regime:
    _check_range(n, alpha)
    if alpha == 0:
        return Regime.DEGENERATE
    c = chi(n)
    if abs(alpha - c) <= BOUNDARY_TOL:
        return Regime.BOUNDARY
    return Regime.SMALL if alpha < c else Regime.LARGE


def success_probability(n: int, alpha: float) -> tuple[float, Regime]:
    """Optimal success probability of perfect probabilistic retrieval.

    Returns ``(value, regime)``.  At ``alpha = 0`` the small-alpha branch
    is 0/0; its limit ``n^2/(n^2+1)`` is returned with
    ``Regime.DEGENERATE``.
    """
    r = regime(n, alpha)
    if r is Regime.DEGENERATE:
        return n * n / (n * n + 1), r
    if r is Regime.SMALL:
        return small_branch(n, alpha), r
    return large_branch(n, alpha), r


def lambdas(n: int, alpha: float) -> tuple[float, float]:
    """Branch weights ``(lambda_A, lambda_B)`` of the optimal instrument.

    In the small-alpha regime the instrument has a single success branch
    and ``(q, 0)`` is returned.
    """
    r = regime(n, alpha)
    if r in (Regime.SMALL, Regime.DEGENERATE):
        return success_probability(n, alpha)[0], 0.0
    ctn, ct, st = np.cos(2 * n * alpha), np.cos(2 * alpha), np.sin(2 * alpha)
    la = (1 + ctn * (ct - st)) / 2
    lb = (1 - ctn * (ct + st)) / 2
    return float(la), float(max(lb, 0.0))


def asymptotic_success(n: int, alpha: float) -> float:
    """Small-alpha expansion of the success probability through ``alpha^2``."""
    n2 = n * n
    return 1 - 1 / (n2 + 1) + (n2 + 2 * n2**2 - 3 * n2**3) / (3 * (n2 + 1) ** 2) * alpha**2


def usd_success(n: int, alpha: float) -> float:
    """Unambiguous discrimination of the storage states: ``1 - cos(2 n alpha)``.

    This is what a measure-and-prepare strategy achieves.
    """
    _check_range(n, alpha)
    return float(1 - np.cos(2 * n * alpha))


def group_baseline(d: int, n: int, phase_gate: bool = False) -> float:
    """Success probability of optimal retrieval for a fully unknown unitary.

    ``phase_gate=True`` gives the value for an unknown qubit phase gate.
    """
    if d < 2 or n < 1:
        raise ValueError("need d >= 2 and n >= 1")
    if phase_gate:
        return 1 - 1 / (n + 1)
    return 1 - (d * d - 1) / (n + d * d - 1)


def eta_u(n: int, alpha: float) -> float:
    """Weight ``<u|u> = (1 + c~n c~)/2`` of the reduced discrimination problem."""
    return float((1 + np.cos(2 * n * alpha) * np.cos(2 * alpha)) / 2)


# Processor form: beta is the angle between program states, beta = 2 n alpha.

def beta_boundary(alpha: float) -> float:
    """``beta_B(alpha) = arccos(1/(cos 2a + sin 2a))``."""
    s = np.cos(2 * alpha) + np.sin(2 * alpha)
    return float(np.arccos(np.clip(1 / s, -1.0, 1.0)))


def processor_fidelity(alpha: float, beta: float) -> float:
    x = np.sin(2 * alpha) * np.cos(beta)
    return float(0.5 + 0.5 * np.sqrt(max(0.0, 1 - x * x)))


def processor_success(alpha: float, beta: float) -> float:
    """Success probability with program overlap ``cos(beta)``.

    ``alpha = beta = 0`` (identical unitaries and identical programs)
    returns 1, the ``beta -> 0+`` limit at ``alpha = 0``.
    """
    if alpha == 0 and beta == 0:
        return 1.0
    if beta <= beta_boundary(alpha):
        # same cancellation-free form as small_branch
        den = np.sin((beta - 2 * alpha) / 2) ** 2 + np.sin((beta + 2 * alpha) / 2) ** 2
        if den == 0:
            return 1.0
        return float(np.sin(beta) ** 2 / (2 * den))
    return float(1 - np.cos(beta) * np.sin(2 * alpha))


def processor_eta(alpha: float, beta: float) -> tuple[float, float, float]:
    """``(eta_u, eta_v, mu)`` for the reduced problem in processor form."""
    eu = (1 + np.cos(beta) * np.cos(2 * alpha)) / 2
    ev = 1 - eu
    overlap = 0.5 * np.sin(2 * alpha) * np.cos(beta)
    mu = abs(overlap) / np.sqrt(eu * ev) if eu * ev > 0 else 1.0
    return float(eu), float(ev), float(mu)


@dataclass(frozen=True)
class ProcessorPoint:
    alpha: float
    beta: float
    value: float


@dataclass(frozen=True)
class ProtocolReport:
    """All figures of merit at one ``(d, n, alpha)``.

    The deterministic fidelity is known in closed form for qubits only;
    ``F_e`` and ``F_avg`` are ``None`` for ``d > 2``.
    """

    d: int
    n: int
    alpha: float
    F_e: float | None
    F_avg: float | None
    P_succ: float
    lambda_A: float
    lambda_B: float
    regime: Regime
    chi_n: float


def protocol_report(n: int, alpha: float, d: int = 2) -> ProtocolReport:
    p, r = success_probability(n, alpha)
    la, lb = lambdas(n, alpha)
    if d == 2:
        fe = deterministic_fidelity(n, alpha)
        fa = average_fidelity(fe, d)
    else:
        fe = fa = None
    return ProtocolReport(d=d, n=n, alpha=alpha, F_e=fe, F_avg=fa, P_succ=p,
                          lambda_A=la, lambda_B=lb, regime=r, chi_n=chi(n))
