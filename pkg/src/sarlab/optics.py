"""Jones-calculus model of the polarization POVM block and its angle compiler.

Modes: the input is a polarization qubit ``(H, V)``.  Inside the block a
calcite splits it into two spatial paths, giving four modes
``(upH, upV, downH, downV)``.  Three of them reach detectors:

    D0 = upH,  D1 = upV,  D2 = downV.

The block implements

    C = W~(Delta, pi) W~(q2, pi/2) D2 [X on up ; W(Gamma, pi) on down] D1
        W(q1, pi/2) W(B, pi)

and is preceded by a Hadamard, so the qubit-to-qutrit map realized on the
polarization state is ``C H``.  Each output mode goes to its own detector,
so a phase per output row is unobservable; comparisons with a target are
made after removing those row phases.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .analytics import Regime
from .circuits import CNOT, build_isometry_M
from .linalg import HADAMARD, SX

DETECTORS = ("D0", "D1", "D2")
ISOMETRY_TOL = 1e-8


def linear_state(x: float) -> np.ndarray:
    """``|L_x> = cos x |H> + sin x |V>``."""
    return np.array([np.cos(x), np.sin(x)])


@dataclass(frozen=True)
class WavePlate:
    """Wave plate with fast axis at ``x`` and retardance ``y``."""

    x: float
    y: float

    @property
    def jones(self) -> np.ndarray:
        a, b = linear_state(self.x), linear_state(self.x + np.pi / 2)
        return np.outer(a, a) + np.exp(-1j * self.y) * np.outer(b, b)


def wave_plate(x: float, y: float) -> np.ndarray:
    return WavePlate(x, y).jones


def half_wave(x: float) -> np.ndarray:
    return wave_plate(x, np.pi)


def quarter_wave(x: float) -> np.ndarray:
    return wave_plate(x, np.pi / 2)


def upper(m: np.ndarray) -> np.ndarray:
    """Act with a 2x2 Jones matrix on the upper path (D0, D1) only."""
    out = np.eye(3, dtype=complex)
    out[:2, :2] = m
    return out


# calcite displacers
CALCITE_1 = np.zeros((4, 2))
CALCITE_1[0, 0] = 1  # H -> upH
CALCITE_1[3, 1] = 1  # V -> downV
CALCITE_2 = np.zeros((3, 4))
CALCITE_2[1, 1] = 1  # upV   -> D1
CALCITE_2[0, 2] = 1  # downH -> D0 path (upH)
CALCITE_2[2, 3] = 1  # downV -> D2


def transfer_matrix(B: float, Gamma: float, Delta: float, q1: float = 0.0,
                    q2: float = 0.0) -> np.ndarray:
    """3x2 transfer matrix ``C`` of the block for the given plate angles."""
    mid = np.zeros((4, 4), dtype=complex)
    mid[:2, :2] = SX
    mid[2:, 2:] = half_wave(Gamma)
    return (upper(half_wave(Delta)) @ upper(quarter_wave(q2)) @ CALCITE_2 @ mid
            @ CALCITE_1 @ quarter_wave(q1) @ half_wave(B))


def align_rows(c: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Remove the per-row phase of ``c`` relative to ``k``."""
    out = np.array(c, dtype=complex)
    for j in range(out.shape[0]):
        z = np.vdot(k[j], out[j])
        if abs(z) > 0:
            out[j] *= np.conj(z) / abs(z)
    return out


def aligned_residual(c: np.ndarray, k: np.ndarray) -> float:
    return float(np.linalg.norm(align_rows(c, k) - k))


# ------------------------------------------------------------------- targets

def alpha_t(n: int) -> float:
    """Transition angle from ``cos(2 n a) cos(2 a - pi/4) = sqrt(2)/2``."""
    f = lambda a: np.cos(2 * n * a) * np.cos(2 * a - np.pi / 4) - np.sqrt(2) / 2  # noqa: E731
    return float(brentq(f, 1e-6, np.pi / (4 * n), xtol=1e-16, rtol=8.9e-16, maxiter=500))


def target_k(n: int, alpha: float) -> tuple[np.ndarray, Regime]:
    """``K = M H^dag`` from the retrieval isometry; real 3x2."""
    m = build_isometry_M(n, alpha)
    return np.real_if_close(m.matrix @ HADAMARD.conj().T, tol=1000).real, m.regime


def printed_k(n: int, alpha: float) -> np.ndarray:
    """Coefficient table transcribed as printed for the large-alpha regime.

    Kept for comparison with :func:`target_k`; it contains
    ``cos(a) - sin(a)`` in ``lambda_a`` and ``-sqrt(nu_p)`` in ``k32``.
    """
    cn, sn = np.cos(n * alpha), np.sin(n * alpha)
    c, s = np.cos(alpha), np.sin(alpha)
    ctn = np.cos(2 * n * alpha)
    la = (1 + ctn * (c - s)) / 2
    lb = (1 - ctn * (c + s)) / 2
    nu_p, _ = printed_nu(n, alpha)
    return np.array([
        [np.sqrt(la) * c / cn, np.sqrt(la) * s / sn],
        [np.sqrt(max(lb, 0)) * s / cn, -np.sqrt(max(lb, 0)) * c / sn],
        [np.sqrt(nu_p), -np.sqrt(nu_p)],
    ])


def printed_nu(n: int, alpha: float) -> tuple[float, float]:
    ct, st = np.cos(2 * alpha), np.sin(2 * alpha)
    ctn = np.cos(2 * n * alpha)
    nu_p = (1 - ct**2 + st) * ctn / (1 + ctn)
    nu_n = (-1 + ct**2 + st) * ctn / (1 - ctn)
    return float(nu_p), float(nu_n)


# ------------------------------------------------------------------ compiler

@dataclass(frozen=True, eq=False)
class PovmCompilation:
    n: int
    alpha: float
    B: float
    Gamma: float
    Delta: float
    mode: str  # isometry_small, isometry_large, usd
    K_matrix: np.ndarray | None
    C_matrix: np.ndarray
    q1: float = 0.0
    q2: float = 0.0
    residual_norm: float = 0.0

    def realized(self) -> np.ndarray:
        """Map realized on the polarization qubit: ``C H``."""
        return self.C_matrix @ HADAMARD


def solve_angles(k: np.ndarray) -> tuple[float, float, float]:
    """Half-wave angles ``(B, Gamma, Delta)`` with ``C = diag(phases) K``.

    ``K`` must be a real 3x2 isometry.  With both quarter-wave plates at 0
    the block maps ``h = (cos 2B, sin 2B)`` to the upper path and
    ``v = (sin 2B, -cos 2B)`` to the lower path.  ``B`` is fixed by the row
    of D2, which only the lower path reaches; ``Delta`` rotates the upper
    column onto ``K h``; ``Gamma`` splits the lower path between D0/D1 and D2.
    """
    k = np.asarray(k, dtype=float)
    k3 = k[2]
    two_b = np.arctan2(-k3[0], k3[1]) if np.linalg.norm(k3) > 1e-15 else 0.0
    h = np.array([np.cos(two_b), np.sin(two_b)])
    v = np.array([np.sin(two_b), -np.cos(two_b)])
    f0, f1 = k @ h, k @ v
    two_d = np.arctan2(f0[0], -f0[1])
    s_g = f1[0] * np.cos(two_d) + f1[1] * np.sin(two_d)
    two_g = np.arctan2(s_g, f1[2])
    return float(two_b / 2), float(two_g / 2), float(two_d / 2)


def printed_angles(k: np.ndarray) -> tuple[float, float, float, bool]:
    """Closed-form angle recipe as printed; arcsin arguments are clamped.

    Returns ``(B, Gamma, Delta, clamped)``.
    """
    k = np.asarray(k, dtype=float)
    beta = np.arctan(k[2, 1] / k[2, 0]) if k[2, 0] != 0 else np.pi / 2
    clamped = False
    g_arg = -k[2, 0] / np.cos(beta)
    if abs(g_arg) > 1:
        clamped = True
    gamma = np.arcsin(np.clip(g_arg, -1, 1))
    den = np.sin(beta) * np.sin(gamma) ** 2
    d_arg = -(k[1, 1] * np.cos(gamma) + k[0, 0]) / den if den != 0 else np.inf
    if not abs(d_arg) <= 1:
        clamped = True
    delta = np.arcsin(np.clip(d_arg, -1, 1))
    return (float(np.pi / 4 + beta / 4), float(np.pi / 4 - beta / 2), float(delta / 2),
            clamped)


def fold_angle(x: float, period: float) -> float:
    """Fold ``x`` into ``(-period/2, period/2]``."""
    return float(period / 2 - np.mod(period / 2 - x, period))


def fold_angles(b: float, g: float, d: float) -> tuple[float, float, float]:
    """Reduce plate angles by their observable periods.

    ``W(x + pi/2, pi) = -W(x, pi)``.  For ``B`` the sign is global and for
    ``Delta`` it multiplies the D0/D1 rows only, so both fold modulo
    ``pi/2``.  ``Gamma`` sits on one arm of the interferometer, where the
    sign is a relative phase, so it folds modulo ``pi`` only.
    """
    return fold_angle(b, np.pi / 2), fold_angle(g, np.pi), fold_angle(d, np.pi / 2)


def compile_angles(n: int, alpha: float, method: str = "solve") -> PovmCompilation:
    """Plate angles realizing the retrieval isometry ``M`` as ``C H``.

    ``method="solve"`` uses :func:`solve_angles`; ``method="printed"``
    uses :func:`printed_angles`.  The residual ``||C - K||`` (after row-phase
    alignment) is always recorded, never raised on.
    """
    k, reg = target_k(n, alpha)
    if method == "solve":
        b, g, d = fold_angles(*solve_angles(k))
    elif method == "printed":
        b, g, d, _ = printed_angles(k)
    else:
        raise ValueError(f"unknown method {method!r}")
    c = transfer_matrix(b, g, d)
    mode = "isometry_large" if reg is Regime.LARGE else "isometry_small"
    return PovmCompilation(n, alpha, b, g, d, mode, k, c, 0.0, 0.0, aligned_residual(c, k))


def compile_usd(alpha: float, n: int = 1) -> PovmCompilation:
    """Unambiguous discrimination of ``(|0> + e^{-+ 2 i n alpha}|1>)/sqrt(2)``.

    ``B = pi/4``, ``Gamma = arcsin(tan(n |alpha|))/2``, ``Delta = -pi/8``,
    quarter-wave plates at 0 and ``pi/4``.  The state with ``e^{-2 i n
    alpha}`` (storage state of ``U_0``) clicks D0, the other D1, and D2 is
    inconclusive.  At ``n alpha = pi/4`` the states are orthogonal and
    the inconclusive port is dark.
    """
    t = np.tan(n * abs(alpha))
    if t > 1 + 1e-12:
        raise ValueError("tan(n |alpha|) must not exceed 1")
    b, g, d = np.pi / 4, 0.5 * np.arcsin(min(t, 1.0)), -np.pi / 8
    c = transfer_matrix(b, g, d, 0.0, np.pi / 4)
    return PovmCompilation(n, alpha, b, g, d, "usd", None, c, 0.0, np.pi / 4, 0.0)


def simulate_optical_block(comp: PovmCompilation, state: np.ndarray) -> np.ndarray:
    """Detector probabilities ``(D0, D1, D2)`` for a polarization state.

    ``state`` is a ket or a density matrix of the qubit entering the
    Hadamard in front of the block.
    """
    t = comp.realized()
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.abs(t @ state) ** 2
    return np.real(np.diag(t @ state @ t.conj().T))


def end_to_end_probabilities(comp: PovmCompilation, storage: np.ndarray,
                             xi: np.ndarray) -> np.ndarray:
    """Outcome probabilities after CNOT(storage, input) and the optical POVM."""
    joint = CNOT @ np.kron(storage, xi)
    amp = np.kron(comp.realized(), np.eye(2)) @ joint
    return np.sum(np.abs(amp.reshape(3, 2)) ** 2, axis=1)


# ------------------------------------------------------------------ table IO

ANGLE_COLUMNS = ("n", "alpha", "regime", "B", "Gamma", "Delta", "residual_norm")


def angle_table(comps) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ANGLE_COLUMNS)
    for c in comps:
        w.writerow([c.n, f"{c.alpha:.12f}", c.mode, f"{c.B:.12f}", f"{c.Gamma:.12f}",
                    f"{c.Delta:.12f}", f"{c.residual_norm:.12f}"])
    return buf.getvalue()
