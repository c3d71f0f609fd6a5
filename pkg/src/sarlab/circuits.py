"""Exact simulation of the retrieval protocols.

* the qubit probabilistic circuit: CNOT, a qubit-to-qutrit isometry ``M``
  and a qutrit measurement whose outcome 1 is corrected by ``sigma_z``;
* the measure-and-prepare deterministic protocol;
* the qudit isometry ``G`` achieving the qubit success probability in any
  dimension.

Everything is expressed in the canonical basis of the pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import analytics
from .analytics import Regime
from .canonical import CanonicalPair, plus_state, storage_state
from .linalg import (
    I2,
    KET_MINUS,
    KET_PLUS,
    STRUCT_TOL,
    SX,
    SZ,
    ChoiOperator,
    choi_of_kraus,
    dag,
    double_ket,
    is_isometry,
    ketbra,
)
from .oracle import helstrom, reduced_problem

# storage qubit first (target), retrieval input second (control)
CNOT = np.kron(I2, ketbra([1, 0])) + np.kron(SX, ketbra([0, 1]))
CZ = np.diag([1, 1, 1, -1]).astype(complex)

KET_UP = (KET_PLUS + 1j * KET_MINUS) / np.sqrt(2)
KET_DOWN = (KET_PLUS - 1j * KET_MINUS) / np.sqrt(2)

FEASIBILITY_TOL = 1e-12


NU_FLUSH = 1e-14


def _check_alpha(n, alpha):
    if n < 1 or not 0 < 4 * n * alpha <= np.pi + 1e-12:
        raise ValueError(f"need 0 < 4 n alpha <= pi, got n={n}, alpha={alpha}")


def _large(n, alpha) -> bool:
    return analytics.regime(n, alpha) in (Regime.LARGE, Regime.BOUNDARY)


# ------------------------------------------------------------ qubit circuit

@dataclass(frozen=True, eq=False)
class QutritIsometryM:
    matrix: np.ndarray
    regime: Regime
    coefficients: dict = field(default_factory=dict)


def build_isometry_M(n: int, alpha: float) -> QutritIsometryM:
    """Isometry ``M = |a1><+| + |a2><-|`` from the storage qubit to a qutrit.

    Large alpha::

        a1 = ( sqrt(lA) c/c_n,  sqrt(lB) s/c_n,  sqrt(nu+))
        a2 = ( sqrt(lA) s/s_n, -sqrt(lB) c/s_n, -sqrt(nu-))

    Small alpha: ``a1 = (sqrt(a), 0, sqrt(b))``, ``a2 = (sqrt(b), 0, -sqrt(a))``
    with ``a + b = 1``.
    """
    _check_alpha(n, alpha)
    cn, sn = np.cos(n * alpha), np.sin(n * alpha)
    c, s = np.cos(alpha), np.sin(alpha)
    ctn, ct, st = np.cos(2 * n * alpha), np.cos(2 * alpha), np.sin(2 * alpha)
    if _large(n, alpha):
        la, lb = analytics.lambdas(n, alpha)
        nu_p = ctn * (1 - ct**2 + st) / (1 + ctn)
        nu_m = ctn * (ct**2 - 1 + st) / (1 - ctn)
        # rounding leaves |nu| ~ 1e-16 at the seam and at 4 n alpha = pi,
        # which the square root would inflate to ~1e-8
        nu_p = nu_p if nu_p > NU_FLUSH else 0.0
        nu_m = nu_m if nu_m > NU_FLUSH else 0.0
        a1 = np.array([np.sqrt(la) * c / cn, np.sqrt(lb) * s / cn, np.sqrt(nu_p)])
        a2 = np.array([np.sqrt(la) * s / sn, -np.sqrt(lb) * c / sn, -np.sqrt(nu_m)])
        coef = {"lambda_A": la, "lambda_B": lb, "nu_plus": nu_p, "nu_minus": nu_m}
        reg = Regime.LARGE
    else:
        den = np.sin(n * alpha - alpha) ** 2 + np.sin(n * alpha + alpha) ** 2
        a = 2 * c**2 * sn**2 / den
        b = 2 * s**2 * cn**2 / den
        a1 = np.array([np.sqrt(a), 0.0, np.sqrt(b)])
        a2 = np.array([np.sqrt(b), 0.0, -np.sqrt(a)])
        coef = {"a": a, "b": b}
        reg = Regime.SMALL
    m = np.outer(a1, KET_PLUS.conj()) + np.outer(a2, KET_MINUS.conj())
    return QutritIsometryM(m.astype(complex), reg, coef)


def branch_maps(n: int, alpha: float) -> dict[str, np.ndarray]:
    """Instrument branches as ``2 x 4`` maps from storage (x) input to output.

    Outcome 1 already carries the ``sigma_z`` correction.
    """
    m = build_isometry_M(n, alpha).matrix
    full = np.kron(m, I2) @ CNOT  # (3*2) x (2*2)
    t = full.reshape(3, 2, 4)
    return {"success_0": t[0], "success_1_corrected": SZ @ t[1], "fail": t[2]}


def _fix_phase(k: np.ndarray, u: np.ndarray) -> np.ndarray:
    z = np.trace(dag(k) @ u)
    if abs(z) < 1e-300:
        return k
    return k * (z / abs(z))


@dataclass(frozen=True, eq=False)
class RetrievalInstrument:
    """Three-outcome instrument acting on the retrieval input.

    Success Kraus operators have their phase fixed so that ``Tr(K^dag U)``
    is real and nonnegative.
    """

    branches: list
    n: int
    alpha: float
    which: int
    regime: Regime

    def kraus(self, label: str) -> np.ndarray:
        for lab, k in self.branches:
            if lab == label:
                return k
        raise KeyError(label)

    @property
    def success_kraus(self) -> list[np.ndarray]:
        return [k for lab, k in self.branches if lab != "fail"]

    def completeness_residual(self) -> float:
        tot = sum(dag(k) @ k for _, k in self.branches)
        return float(np.linalg.norm(tot - np.eye(tot.shape[0]), 2))

    def probability(self, label: str, xi: np.ndarray) -> float:
        k = self.kraus(label)
        xi = np.asarray(xi, dtype=complex)
        if xi.ndim == 1:
            return float(np.real(np.vdot(k @ xi, k @ xi)))
        return float(np.real(np.trace(k @ xi @ dag(k))))


def simulate_qubit_retrieval(p: CanonicalPair, which: int) -> RetrievalInstrument:
    """Feed ``|psi_{n,which}>`` into the circuit and read off the instrument."""
    if p.d != 2:
        raise ValueError("qubit pair required")
    maps = branch_maps(p.n, p.alpha)
    psi = storage_state(p, which)
    u = p.unitary(which)
    branches = []
    for label, k in maps.items():
        kk = k.reshape(2, 2, 2)  # out, storage, input
        kr = np.einsum("osi,s->oi", kk, psi)
        if label != "fail":
            kr = _fix_phase(kr, u)
        branches.append((label, kr))
    reg = build_isometry_M(p.n, p.alpha).regime
    return RetrievalInstrument(branches, p.n, p.alpha, which, reg)


def success_choi(n: int, alpha: float) -> np.ndarray:
    """8x8 Choi of the success operation on ``H0 (x) H1 -> H2``."""
    maps = branch_maps(n, alpha)
    return choi_of_kraus([maps["success_0"], maps["success_1_corrected"]])


def phase_residual(k: np.ndarray, u: np.ndarray) -> float:
    """``1 - |Tr(K^dag U)| / (sqrt(lambda) d)`` with ``lambda = Tr(K^dag K)/d``."""
    d = u.shape[0]
    lam = np.real(np.trace(dag(k) @ k)) / d
    if lam <= 0:
        return 0.0
    return float(abs(1 - abs(np.trace(dag(k) @ u)) / (np.sqrt(lam) * d)))


# ----------------------------------------------------- deterministic protocol

@dataclass(frozen=True, eq=False)
class DeterministicRetrieval:
    choi_0: ChoiOperator
    choi_1: ChoiOperator
    F_e_achieved: float
    a: float
    b: float
    p_up: tuple[float, float]


def _prepared_unitaries(a: float, b: float):
    return a * I2 + 1j * b * SZ, a * I2 - 1j * b * SZ


def _helstrom_ab(p: CanonicalPair) -> tuple[float, float]:
    _, phi = helstrom(reduced_problem(p))
    a, b = float(np.real(phi[0])), float(np.real(phi[1]))
    if a < 0:
        a, b = -a, -b
    return a, b


def simulate_deterministic_retrieval(p: CanonicalPair) -> DeterministicRetrieval:
    """Measure-and-prepare retrieval.

    The storage state is measured in ``{|up>, |down>}`` with
    ``|up/down> = (|+> +- i|->)/sqrt(2)``; outcome up prepares
    ``U_{+A} = a I + i b Z`` and down prepares ``U_{-A} = a I - i b Z``.
    ``(a, b)`` is the minimum-error solution of the reduced problem.
    """
    if p.d != 2:
        raise ValueError("qubit pair required")
    a, b = _helstrom_ab(p)
    up_u, down_u = _prepared_unitaries(a, b)
    chois, pups, fid = [], [], 0.0
    for i in (0, 1):
        psi = storage_state(p, i)
        pu = abs(np.vdot(KET_UP, psi)) ** 2
        pd = abs(np.vdot(KET_DOWN, psi)) ** 2
        m = pu * choi_of_kraus([up_u]) + pd * choi_of_kraus([down_u])
        ch = ChoiOperator(m, 2, 2)
        ku = double_ket(p.unitary(i))
        fid += np.real(ku.conj() @ m @ ku) / 8
        chois.append(ch)
        pups.append(float(pu))
    return DeterministicRetrieval(chois[0], chois[1], float(fid), a, b, tuple(pups))


def deterministic_dilation(p: CanonicalPair) -> dict:
    """Unitary dilation ``CZ (M (x) I) CNOT`` of the deterministic protocol.

    ``M = |a1><+| + |a2><-|`` with ``a1 = (a, -b)``, ``a2 = (b, a)``.
    Returns, for each stored unitary, the two conditional Kraus operators
    (ancilla outcome 0 and 1) on the retrieval input.
    """
    a, b = _helstrom_ab(p)
    m = np.outer([a, -b], KET_PLUS.conj()) + np.outer([b, a], KET_MINUS.conj())
    g = CZ @ np.kron(m, I2) @ CNOT
    out = {}
    for i in (0, 1):
        psi = storage_state(p, i)
        t = g.reshape(2, 2, 2, 2)  # anc, out, storage, input
        out[i] = [np.einsum("osi,s->oi", t[j], psi) for j in (0, 1)]
    out["a"], out["b"] = a, b
    out["p"] = a * a * np.cos(p.n * p.alpha) ** 2 + b * b * np.sin(p.n * p.alpha) ** 2
    return out


def deterministic_choi(p: CanonicalPair) -> np.ndarray:
    """8x8 Choi of the deterministic retrieval on ``H0 (x) H1 -> H2``."""
    a, b = _helstrom_ab(p)
    up_u, down_u = _prepared_unitaries(a, b)
    k_up = np.kron(KET_UP.conj()[None, :], up_u)
    k_down = np.kron(KET_DOWN.conj()[None, :], down_u)
    return choi_of_kraus([k_up, k_down])


# ------------------------------------------------------------ qudit isometry

@dataclass(frozen=True, eq=False)
class QuditIsometryG:
    """Isometry from ``H1 (x) span{|0>, |d-1>}`` to ``H2 (x) H3 (x) H4``.

    ``H2`` is the output (dimension d), ``H3`` a qubit ancilla carrying
    ``|phi_i>`` or ``|eta_{i,k}>``, ``H4`` the success/fail flag.  Input
    basis is ``|k> (x) |s>`` with ``s`` indexing ``(|0>, |d-1>)``.
    """

    d: int
    n: int
    alpha: float
    x: complex
    y_diag: np.ndarray
    betas_i: np.ndarray  # shape (d, 2): beta_{k,i}
    P_succ: float
    matrix: np.ndarray
    regime: Regime

    def storage_coordinates(self, which: int) -> np.ndarray:
        e = np.exp(1j * self.n * self.alpha)
        v = np.array([e, e.conjugate()]) / np.sqrt(2)
        return v if which == 0 else v.conj()

    def branch_kraus(self, which: int) -> dict[str, list[np.ndarray]]:
        """Kraus operators on the input for stored unitary ``which``."""
        t = self.matrix.reshape(self.d, 2, 2, self.d, 2)  # out, anc, flag, in, storage
        k = np.einsum("oafis,s->oafi", t, self.storage_coordinates(which))
        return {"success": [k[:, j, 0, :] for j in (0, 1)],
                "fail": [k[:, j, 1, :] for j in (0, 1)]}

    def overlap_residuals(self) -> np.ndarray:
        """``|P zeta_k x + (1 - P) y_k - cos(2 n alpha)|`` for each ``k``."""
        zeta = np.exp(1j * (self.betas_i[:, 1] - self.betas_i[:, 0]))
        lhs = np.cos(2 * self.n * self.alpha)
        rhs = self.P_succ * zeta * self.x + (1 - self.P_succ) * self.y_diag
        return np.abs(rhs - lhs)


def _embed(overlap: complex) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors in C^2 with ``<first|second> = overlap``."""
    r = abs(overlap)
    if r > 1 + FEASIBILITY_TOL:
        raise ValueError(f"infeasible overlap |{overlap}| > 1")
    return (np.array([1.0, 0.0], dtype=complex),
            np.array([overlap, np.sqrt(max(0.0, 1 - r * r))], dtype=complex))


def build_qudit_isometry(p: CanonicalPair) -> QuditIsometryG:
    """Explicit isometry achieving the qubit success probability in dimension d.

    ``G |k>|psi_i> = sqrt(P) e^{i beta_{k,i}} |k>|phi_i>|0>
    + sqrt(1-P) |k>|eta_{i,k}>|1>`` with ``<phi_0|phi_1> = x`` and
    ``<eta_{0,k}|eta_{1,k}> = y_k``; the pair ``(x, y_k)`` solves
    ``cos(2 n alpha) = P zeta_k x + (1 - P) y_k``.
    """
    n, alpha, d = p.n, p.alpha, p.d
    _check_alpha(n, alpha)
    ctn, ct, st = np.cos(2 * n * alpha), np.cos(2 * alpha), np.sin(2 * alpha)
    psucc, reg = analytics.success_probability(n, alpha)
    betas = np.empty((d, 2))
    betas[:, 0] = p.phases
    betas[:, 1] = -p.phases
    zeta = np.exp(1j * (betas[:, 1] - betas[:, 0]))
    if reg in (Regime.LARGE, Regime.BOUNDARY):
        x = ctn * ct / (1 - ctn * st)
        y = (1 - ct * zeta) / st
        reg = Regime.LARGE
    else:
        x = 1.0
        y = (ctn - psucc * zeta) / (1 - psucc)
    if abs(x) > 1 + FEASIBILITY_TOL or np.any(np.abs(y) > 1 + FEASIBILITY_TOL):
        raise ValueError("infeasible overlaps in qudit isometry")

    phi = _embed(x)
    targets = np.zeros((d * 2 * 2, d * 2), dtype=complex)
    basis = np.zeros((d * 2, d * 2), dtype=complex)
    e = np.exp(1j * n * alpha)
    coords = [np.array([e, np.conj(e)]) / np.sqrt(2), np.array([np.conj(e), e]) / np.sqrt(2)]
    for k in range(d):
        eta = _embed(y[k])
        ek = np.zeros(d)
        ek[k] = 1
        for i in (0, 1):
            col = 2 * k + i
            basis[:, col] = np.kron(ek, coords[i])
            targets[:, col] = (np.sqrt(psucc) * np.exp(1j * betas[k, i])
                               * np.kron(np.kron(ek, phi[i]), [1, 0])
                               + np.sqrt(1 - psucc) * np.kron(np.kron(ek, eta[i]), [0, 1]))
    g = targets @ np.linalg.inv(basis)
    return QuditIsometryG(d, n, alpha, complex(x), np.asarray(y, dtype=complex), betas,
                          float(psucc), g, reg)


# ------------------------------------------------------------------ channels

def retrieved_channel_on_success(instr, which: int) -> ChoiOperator:
    """Normalized success-branch channel for stored unitary ``which``."""
    if isinstance(instr, QuditIsometryG):
        kraus = instr.branch_kraus(which)["success"]
    else:
        if instr.which != which:
            raise ValueError("instrument was built for the other stored unitary")
        kraus = instr.success_kraus
    m = choi_of_kraus(kraus)
    d = kraus[0].shape[1]
    prob = np.real(np.trace(m)) / d
    if prob <= 1e-15:
        raise ValueError("zero success probability")
    return ChoiOperator(m / prob, d, d)


def process_fidelity(ch: ChoiOperator, u: np.ndarray) -> float:
    ku = double_ket(u)
    d = u.shape[0]
    return float(np.real(ku.conj() @ ch.matrix @ ku) / d**2)


# ----------------------------------------------------------------- JSON dump

def _enc(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _dec(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def instrument_to_dict(instr: RetrievalInstrument) -> dict:
    return {
        "n": instr.n,
        "alpha": instr.alpha,
        "which": instr.which,
        "regime": instr.regime.value,
        "branches": [
            {"label": lab, "kraus": _enc(k),
             "success_probability": float(np.real(np.trace(dag(k) @ k)) / k.shape[1])}
            for lab, k in instr.branches
        ],
    }


def instrument_to_json(instr: RetrievalInstrument) -> str:
    return json.dumps(instrument_to_dict(instr), sort_keys=True, indent=2)


def instrument_from_json(text: str) -> RetrievalInstrument:
    obj = json.loads(text)
    branches = [(b["label"], _dec(b["kraus"])) for b in obj["branches"]]
    return RetrievalInstrument(branches, obj["n"], obj["alpha"], obj["which"],
                               Regime(obj["regime"]))


__all__ = [
    "CNOT",
    "DeterministicRetrieval",
    "QuditIsometryG",
    "QutritIsometryM",
    "RetrievalInstrument",
    "branch_maps",
    "build_isometry_M",
    "build_qudit_isometry",
    "deterministic_choi",
    "deterministic_dilation",
    "instrument_from_json",
    "instrument_to_json",
    "phase_residual",
    "process_fidelity",
    "retrieved_channel_on_success",
    "simulate_deterministic_retrieval",
    "simulate_qubit_retrieval",
    "success_choi",
    "plus_state",
    "STRUCT_TOL",
    "is_isometry",
]
