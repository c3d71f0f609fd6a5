"""Small dense complex linear algebra and Choi-operator calculus.

Vectorization convention: for an operator ``A`` mapping ``H_in`` to
``H_out`` (an ``d_out x d_in`` array),

    |A>> = sum_{i,j} A[i, j] |j>_in |i>_out = (I (x) A) |I>>

so the input factor comes first.  Every Choi operator in the package lives
on ``H_in (x) H_out`` in that order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

# Tolerance policy shared across modules.
STRUCT_TOL = 1e-10
ALGEBRA_TOL = 1e-12
OPT_TOL = 1e-6

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def ketbra(a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    b = a if b is None else b
    return np.outer(a, np.conj(b))


def kron(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of operators, left factor outermost."""
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


def is_hermitian(m: np.ndarray, tol: float = STRUCT_TOL) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and np.linalg.norm(m - dag(m), 2) <= tol


def is_unitary(m: np.ndarray, tol: float = STRUCT_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return np.linalg.norm(dag(m) @ m - np.eye(m.shape[0]), 2) <= tol


def is_isometry(m: np.ndarray, tol: float = STRUCT_TOL) -> bool:
    m = np.asarray(m)
    return np.linalg.norm(dag(m) @ m - np.eye(m.shape[1]), 2) <= tol


def min_eig(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((m + dag(m)) / 2)[0])


def is_psd(m: np.ndarray, tol: float = STRUCT_TOL) -> bool:
    return is_hermitian(m, tol) and min_eig(m) >= -tol


def double_ket(a: np.ndarray) -> np.ndarray:
    """Vectorize ``a`` as ``sum A[i, j] |j>|i>`` (input index outermost)."""
    return np.asarray(a).T.reshape(-1)


def from_double_ket(vec: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    """Inverse of :func:`double_ket`."""
    return np.asarray(vec).reshape(d_in, d_out).T


def partial_trace(
    m: np.ndarray, dims: Sequence[int], which: Literal["a", "b"] | int
) -> np.ndarray:
    """Trace out one tensor factor of an operator on ``H_a (x) H_b (x) ...``.

    ``which`` is ``"a"``/``"b"`` for a bipartite split or an integer index
    into ``dims``.
    """
    dims = tuple(int(d) for d in dims)
    m = np.asarray(m)
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise ValueError(f"operator of shape {m.shape} does not match dims {dims}")
    if isinstance(which, str):
        if len(dims) != 2 or which not in ("a", "b"):
            raise ValueError("'a'/'b' selection needs exactly two factors")
        idx = 0 if which == "a" else 1
    else:
        idx = int(which)
        if not 0 <= idx < len(dims):
            raise ValueError(f"factor index {idx} out of range for dims {dims}")
    k = len(dims)
    t = m.reshape(dims + dims)
    t = np.trace(t, axis1=idx, axis2=idx + k)
    rest = int(total // dims[idx])
    return t.reshape(rest, rest)


def choi_of_kraus(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """Choi operator ``sum_k |K_k>><<K_k|`` on ``H_in (x) H_out``."""
    vecs = [double_ket(k) for k in kraus]
    return sum(np.outer(v, np.conj(v)) for v in vecs)


def choi_of_unitary(u: np.ndarray) -> np.ndarray:
    return choi_of_kraus([u])


@dataclass(frozen=True, eq=False)
class ChoiOperator:
    """Choi operator of a CP map, on ``H_in (x) H_out``.

    ``kind="channel"`` requires ``Tr_out C = I``; ``kind="operation"`` only
    ``Tr_out C <= I``.  Validation happens at construction.
    """

    matrix: np.ndarray
    d_in: int
    d_out: int
    kind: Literal["channel", "operation"] = "channel"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        size = self.d_in * self.d_out
        if m.shape != (size, size):
            raise ValueError(f"Choi matrix shape {m.shape} != ({size}, {size})")
        if not is_psd(m):
            raise ValueError("Choi matrix is not positive semidefinite")
        marginal = partial_trace(m, (self.d_in, self.d_out), "b")
        if self.kind == "channel":
            if np.linalg.norm(marginal - np.eye(self.d_in), 2) > STRUCT_TOL:
                raise ValueError("channel Choi is not trace preserving")
        elif self.kind == "operation":
            if min_eig(np.eye(self.d_in) - marginal) < -STRUCT_TOL:
                raise ValueError("operation Choi is trace increasing")
        else:
            raise ValueError(f"unknown kind {self.kind!r}")

    @classmethod
    def from_kraus(cls, kraus, kind="channel") -> "ChoiOperator":
        k0 = np.asarray(kraus[0])
        return cls(choi_of_kraus(kraus), k0.shape[1], k0.shape[0], kind)

    @classmethod
    def from_unitary(cls, u) -> "ChoiOperator":
        u = np.asarray(u)
        return cls(choi_of_unitary(u), u.shape[1], u.shape[0], "channel")

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply_choi(self, rho)


def apply_choi(c: ChoiOperator | np.ndarray, rho: np.ndarray, dims=None) -> np.ndarray:
    """Apply the map with Choi operator ``c`` to ``rho``.

    Implements ``Tr_in[(rho^T (x) I) C]``.  A bare array needs ``dims``.
    """
    if isinstance(c, ChoiOperator):
        m, d_in, d_out = c.matrix, c.d_in, c.d_out
    else:
        if dims is None:
            raise ValueError("dims=(d_in, d_out) required for a raw Choi matrix")
        m = np.asarray(c)
        d_in, d_out = dims
    rho = np.asarray(rho)
    if rho.shape != (d_in, d_in):
        raise ValueError(f"input of shape {rho.shape} for a map with d_in={d_in}")
    t = m.reshape(d_in, d_out, d_in, d_out)
    # out[b, c] = sum_{p, a} rho[p, a] C[p, b, a, c]
    return np.einsum("pa,pbac->bc", rho, t)


def compose_choi(first: ChoiOperator, second: ChoiOperator) -> ChoiOperator:
    """Choi operator of ``second o first`` (link product)."""
    if first.d_out != second.d_in:
        raise ValueError("dimension mismatch in composition")
    a, b, c = first.d_in, first.d_out, second.d_out
    t1 = first.matrix.reshape(a, b, a, b)
    t2 = second.matrix.reshape(b, c, b, c)
    # E2(E1(|x><X|)) expanded through both Choi operators
    out = np.einsum("xyXY,yzYZ->xzXZ", t1, t2).reshape(a * c, a * c)
    kind = "channel" if first.kind == second.kind == "channel" else "operation"
    return ChoiOperator(out, a, c, kind)


def _sqrt_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + dag(m)) / 2)
    return (v * np.sqrt(np.clip(w, 0, None))) @ dag(v)


def state_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``.

    Accepts state vectors or density matrices for either argument.
    """
    rho, sigma = np.asarray(rho), np.asarray(sigma)
    if rho.ndim == 1 and sigma.ndim == 1:
        return float(abs(np.vdot(rho, sigma)) ** 2)
    if rho.ndim == 1:
        rho, sigma = sigma, rho
    if sigma.ndim == 1:
        if not is_psd(rho):
            raise ValueError("density matrix is not PSD")
        return float(np.real(np.vdot(sigma, rho @ sigma)))
    for m in (rho, sigma):
        if not is_psd(m):
            raise ValueError("density matrix is not PSD")
    s = _sqrt_psd(rho)
    inner = _sqrt_psd(s @ sigma @ s)
    return float(min(1.0, max(0.0, np.real(np.trace(inner)) ** 2)))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_random_state(d: int, seed=None) -> np.ndarray:
    """Haar-distributed unit vector in ``C^d`` (normalized complex Gaussian)."""
    if d < 1:
        raise ValueError("dimension must be positive")
    rng = _rng(seed)
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)


def haar_random_states(d: int, count: int, seed=None) -> np.ndarray:
    """``count`` Haar states as rows of a ``(count, d)`` array."""
    rng = _rng(seed)
    z = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def haar_random_unitary(d: int, seed=None) -> np.ndarray:
    """Haar unitary via QR of a Ginibre matrix with the R-diagonal phases fixed."""
    rng = _rng(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_psd(d: int, seed=None, max_norm: float = 1.0) -> np.ndarray:
    """Ginibre-based PSD matrix scaled to a uniformly drawn operator norm."""
    rng = _rng(seed)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = g @ dag(g)
    return m / np.linalg.norm(m, 2) * rng.uniform(0, max_norm)


def project_psd(m: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped)."""
    w, v = np.linalg.eigh((m + dag(m)) / 2)
    return (v * np.clip(w, 0, None)) @ dag(v)
