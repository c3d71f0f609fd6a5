"""Normal form of a pair of unitaries and the optimal storage states.

Any pair ``(U0, U1)`` can be mapped, by fixed pre/post-processing unitaries
``V``, ``W`` and a global phase, to

    U0 = diag(e^{i alpha}, e^{i beta_1}, ..., e^{i beta_{d-2}}, e^{-i alpha})
    U1 = conj(U0)

where ``4 alpha`` is the length of the shortest arc of the unit circle that
contains the spectrum of ``U1^dag U0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .linalg import STRUCT_TOL, is_unitary

DEGENERATE_TOL = 1e-12


def eigenphases(u: np.ndarray) -> np.ndarray:
    """Eigenphases of a unitary, branch ``(-pi, pi]``."""
    w = np.linalg.eigvals(u)
    ph = np.angle(w)
    ph[ph <= -np.pi] += 2 * np.pi
    return ph


def covering_arc(phases) -> tuple[float, float]:
    """Shortest arc containing all given angles: ``(start, length)``.

    Largest-gap method: after a circular sort, the arc is the complement
    of the widest gap between neighbours.  Ties go to the first gap.
    """
    ph = np.sort(np.mod(np.asarray(phases, dtype=float), 2 * np.pi))
    if ph.size == 0:
        raise ValueError("no phases given")
    gaps = np.diff(np.concatenate([ph, [ph[0] + 2 * np.pi]]))
    k = int(np.argmax(gaps))
    start = ph[(k + 1) % ph.size]
    length = 2 * np.pi - gaps[k]
    if length < 0:
        length = 0.0
    return float(start), float(length)


def spread_angle(u0: np.ndarray, u1: np.ndarray) -> float:
    """``alpha`` = quarter of the covering-arc length of the spectrum of U1^dag U0."""
    _, length = covering_arc(eigenphases(u1.conj().T @ u0))
    return length / 4


@dataclass(frozen=True, eq=False)
class CanonicalPair:
    """A unitary pair in normal form plus the conjugation that produced it.

    The reconstruction identities are

        exp(+i*global_phase) W @ U0_orig @ V == canonical_u0
        exp(-i*global_phase) W @ U1_orig @ V == canonical_u1

    (a phase of opposite sign on each member, which is what makes the two
    canonical unitaries exact complex conjugates).
    """

    d: int
    n: int
    alpha: float
    betas: tuple[float, ...] = ()
    V: np.ndarray = field(default=None, repr=False)
    W: np.ndarray = field(default=None, repr=False)
    global_phase: float = 0.0

    def __post_init__(self):
        if len(self.betas) != self.d - 2:
            raise ValueError(f"need {self.d - 2} interior phases, got {len(self.betas)}")
        eye = np.eye(self.d, dtype=complex)
        if self.V is None:
            object.__setattr__(self, "V", eye)
        if self.W is None:
            object.__setattr__(self, "W", eye)

    @classmethod
    def from_alpha(cls, n: int, alpha: float, d: int = 2, betas=None) -> "CanonicalPair":
        """Pair already in normal form (``V = W = I``)."""
        if betas is None:
            betas = np.zeros(d - 2)
        return cls(d=d, n=int(n), alpha=float(alpha), betas=tuple(float(b) for b in betas))

    @property
    def phases(self) -> np.ndarray:
        """Eigenphases of the canonical ``U0`` in basis order."""
        return np.array([self.alpha, *self.betas, -self.alpha])

    @property
    def canonical_u0(self) -> np.ndarray:
        return np.diag(np.exp(1j * self.phases))

    @property
    def canonical_u1(self) -> np.ndarray:
        return np.diag(np.exp(-1j * self.phases))

    def unitary(self, which: int) -> np.ndarray:
        return self.canonical_u0 if which == 0 else self.canonical_u1

    @property
    def perfectly_distinguishable(self) -> bool:
        return 4 * self.n * self.alpha >= np.pi - 1e-14

    @property
    def degenerate(self) -> bool:
        return self.alpha < DEGENERATE_TOL

    def with_n(self, n: int) -> "CanonicalPair":
        return CanonicalPair(self.d, int(n), self.alpha, self.betas, self.V, self.W,
                             self.global_phase)


def canonicalize(u0: np.ndarray, u1: np.ndarray, n: int = 1) -> CanonicalPair:
    """Bring ``(u0, u1)`` to normal form.

    ``V = U0^dag P`` and ``W = P^dag (U1 U0^dag)^{-1/2}``, where ``P``
    diagonalizes ``U1 U0^dag`` with columns ordered so that the canonical
    ``U0`` carries ``e^{+i alpha}`` first and ``e^{-i alpha}`` last.  The
    square-root branch halves the eigenphases after lifting them onto the
    covering arc, which centres the canonical spectrum on ``[-alpha, alpha]``.

    Pairs with ``4 n alpha >= pi`` are returned with
    ``perfectly_distinguishable`` set; nothing is raised for them.
    """
    u0 = np.asarray(u0, dtype=complex)
    u1 = np.asarray(u1, dtype=complex)
    if u0.shape != u1.shape or u0.ndim != 2 or u0.shape[0] != u0.shape[1]:
        raise ValueError("u0 and u1 must be square arrays of equal shape")
    d = u0.shape[0]
    if d < 2:
        raise ValueError("dimension must be at least 2")
    if not (is_unitary(u0) and is_unitary(u1)):
        raise ValueError("inputs must be unitary")
    if n < 1:
        raise ValueError("n must be a positive integer")

    gamma = u1 @ u0.conj().T
    # complex Schur of a normal matrix: T is diagonal, P unitary even for
    # repeated eigenvalues
    t, p = scipy.linalg.schur(gamma, output="complex")
    g = np.angle(np.diag(t))
    start, length = covering_arc(g)
    lifted = start + np.mod(g - start, 2 * np.pi)
    # lifted values overshooting by rounding wrap to just below start
    lifted = np.where(lifted > start + length + 1e-9, lifted - 2 * np.pi, lifted)
    centre = start + length / 2
    eps = lifted - centre
    # canonical U0 phase on each eigenvector is -eps/2; sort descending
    order = np.argsort(eps, kind="stable")
    eps = eps[order]
    p = p[:, order]
    half = -eps / 2
    alpha = length / 4
    # pin the extremes exactly to +-alpha
    half[0], half[-1] = alpha, -alpha
    phase = centre / 2

    v = u0.conj().T @ p
    w = np.exp(-1j * phase) * (np.diag(np.exp(1j * half)) @ p.conj().T)
    return CanonicalPair(
        d=d,
        n=int(n),
        alpha=float(alpha),
        betas=tuple(float(b) for b in half[1:-1]),
        V=v,
        W=w,
        global_phase=float(phase),
    )


def plus_state(d: int) -> np.ndarray:
    """``(|0> + |d-1>)/sqrt(2)``."""
    s = np.zeros(d, dtype=complex)
    s[0] = s[-1] = 1 / np.sqrt(2)
    return s


def storage_state(pair: CanonicalPair, which: int, n: int | None = None) -> np.ndarray:
    """Optimal stored state ``U_which^n |+>`` in the canonical basis.

    Defined up to and including ``4 n alpha = pi`` (orthogonal states);
    pairs strictly beyond that are rejected.
    """
    n = pair.n if n is None else int(n)
    if 4 * n * pair.alpha > np.pi + 1e-12:
        raise ValueError("4 n alpha exceeds pi; the storage states are not optimal")
    sign = 1 if which == 0 else -1
    return np.exp(1j * sign * n * pair.phases) * plus_state(pair.d)


def storage_state_conj(pair: CanonicalPair, which: int) -> np.ndarray:
    """``U_which^{*n} |+>`` (the complex-conjugate storage state)."""
    return np.conj(storage_state(pair, which))


def reconstruction_error(pair: CanonicalPair, u0: np.ndarray, u1: np.ndarray) -> float:
    """Largest deviation of the conjugated originals from the canonical pair."""
    ph = np.exp(1j * pair.global_phase)
    e0 = np.linalg.norm(ph * pair.W @ u0 @ pair.V - pair.canonical_u0, 2)
    e1 = np.linalg.norm(np.conj(ph) * pair.W @ u1 @ pair.V - pair.canonical_u1, 2)
    return float(max(e0, e1))


__all__ = [
    "CanonicalPair",
    "canonicalize",
    "covering_arc",
    "eigenphases",
    "plus_state",
    "reconstruction_error",
    "spread_angle",
    "storage_state",
    "storage_state_conj",
    "STRUCT_TOL",
]
