"""Brute-force verification of the optimality claims for qubit pairs.

Nothing here calls the closed forms in :mod:`sarlab.analytics`; every value
is obtained from the operators themselves (performance operator, block
decomposition of the retrieval Choi, grid scans).  Tensor order is
``H0 (x) H1 (x) H2``: storage, retrieval input, retrieval output.  Choi
operators of retrieval maps have ``H0 (x) H1`` as input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .canonical import CanonicalPair, storage_state
from .linalg import (
    ALGEBRA_TOL,
    I2,
    KET_MINUS,
    KET_PLUS,
    OPT_TOL,
    SX,
    SZ,
    STRUCT_TOL,
    ChoiOperator,
    _rng,
    dag,
    double_ket,
    haar_random_states,
    kron,
    min_eig,
    partial_trace,
    random_psd,
)

GOLDEN = (np.sqrt(5) - 1) / 2


# ---------------------------------------------------------------- structure

def e_vectors() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """``(e1, e2, e1', e2')`` on ``H0 (x) H1 (x) H2``, each of norm sqrt(2).

    ``e1 = |+>|I>>``, ``e2 = |->|Z>>``, ``e1' = |+>|Z>>``, ``e2' = |->|I>>``.
    """
    ki, kz = double_ket(I2), double_ket(SZ)
    return (np.kron(KET_PLUS, ki), np.kron(KET_MINUS, kz),
            np.kron(KET_PLUS, kz), np.kron(KET_MINUS, ki))


def block_projectors() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthogonal projectors ``P``, ``P'`` onto the two blocks and ``Q = I - P - P'``."""
    e1, e2, f1, f2 = e_vectors()
    p = (np.outer(e1, e1.conj()) + np.outer(e2, e2.conj())) / 2
    pp = (np.outer(f1, f1.conj()) + np.outer(f2, f2.conj())) / 2
    return p, pp, np.eye(8) - p - pp


def z_gate(beta: float, gamma: float) -> np.ndarray:
    return np.diag([np.exp(1j * beta), np.exp(1j * gamma)])


def symmetry(beta: float, gamma: float, l: int) -> np.ndarray:
    """Group representation ``W = s (x) s Z (x) s Z*`` with ``s = X^l``."""
    s = SX if l else I2
    z = z_gate(beta, gamma)
    return kron(s, s @ z, s @ z.conj())


def random_symmetry(rng) -> np.ndarray:
    b, g = rng.uniform(0, 2 * np.pi, 2)
    return symmetry(b, g, int(rng.integers(2)))


@dataclass(frozen=True, eq=False)
class BlockChoi:
    """Retrieval Choi ``R = sum A_ij |e_i>><<e_j| + sum B_ij |e'_i>><<e'_j|``."""

    A: np.ndarray
    B: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        e = e_vectors()
        out = np.zeros((8, 8), dtype=complex)
        for i in range(2):
            for j in range(2):
                out += self.A[i, j] * np.outer(e[i], e[j].conj())
                out += self.B[i, j] * np.outer(e[2 + i], e[2 + j].conj())
        return out

    @classmethod
    def from_matrix(cls, r: np.ndarray) -> "BlockChoi":
        """Read ``A``, ``B`` off a Choi (any ``Q``-part is discarded)."""
        e = e_vectors()
        a = np.array([[e[i].conj() @ r @ e[j] for j in range(2)] for i in range(2)]) / 4
        b = np.array([[e[2 + i].conj() @ r @ e[2 + j] for j in range(2)]
                      for i in range(2)]) / 4
        return cls(a, b)


# ------------------------------------------------------- performance operator

def _check_qubit(p: CanonicalPair):
    if p.d != 2:
        raise ValueError("qubit pair required")


@dataclass(frozen=True, eq=False)
class PerformanceOperatorD:
    matrix: np.ndarray
    n: int
    alpha: float

    def commutator_norm(self, w: np.ndarray) -> float:
        return float(np.linalg.norm(self.matrix @ w - w @ self.matrix))

    def figure_of_merit(self, r: np.ndarray) -> float:
        return float(np.real(np.trace(r @ self.matrix)))


def build_D(p: CanonicalPair) -> PerformanceOperatorD:
    """``D = (1/(2 d^2)) sum_i |psi*_i><psi*_i| (x) |U_i>><<U_i|``."""
    _check_qubit(p)
    d = p.d
    m = np.zeros((8, 8), dtype=complex)
    for i in (0, 1):
        psi = np.conj(storage_state(p, i))
        w = np.kron(psi, double_ket(p.unitary(i)))
        m += np.outer(w, w.conj())
    return PerformanceOperatorD(m / (2 * d * d), p.n, p.alpha)


# ----------------------------------------------------------- reduced problem

@dataclass(frozen=True, eq=False)
class ReducedProblem:
    """Two-dimensional reduction: vectors ``u``, ``v`` with ``|u|^2 + |v|^2 = 1``."""

    u: np.ndarray
    v: np.ndarray
    eta_u: float = field(init=False)
    eta_v: float = field(init=False)
    mu: float = field(init=False)

    def __post_init__(self):
        eu = float(np.real(np.vdot(self.u, self.u)))
        ev = float(np.real(np.vdot(self.v, self.v)))
        object.__setattr__(self, "eta_u", eu)
        object.__setattr__(self, "eta_v", ev)
        mu = abs(np.vdot(self.u, self.v)) / np.sqrt(eu * ev) if eu * ev > 0 else 1.0
        object.__setattr__(self, "mu", float(mu))

    def objective(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.real(self.u.conj() @ a @ self.u + self.v.conj() @ b @ self.v))


def reduced_problem(p: CanonicalPair) -> ReducedProblem:
    """Project ``|psi*_0>|U_0>>`` onto the ``e`` and ``e'`` blocks.

    ``|psi*_0>|U_0>> = sum u_i |e_i>> + i sum v_i |e'_i>>``.
    """
    _check_qubit(p)
    w = np.kron(np.conj(storage_state(p, 0)), double_ket(p.unitary(0)))
    e = e_vectors()
    u = np.array([e[0].conj() @ w, e[1].conj() @ w]) / 2
    v = -1j * np.array([e[2].conj() @ w, e[3].conj() @ w]) / 2
    # both are real up to rounding for a canonical pair
    return ReducedProblem(np.real_if_close(u, tol=1000), np.real_if_close(v, tol=1000))


def reduced_problem_closed(n: int, alpha: float) -> ReducedProblem:
    """``u = (c_n c, s_n s)``, ``v = (c_n s, -s_n c)`` with ``c_n = cos(n alpha)``."""
    cn, sn = np.cos(n * alpha), np.sin(n * alpha)
    c, s = np.cos(alpha), np.sin(alpha)
    return ReducedProblem(np.array([cn * c, sn * s]), np.array([cn * s, -sn * c]))


def helstrom(rp: ReducedProblem) -> tuple[float, np.ndarray]:
    """Minimum-error optimum for ``A + B = I``.

    Returns ``(value, phi_A)`` where ``A = |phi_A><phi_A|`` is the top
    eigenprojector of ``uu^dag - vv^dag``.
    """
    g = np.outer(rp.u, rp.u.conj()) - np.outer(rp.v, rp.v.conj())
    w, vecs = np.linalg.eigh(g)
    phi = vecs[:, -1]
    # fix the gauge: first nonzero component real nonnegative
    k = int(np.argmax(np.abs(phi) > 1e-14))
    phi = phi * np.exp(-1j * np.angle(phi[k]))
    return float(rp.eta_v + w[-1]), phi


# --------------------------------------------------------------- brute force

def _golden_max(f, lo, hi, tol=1e-12, maxiter=200):
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(maxiter):
        if b - a < tol:
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
    x = (a + b) / 2
    return x, f(x)


def brute_force_deterministic(n: int, alpha: float, resolution: int = 1024) -> float:
    """Maximize ``<u|A|u> + <v|I-A|v>`` over real rank-one projectors ``A``.

    ``A = |t><t|`` with ``t = (cos th, sin th)``; ``th`` is scanned on
    ``[0, pi)`` then refined by golden section around the best cell.
    """
    if resolution < 256:
        raise ValueError("resolution must be at least 256")
    rp = reduced_problem(CanonicalPair.from_alpha(n, alpha))
    u, v = np.real(rp.u), np.real(rp.v)

    def f(th):
        t = np.stack([np.cos(th), np.sin(th)])
        return (u @ t) ** 2 + v @ v - (v @ t) ** 2

    grid = np.linspace(0, np.pi, resolution, endpoint=False)
    vals = f(grid)
    k = int(np.argmax(vals))
    h = np.pi / resolution
    _, best = _golden_max(f, grid[k] - h, grid[k] + h)
    return float(max(best, vals[k]))


def random_feasible_best(n: int, alpha: float, samples: int = 500, seed=0) -> float:
    """Best objective among random PSD pairs scaled into ``A + B <= I``."""
    rp = reduced_problem(CanonicalPair.from_alpha(n, alpha))
    rng = _rng(seed)
    best = -np.inf
    for _ in range(samples):
        a, b = random_psd(2, rng), random_psd(2, rng)
        top = np.linalg.eigvalsh(a + b)[-1]
        if top > 1:
            a, b = a / top, b / top
        best = max(best, rp.objective(a, b))
    return float(best)


def _perp(x: np.ndarray) -> np.ndarray:
    y = np.array([-np.conj(x[1]), np.conj(x[0])])
    nrm = np.linalg.norm(y)
    return y / nrm if nrm > 0 else np.array([1.0, 0.0])


def _max_tb(pa: np.ndarray, pb: np.ndarray, ta: np.ndarray, iters: int = 60) -> np.ndarray:
    """Largest ``t_B`` with ``I - t_A pa - t_B pb >= 0``, bisected per ``t_A``."""
    ta = np.atleast_1d(ta)
    lo = np.zeros_like(ta)
    hi = np.ones_like(ta)
    eye = np.eye(2)

    def feasible(tb):
        m = eye - ta[:, None, None] * pa - tb[:, None, None] * pb
        return np.linalg.eigvalsh(m)[:, 0] >= -1e-15

    ok = feasible(hi)
    lo = np.where(ok, hi, lo)
    for _ in range(iters):
        mid = (lo + hi) / 2
        f = feasible(mid)
        lo = np.where(f, mid, lo)
        hi = np.where(f, hi, mid)
    return lo


def brute_force_unambiguous(n: int, alpha: float, resolution: int = 1024) -> float:
    """Maximize ``<u|A|u> + <v|B|v>`` with ``<v|A|v> = <u|B|u> = 0``, ``A + B <= I``.

    The zero constraints force ``A = t_A |v_perp><v_perp|`` and
    ``B = t_B |u_perp><u_perp|``.  For each ``t_A`` on a grid the largest
    feasible ``t_B`` is found by bisection on the smallest eigenvalue of
    ``I - A - B``; the best grid cell is refined by golden section.
    """
    if resolution < 256:
        raise ValueError("resolution must be at least 256")
    rp = reduced_problem(CanonicalPair.from_alpha(n, alpha))
    fa, fb = _perp(rp.v), _perp(rp.u)
    pa, pb = np.outer(fa, fa.conj()), np.outer(fb, fb.conj())
    wa = abs(np.vdot(rp.u, fa)) ** 2
    wb = abs(np.vdot(rp.v, fb)) ** 2

    def f(ta):
        ta = np.atleast_1d(ta)
        return ta * wa + _max_tb(pa, pb, ta) * wb

    grid = np.linspace(0, 1, resolution)
    vals = f(grid)
    k = int(np.argmax(vals))
    h = 1 / (resolution - 1)
    lo, hi = max(0.0, grid[k] - h), min(1.0, grid[k] + h)
    _, best = _golden_max(lambda t: float(f(t)[0]), lo, hi)
    return float(max(best, vals[k]))


# --------------------------------------------------- perfect retrieval check

@dataclass(frozen=True)
class RetrievalConditionReport:
    lambdas: tuple[float, float]
    residuals: tuple[float, float]
    q_block_norm: float
    passed: bool

    @property
    def success_probability(self) -> float:
        return 0.5 * sum(self.lambdas)


def verify_perfect_retrieval_condition(
    r_s: np.ndarray, p: CanonicalPair, tol: float = 1e-9
) -> RetrievalConditionReport:
    """Check ``<psi*_i| R_s |psi*_i> = lambda_i |U_i>><<U_i|`` and ``Q R_s Q = 0``.

    ``r_s`` is the 8x8 Choi of the success operation from ``H0 (x) H1`` to
    ``H2``.  Violations are reported, never raised.
    """
    _check_qubit(p)
    r_s = np.asarray(r_s, dtype=complex)
    t = r_s.reshape(2, 4, 2, 4)
    lams, res = [], []
    for i in (0, 1):
        psi = np.conj(storage_state(p, i))
        x = np.einsum("a,aibj,b->ij", psi.conj(), t, psi)
        ku = double_ket(p.unitary(i))
        lam = float(np.real(ku.conj() @ x @ ku)) / 4
        lams.append(lam)
        res.append(float(np.linalg.norm(x - lam * np.outer(ku, ku.conj()))))
    _, _, q = block_projectors()
    qn = float(np.linalg.norm(q @ r_s @ q))
    ok = max(res) <= tol and qn <= tol and abs(lams[0] - lams[1]) <= tol
    return RetrievalConditionReport(tuple(lams), tuple(res), qn, bool(ok))


# -------------------------------------------------------------- Monte Carlo

@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    stderr: float
    samples: int


def monte_carlo_F_avg(
    retrieval: tuple[ChoiOperator, ChoiOperator], p: CanonicalPair,
    samples: int = 100_000, seed=0, min_samples: int = 10_000,
) -> MonteCarloEstimate:
    """Haar average of ``(1/2) sum_i <U_i phi| C_i(phi) |U_i phi>``.

    ``retrieval[i]`` is the single-qubit channel obtained by feeding the
    storage state for ``U_i``.
    """
    if samples < min_samples:
        raise ValueError(f"need at least {min_samples} samples")
    phi = haar_random_states(p.d, samples, seed)
    total = np.zeros(samples)
    for i, ch in enumerate(retrieval):
        u = p.unitary(i)
        chi = phi @ u.T
        # fidelity = <y|C|y> with y = conj(phi) (x) chi
        y = (np.conj(phi)[:, :, None] * chi[:, None, :]).reshape(samples, -1)
        total += np.real(np.einsum("ni,ij,nj->n", y.conj(), ch.matrix, y))
    f = total / len(retrieval)
    return MonteCarloEstimate(float(f.mean()), float(f.std(ddof=1) / np.sqrt(samples)), samples)


def unitary_pair_F_avg(u: np.ndarray, v: np.ndarray) -> float:
    """Closed-form Haar average ``(d + |Tr U^dag V|^2)/(d(d+1))``; sampler calibration."""
    d = u.shape[0]
    return float((d + abs(np.trace(dag(u) @ v)) ** 2) / (d * (d + 1)))


# ------------------------------------------------------------ lemma battery

def _random_block(rng) -> BlockChoi:
    a, b = random_psd(2, rng), random_psd(2, rng)
    # half the draws are pushed above the constraint to exercise both sides
    scale = rng.uniform(0.5, 1.5) / max(np.linalg.eigvalsh(a + b)[-1], 1e-12)
    return BlockChoi(a * scale, b * scale)


def lemma_battery(instances: int = 500, seed: int = 0, n: int = 1,
                  alpha: float = np.pi / 6) -> dict[str, dict]:
    """Randomized checks of the block-structure lemmas.

    Returns one entry per property with the worst observed residual and a
    pass flag.
    """
    rng = _rng(seed)
    p = CanonicalPair.from_alpha(n, alpha)
    dmat = build_D(p)
    rp = reduced_problem(p)
    out = {}

    agree = 0
    for _ in range(instances):
        blk = _random_block(rng)
        s1 = min_eig(np.eye(2) - blk.A - blk.B)
        s2 = min_eig(np.eye(4) - partial_trace(blk.matrix, (4, 2), "b"))
        if abs(s1) < STRUCT_TOL:
            agree += 1
            continue
        agree += (s1 >= 0) == (s2 >= -STRUCT_TOL)
    out["trace_constraint_equivalence"] = {
        "instances": instances, "agreements": int(agree), "pass": agree == instances}

    worst = 0.0
    for _ in range(instances):
        blk = _random_block(rng)
        full = dmat.figure_of_merit(blk.matrix)
        worst = max(worst, abs(full - rp.objective(blk.A, blk.B)))
    out["block_figure_of_merit"] = {"max_residual": worst, "pass": worst <= ALGEBRA_TOL}

    worst = 0.0
    for _ in range(instances):
        w = random_symmetry(rng)
        worst = max(worst, dmat.commutator_norm(w))
    out["D_symmetry"] = {"max_residual": worst, "pass": worst <= ALGEBRA_TOL}

    worst = 0.0
    for _ in range(instances):
        nn = int(rng.integers(1, 6))
        aa = float(rng.uniform(1e-3, np.pi / (4 * nn) - 1e-3))
        cn, sn = np.cos(nn * aa), np.sin(nn * aa)
        c, s = np.cos(aa), np.sin(aa)
        q = reduced_problem(CanonicalPair.from_alpha(nn, aa))
        phi_a = np.array([c / cn, s / sn])
        phi_b = np.array([s / cn, -c / sn])
        worst = max(worst, float(abs(np.vdot(q.v, phi_a))), float(abs(np.vdot(q.u, phi_b))),
                    float(abs(np.vdot(q.u, phi_a) - 1)), float(abs(np.vdot(q.v, phi_b) - 1)))
    out["retrieval_orthogonality"] = {"max_residual": worst, "pass": bool(worst <= STRUCT_TOL)}

    worst = 0.0
    for _ in range(instances):
        blk = _random_block(rng)
        r = blk.matrix
        pp, ppp, _ = block_projectors()
        worst = max(worst, float(np.linalg.norm(pp @ r @ pp + ppp @ r @ ppp - r)))
    out["projector_reconstruction"] = {"max_residual": worst, "pass": worst <= ALGEBRA_TOL}

    # symmetrizing a random retrieval over sampled group elements
    worst_drop = 0.0
    for _ in range(20):
        g = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        r = g @ dag(g)
        r /= np.linalg.eigvalsh(partial_trace(r, (4, 2), "b"))[-1]
        ws = [random_symmetry(rng) for _ in range(200)]
        rbar = sum(w @ r @ dag(w) for w in ws) / len(ws)
        worst_drop = max(worst_drop, dmat.figure_of_merit(r) - dmat.figure_of_merit(rbar))
    out["symmetrization"] = {"max_decrease": worst_drop, "pass": worst_drop <= ALGEBRA_TOL}
    return out


__all__ = [
    "BlockChoi",
    "MonteCarloEstimate",
    "OPT_TOL",
    "PerformanceOperatorD",
    "ReducedProblem",
    "RetrievalConditionReport",
    "block_projectors",
    "brute_force_deterministic",
    "brute_force_unambiguous",
    "build_D",
    "e_vectors",
    "helstrom",
    "lemma_battery",
    "monte_carlo_F_avg",
    "random_feasible_best",
    "reduced_problem",
    "reduced_problem_closed",
    "symmetry",
    "unitary_pair_F_avg",
    "verify_perfect_retrieval_condition",
]
