"""Shot-noise simulation of the two-photon storage-and-retrieval experiment.

Pipeline for one tomography setting::

    storage state (x) Pauli eigenstate  ->  CNOT channel (possibly noisy)
    -> phase misalignment on the storage qubit -> optical POVM (D0, D1, D2)
    -> input qubit measured in the X, Y or Z basis

The D1 branch needs a ``sigma_z`` correction on the input qubit.  It is
either applied physically before the measurement or emulated by flipping
the X and Y readings afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .canonical import CanonicalPair, plus_state, storage_state
from .circuits import CNOT
from .linalg import (
    PAULIS,
    SZ,
    ChoiOperator,
    _rng,
    apply_choi,
    choi_of_unitary,
    double_ket,
    ketbra,
    project_psd,
)
from .optics import compile_angles, compile_usd

# ----------------------------------------------------------------- settings

INPUT_LABELS = ("Z+", "Z-", "X+", "X-", "Y+", "Y-")
BASIS_LABELS = ("X", "Y", "Z")
BRANCH_LABELS = ("D0", "D1", "D2")

_S = 1 / np.sqrt(2)
INPUT_STATES = np.array([
    [1, 0], [0, 1], [_S, _S], [_S, -_S], [_S, 1j * _S], [_S, -1j * _S]], dtype=complex)
# projectors[basis, outcome]; outcome 0 is +1, outcome 1 is -1
PROJECTORS = np.array([
    [ketbra(INPUT_STATES[2]), ketbra(INPUT_STATES[3])],
    [ketbra(INPUT_STATES[4]), ketbra(INPUT_STATES[5])],
    [ketbra(INPUT_STATES[0]), ketbra(INPUT_STATES[1])],
])

CNOT_FIDELITY = 0.929


def _design_matrix() -> np.ndarray:
    """Rows: (input, basis, outcome); columns: Pauli (x) Pauli coefficients.

    ``C = (1/4) sum_jk c_jk s_j (x) s_k`` predicts
    ``p = Tr[(rho^T (x) Pi) C] = (1/4) sum_jk c_jk Tr(rho^T s_j) Tr(Pi s_k)``.
    """
    rows = []
    for rho in (ketbra(s) for s in INPUT_STATES):
        a = [np.real(np.trace(rho.T @ s)) for s in PAULIS]
        for b in range(3):
            for o in range(2):
                c = [np.real(np.trace(PROJECTORS[b, o] @ s)) for s in PAULIS]
                rows.append(np.outer(a, c).ravel() / 4)
    return np.array(rows)


DESIGN = _design_matrix()
DESIGN_PINV = np.linalg.pinv(DESIGN)
PAULI_PRODUCTS = np.array([np.kron(a, b) for a in PAULIS for b in PAULIS]) / 4


# -------------------------------------------------------------------- noise

def cnot_choi() -> ChoiOperator:
    return ChoiOperator(choi_of_unitary(CNOT), 4, 4)


def depolarized_cnot(process_fidelity: float = CNOT_FIDELITY) -> ChoiOperator:
    """``(1-eps) CNOT + eps * (full depolarization)`` at the given process fidelity.

    Process fidelity of the mixture is ``1 - 15 eps / 16``.
    """
    eps = (1 - process_fidelity) * 16 / 15
    m = (1 - eps) * choi_of_unitary(CNOT) + eps * np.eye(16) / 4
    return ChoiOperator(m, 4, 4)


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Imperfections of the virtual experiment.

    ``measurement_misalignment`` is a phase ``diag(1, e^{i delta})`` on the
    storage qubit in front of the POVM.  ``phase_error`` is added to alpha
    in the stored unitary while the POVM stays compiled for alpha.
    """

    cnot_choi: ChoiOperator = field(default_factory=cnot_choi)
    measurement_misalignment: float = 0.0
    phase_error: float = 0.0
    tag: str = "ideal"

    def __post_init__(self):
        c = self.cnot_choi
        if (c.d_in, c.d_out, c.kind) != (4, 4, "channel"):
            raise ValueError("cnot_choi must be a two-qubit channel")

    @classmethod
    def ideal(cls) -> "NoiseModel":
        return cls()

    @classmethod
    def noisy_cnot(cls, process_fidelity: float = CNOT_FIDELITY, **kw) -> "NoiseModel":
        return cls(depolarized_cnot(process_fidelity), tag=f"cnot{process_fidelity:g}", **kw)

    @classmethod
    def from_tag(cls, tag: str) -> "NoiseModel":
        """Parse tags such as ``ideal``, ``cnot0.929`` or ``cnot0.929+mis0.05+phase0.02``."""
        if tag == "ideal":
            return cls.ideal()
        kw = {}
        choi = cnot_choi()
        try:
            for part in tag.split("+"):
                if part.startswith("cnot"):
                    choi = depolarized_cnot(float(part[4:]))
                elif part.startswith("mis"):
                    kw["measurement_misalignment"] = float(part[3:])
                elif part.startswith("phase"):
                    kw["phase_error"] = float(part[5:])
                else:
                    raise ValueError(part)
        except ValueError:
            raise ValueError(f"unknown noise tag {tag!r}") from None
        return cls(choi, tag=tag, **kw)


# ---------------------------------------------------------------- tomograms

@dataclass(frozen=True, eq=False)
class Tomogram:
    """Counts indexed ``[sign, input, basis, branch, outcome]``.

    ``shots == 0`` marks probability mode: the array holds exact
    probabilities and every setting sums to 1.  ``feed_forward`` records
    whether the D1 correction still has to be applied in post-processing
    (``"emulated"``) or was applied before the measurement (``"physical"``).
    """

    counts: np.ndarray
    shots: int
    n: int
    alpha: float
    feed_forward: str = "emulated"
    noise_tag: str = "ideal"

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=float)
        object.__setattr__(self, "counts", c)
        if c.shape != (2, 6, 3, 3, 2):
            raise ValueError(f"tomogram shape {c.shape} != (2, 6, 3, 3, 2)")
        if np.any(c < 0):
            raise ValueError("negative counts")
        if self.feed_forward not in ("emulated", "physical"):
            raise ValueError("feed_forward must be 'emulated' or 'physical'")

    @property
    def per_setting_totals(self) -> np.ndarray:
        return self.counts.sum(axis=(3, 4))

    def corrected(self) -> np.ndarray:
        """Counts with the D1 X/Y readings flipped when emulating feed-forward."""
        c = self.counts.copy()
        if self.feed_forward == "emulated":
            c[:, :, 0:2, 1, :] = c[:, :, 0:2, 1, ::-1]
        return c


def _stored_state(p: CanonicalPair, noise: NoiseModel, which: int) -> np.ndarray:
    """Stored state after ``n`` uses of the gate with alpha off by ``phase_error``."""
    if not noise.phase_error:
        return storage_state(p, which)
    # a miscalibrated gate may overshoot pi/4n, so skip the optimality check
    a = p.alpha + noise.phase_error
    sign = 1 if which == 0 else -1
    return np.exp(1j * sign * p.n * np.array([a, -a])) * plus_state(2)


def setting_probabilities(p: CanonicalPair, noise: NoiseModel,
                          feed_forward: str = "emulated") -> np.ndarray:
    """Exact probabilities ``[sign, input, basis, branch, outcome]``."""
    povm = compile_angles(p.n, p.alpha).realized()  # 3x2 on the storage qubit
    shift = np.diag([1, np.exp(1j * noise.measurement_misalignment)])
    t = np.kron(povm @ shift, np.eye(2))  # (3*2) x (2*2)
    out = np.zeros((2, 6, 3, 3, 2))
    for sign in (0, 1):
        psi = _stored_state(p, noise, sign)
        for s, xi in enumerate(INPUT_STATES):
            rho = ketbra(np.kron(psi, xi))
            rho = apply_choi(noise.cnot_choi, rho)
            sig = t @ rho @ t.conj().T
            for j in range(3):
                blk = sig[2 * j:2 * j + 2, 2 * j:2 * j + 2]
                if j == 1 and feed_forward == "physical":
                    blk = SZ @ blk @ SZ
                for b in range(3):
                    for o in range(2):
                        out[sign, s, b, j, o] = np.real(np.trace(PROJECTORS[b, o] @ blk))
    return np.clip(out, 0, None)


def _sample(probs: np.ndarray, shots: int, rng) -> np.ndarray:
    """Multinomial counts per setting over the trailing (branch, outcome) cells."""
    flat = probs.reshape(-1, probs.shape[-2] * probs.shape[-1])
    flat = flat / flat.sum(axis=1, keepdims=True)
    counts = np.array([rng.multinomial(shots, row) for row in flat])
    return counts.reshape(probs.shape)


def run_virtual_experiment(p: CanonicalPair, noise: NoiseModel | None = None,
                           shots: int = 10_000, seed=None,
                           feed_forward: str = "emulated") -> Tomogram:
    """Tomograms for both stored signs.  ``shots=0`` gives exact probabilities."""
    noise = noise or NoiseModel.ideal()
    if p.d != 2:
        raise ValueError("qubit pair required")
    if shots and shots < 100:
        raise ValueError("shots must be 0 (probability mode) or at least 100")
    probs = setting_probabilities(p, noise, feed_forward)
    if shots == 0:
        counts = probs
    else:
        if seed is None:
            raise ValueError("a seed is required when sampling")
        counts = _sample(probs, shots, _rng(seed))
    return Tomogram(counts, int(shots), p.n, p.alpha, feed_forward, noise.tag)


# -------------------------------------------------------------- estimation

def reconstruct_choi(freq: np.ndarray) -> np.ndarray:
    """Linear inversion of 36 conditional frequencies, projected to the PSD cone.

    ``freq[input, basis, outcome]`` sums to 1 over outcomes per
    ``(input, basis)``.  The result is rescaled to trace 2.
    """
    c = DESIGN_PINV @ np.asarray(freq, dtype=float).ravel()
    m = np.tensordot(c, PAULI_PRODUCTS, axes=1)
    m = project_psd(m)
    tr = np.real(np.trace(m))
    if tr <= 0:
        return np.eye(4) / 2
    return m * (2 / tr)


def _conditional(counts: np.ndarray) -> np.ndarray | None:
    """Normalize ``[input, basis, outcome]`` counts per setting."""
    tot = counts.sum(axis=-1, keepdims=True)
    if np.any(tot <= 0):
        return None
    return counts / tot


def _fidelity(chois, p: CanonicalPair) -> float:
    f = 0.0
    for i, c in enumerate(chois):
        ku = double_ket(p.unitary(i))
        f += np.real(ku.conj() @ c @ ku)
    return float(f / 8)


@dataclass(frozen=True, eq=False)
class EstimatedReport:
    """Estimator output.

    ``C_exp`` holds the reconstructed 4x4 Choi matrices (PSD, trace 2) for
    the two stored unitaries; with sampled data they are close to, but not
    exactly, trace preserving.
    """

    P_succ_hat: float
    P_succ_stderr: float
    F_exp: float
    F_interval: tuple[float, float]
    C_exp: tuple | None
    fidelity_defined: bool = True
    arm: str = "optimal"


def _success_ratio(corrected: np.ndarray):
    """Per-sign success ratio and its Poisson variance."""
    ratios, variances = [], []
    for sign in (0, 1):
        s = corrected[sign, :, :, 0:2, :].sum()
        f = corrected[sign, :, :, 2, :].sum()
        tot = s + f
        ratios.append(s / tot if tot > 0 else 0.0)
        variances.append(s * f / tot**3 if tot > 0 else 0.0)
    return ratios, variances


def _chois_from(corrected: np.ndarray):
    chois = []
    for sign in (0, 1):
        succ = corrected[sign, :, :, 0, :] + corrected[sign, :, :, 1, :]
        freq = _conditional(succ)
        if freq is None:
            return None
        chois.append(reconstruct_choi(freq))
    return chois


def _basic_interval(f: float, samples, quantiles) -> tuple[float, float]:
    """Basic bootstrap interval clipped to [0, 1].

    Reflecting the quantiles about the estimate undoes the downward bias
    that the positivity projection adds to every resample.
    """
    if not samples:
        return (f, f)
    lo, hi = np.quantile(samples, quantiles)
    return (float(max(0.0, 2 * f - hi)), float(min(1.0, 2 * f - lo)))


def estimate(t: Tomogram, bootstrap: int = 200, seed=0,
             quantiles=(0.159, 0.841)) -> EstimatedReport:
    """Success probability and conditional process fidelity from tomograms.

    The success probability uses the count sums of the D0, D1 and D2
    tomograms per sign; its error follows from Poisson statistics.  The
    success-conditioned channel is reconstructed from D0 + D1 and its
    fidelity interval is a basic bootstrap over Poisson resampling of all
    counts, clipped to [0, 1].
    """
    c = t.corrected()
    ratios, variances = _success_ratio(c)
    p_hat = 0.5 * sum(ratios)
    p_err = 0.5 * float(np.sqrt(sum(variances))) if t.shots else 0.0
    pair = CanonicalPair.from_alpha(t.n, t.alpha)
    chois = _chois_from(c)
    if chois is None:
        return EstimatedReport(float(p_hat), p_err, float("nan"),
                               (float("nan"), float("nan")), None, False)
    f = _fidelity(chois, pair)
    if t.shots == 0 or bootstrap == 0:
        interval = (f, f)
    else:
        rng = _rng(seed)
        samples = []
        for _ in range(bootstrap):
            cb = rng.poisson(c).astype(float)
            cb_chois = _chois_from(cb)
            if cb_chois is not None:
                samples.append(_fidelity(cb_chois, pair))
        interval = _basic_interval(f, samples, quantiles)
    return EstimatedReport(float(p_hat), p_err, f, interval, tuple(chois))


# --------------------------------------------------- measure and prepare arm

def _direct_tomography(u: np.ndarray, shots: int, rng) -> np.ndarray:
    """Counts ``[input, basis, outcome]`` for a direct implementation of ``u``."""
    ch = choi_of_unitary(u)
    probs = np.zeros((6, 3, 2))
    for s, xi in enumerate(INPUT_STATES):
        out = apply_choi(ch, ketbra(xi), dims=(2, 2))
        for b in range(3):
            for o in range(2):
                probs[s, b, o] = np.real(np.trace(PROJECTORS[b, o] @ out))
    probs = np.clip(probs, 0, None)
    if shots == 0:
        return probs
    return np.array([[rng.multinomial(shots, pr / pr.sum()) for pr in row] for row in probs])


def usd_frequencies(p: CanonicalPair, noise: NoiseModel) -> np.ndarray:
    """Exact USD outcome probabilities ``[sign, outcome]`` (outcome 2 inconclusive)."""
    comp = compile_usd(p.alpha, p.n)
    shift = np.diag([1, np.exp(1j * noise.measurement_misalignment)])
    t = comp.realized() @ shift
    return np.array([np.abs(t @ _stored_state(p, noise, i)) ** 2 for i in (0, 1)])


def measure_and_prepare_arm(p: CanonicalPair, noise: NoiseModel | None = None,
                            shots: int = 10_000, seed=None, bootstrap: int = 200,
                            quantiles=(0.159, 0.841)) -> EstimatedReport:
    """USD on the storage qubit followed by a direct implementation of ``U_j``.

    For stored ``U_i`` the retrieved Choi is the frequency-weighted mixture
    of the directly reconstructed ``C_dir,0`` and ``C_dir,1`` over the
    conclusive outcomes, the correct one weighted by ``f_i`` and the wrong
    one by ``f_{1-i}``.
    """
    noise = noise or NoiseModel.ideal()
    if shots and seed is None:
        raise ValueError("a seed is required when sampling")
    rng = _rng(seed)
    probs = usd_frequencies(p, noise)
    if shots:
        usd_counts = np.array([rng.multinomial(shots, pr / pr.sum()) for pr in probs], float)
    else:
        usd_counts = probs
    direct = [_direct_tomography(p.unitary(i), shots, rng).astype(float) for i in (0, 1)]

    def evaluate(uc, dc):
        dir_chois = []
        for d in dc:
            freq = _conditional(d)
            if freq is None:
                return None, None, None
            dir_chois.append(reconstruct_choi(freq))
        ratios, chois = [], []
        for i in (0, 1):
            f = uc[i]
            tot = f.sum()
            ratios.append((f[0] + f[1]) / tot if tot > 0 else 0.0)
            if f[0] + f[1] <= 0:
                chois.append(None)
                continue
            chois.append((f[0] * dir_chois[0] + f[1] * dir_chois[1]) / (f[0] + f[1]))
        return ratios, chois, dir_chois

    ratios, chois, _ = evaluate(usd_counts, direct)
    p_hat = 0.5 * sum(ratios)
    if shots:
        var = 0.0
        for i in (0, 1):
            s, fl = usd_counts[i, 0] + usd_counts[i, 1], usd_counts[i, 2]
            var += s * fl / (s + fl) ** 3 if s + fl > 0 else 0.0
        p_err = 0.5 * float(np.sqrt(var))
    else:
        p_err = 0.0
    if any(c is None for c in chois):
        return EstimatedReport(float(p_hat), p_err, float("nan"), (float("nan"),) * 2,
                               None, False, "measure_and_prepare")
    fid = _fidelity(chois, p)
    if shots == 0 or bootstrap == 0:
        interval = (fid, fid)
    else:
        samples = []
        for _ in range(bootstrap):
            ub = rng.poisson(usd_counts).astype(float)
            db = [rng.poisson(d).astype(float) for d in direct]
            _, cb, _ = evaluate(ub, db)
            if cb is not None and all(c is not None for c in cb):
                samples.append(_fidelity(cb, p))
        interval = _basic_interval(fid, samples, quantiles)
    return EstimatedReport(float(p_hat), p_err, fid, interval, tuple(chois), True,
                           "measure_and_prepare")


def with_noise_tag(t: Tomogram, tag: str) -> Tomogram:
    return replace(t, noise_tag=tag)
