from dataclasses import replace

import numpy as np
import pytest

from sarlab import analytics
from sarlab.canonical import CanonicalPair
from sarlab.circuits import CNOT
from sarlab.experiment import (CNOT_FIDELITY, DESIGN, INPUT_STATES, PROJECTORS, NoiseModel,
                               Tomogram, cnot_choi, depolarized_cnot, estimate,
                               measure_and_prepare_arm, reconstruct_choi, run_virtual_experiment,
                               usd_frequencies)
from sarlab.linalg import choi_of_unitary, is_psd, ketbra


def _process_fidelity(choi, u):
    k = choi_of_unitary(u)
    return np.real(np.trace(choi.matrix @ k)) / 16


def test_noisy_cnot_has_requested_fidelity():
    ideal = cnot_choi()
    assert abs(_process_fidelity(depolarized_cnot(0.929), CNOT) - 0.929) < 1e-12
    assert abs(_process_fidelity(ideal, CNOT) - 1) < 1e-12


def test_noise_tags():
    assert NoiseModel.from_tag("ideal").tag == "ideal"
    m = NoiseModel.from_tag("cnot0.929+mis0.05+phase0.01")
    assert m.measurement_misalignment == 0.05 and m.phase_error == 0.01
    assert abs(_process_fidelity(m.cnot_choi, CNOT) - 0.929) < 1e-12
    with pytest.raises(ValueError):
        NoiseModel.from_tag("bogus")
    assert NoiseModel.noisy_cnot().tag == f"cnot{CNOT_FIDELITY}"


def test_design_matrix_is_informationally_complete():
    assert DESIGN.shape == (36, 16)
    assert np.linalg.matrix_rank(DESIGN) == 16


def test_linear_inversion_recovers_unitary_choi():
    u = np.array([[np.cos(0.3), -np.sin(0.3)], [np.sin(0.3), np.cos(0.3)]]) * np.exp(0.2j)
    freq = np.zeros((6, 3, 2))
    for s, xi in enumerate(INPUT_STATES):
        out = u @ ketbra(xi) @ u.conj().T
        for b in range(3):
            for o in range(2):
                freq[s, b, o] = np.real(np.trace(PROJECTORS[b, o] @ out))
    c = reconstruct_choi(freq)
    assert np.allclose(c, choi_of_unitary(u), atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_probability_mode_recovers_analytics(n):
    for a in np.linspace(np.pi / (4 * n) / 6, np.pi / (4 * n), 6):
        r = estimate(run_virtual_experiment(CanonicalPair.from_alpha(n, a), shots=0))
        assert abs(r.P_succ_hat - analytics.success_probability(n, a)[0]) < 1e-12
        assert abs(r.F_exp - 1) < 1e-12
        assert r.fidelity_defined and r.P_succ_stderr == 0.0


def test_sampled_success_probability():
    p = CanonicalPair.from_alpha(1, np.pi / 6)
    r = estimate(run_virtual_experiment(p, shots=10_000, seed=1), bootstrap=50, seed=1)
    assert abs(r.P_succ_hat - 0.5670) <= 3 * r.P_succ_stderr
    assert 0 <= r.F_interval[0] <= r.F_interval[1] <= 1
    assert all(is_psd(c) and abs(np.trace(c) - 2) < 1e-10 for c in r.C_exp)


def test_tomogram_counts_per_setting():
    t = run_virtual_experiment(CanonicalPair.from_alpha(1, 0.3), shots=500, seed=2)
    assert np.all(t.per_setting_totals == 500)
    assert t.counts.shape == (2, 6, 3, 3, 2)


def test_sampling_requires_seed_and_shots():
    p = CanonicalPair.from_alpha(1, 0.3)
    with pytest.raises(ValueError):
        run_virtual_experiment(p, shots=1000)
    with pytest.raises(ValueError):
        run_virtual_experiment(p, shots=50, seed=0)


def test_seeded_runs_are_reproducible():
    p = CanonicalPair.from_alpha(1, 0.2)
    noise = NoiseModel.noisy_cnot()
    a = estimate(run_virtual_experiment(p, noise, 2000, seed=4), 50, seed=4)
    b = estimate(run_virtual_experiment(p, noise, 2000, seed=4), 50, seed=4)
    assert a.F_exp == b.F_exp and a.F_interval == b.F_interval and a.P_succ_hat == b.P_succ_hat
    assert a.F_exp < 1


def test_depolarized_cnot_regression():
    p = CanonicalPair.from_alpha(1, np.pi / 8)
    r = estimate(run_virtual_experiment(p, NoiseModel.noisy_cnot(), shots=0))
    assert r.F_exp == pytest.approx(0.9432, abs=1e-12)


def test_all_fail_tomogram_is_flagged():
    counts = np.zeros((2, 6, 3, 3, 2))
    counts[:, :, :, 2, 0] = 100
    r = estimate(Tomogram(counts, 100, 1, 0.2))
    assert r.P_succ_hat == 0.0
    assert not r.fidelity_defined and np.isnan(r.F_exp)


def test_feed_forward_equivalence():
    for n, a in [(1, np.pi / 6), (2, 0.05)]:
        p = CanonicalPair.from_alpha(n, a)
        for noise in (NoiseModel.ideal(), NoiseModel.noisy_cnot()):
            em = estimate(run_virtual_experiment(p, noise, 0, feed_forward="emulated"))
            ph = estimate(run_virtual_experiment(p, noise, 0, feed_forward="physical"))
            for x, y in zip(em.C_exp, ph.C_exp):
                assert np.max(np.abs(x - y)) <= 1e-12


def test_measure_and_prepare_ideal():
    for n, a in [(1, np.pi / 16), (1, np.pi / 6), (2, 0.1)]:
        p = CanonicalPair.from_alpha(n, a)
        r = measure_and_prepare_arm(p, shots=0)
        assert abs(r.P_succ_hat - (1 - np.cos(2 * n * a))) < 1e-12
        assert abs(r.F_exp - 1) < 1e-12 and r.arm == "measure_and_prepare"
    p = CanonicalPair.from_alpha(1, np.pi / 16)
    assert measure_and_prepare_arm(p, shots=0).P_succ_hat < analytics.success_probability(1, np.pi / 16)[0] - 0.1


def test_measure_and_prepare_misalignment():
    p = CanonicalPair.from_alpha(1, np.pi / 6)
    noise = NoiseModel.ideal()
    noise = replace(noise, measurement_misalignment=0.05, tag="mis0.05")
    f = usd_frequencies(p, noise)
    assert f[0, 1] > 0
    r = measure_and_prepare_arm(p, noise, shots=0)
    assert r.F_exp < 1


def test_measure_and_prepare_sampled():
    p = CanonicalPair.from_alpha(1, np.pi / 6)
    r = measure_and_prepare_arm(p, shots=10_000, seed=3, bootstrap=50)
    assert abs(r.P_succ_hat - (1 - np.cos(np.pi / 3))) <= 3 * r.P_succ_stderr


def test_optimal_beats_measure_and_prepare_on_grid():
    for n in (1, 2, 3):
        for a in np.linspace(np.pi / (4 * n) / 10, np.pi / (4 * n), 10):
            p = CanonicalPair.from_alpha(n, a)
            opt = estimate(run_virtual_experiment(p, shots=0)).P_succ_hat
            mp = measure_and_prepare_arm(p, shots=0).P_succ_hat
            assert opt >= mp - 1e-12


def test_bootstrap_coverage():
    # interior truth: the noisy channel's fidelity is below 1, so the
    # positivity projection does not pin the estimate to the boundary
    p = CanonicalPair.from_alpha(1, np.pi / 6)
    noise = NoiseModel.noisy_cnot()
    truth = estimate(run_virtual_experiment(p, noise, shots=0)).F_exp
    covered = 0
    for s in range(100):
        r = estimate(run_virtual_experiment(p, noise, shots=10_000, seed=s), 200, seed=1000 + s)
        covered += r.F_interval[0] <= truth <= r.F_interval[1]
    assert 60 <= covered <= 75


def test_phase_error_at_domain_edge():
    # the miscalibrated gate overshoots pi/4n; the run must still go through
    p = CanonicalPair.from_alpha(1, np.pi / 4)
    r = estimate(run_virtual_experiment(p, NoiseModel.from_tag("phase0.02"), shots=0))
    assert 0 < r.F_exp < 1
    assert measure_and_prepare_arm(p, NoiseModel.from_tag("phase0.02"), shots=0).F_exp < 1
