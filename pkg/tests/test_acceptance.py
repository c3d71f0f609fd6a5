"""Acceptance gate: one test and one PASS/FAIL line per criterion."""

import subprocess
import sys
import time

import numpy as np
import pytest

from sarlab import analytics, oracle
from sarlab.canonical import CanonicalPair, storage_state
from sarlab.circuits import (build_isometry_M, build_qudit_isometry, simulate_deterministic_retrieval,
                             simulate_qubit_retrieval)
from sarlab.experiment import NoiseModel, estimate, measure_and_prepare_arm, run_virtual_experiment
from sarlab.linalg import HADAMARD, dag
from sarlab.optics import alpha_t, compile_angles, compile_usd


@pytest.fixture
def report(capsys):
    def _report(label, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {label}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail
    return _report


def alpha_grid(n, points=20):
    top = np.pi / (4 * n)
    return np.linspace(top / points, top, points)


def test_criterion_1_closed_forms(report):
    t0 = time.perf_counter()
    errs = [
        abs(analytics.deterministic_fidelity(1, np.pi / 8) - (0.5 + np.sqrt(3) / 4)),
        abs(analytics.success_probability(2, 0.0)[0] - 0.8),
    ]
    errs += [abs(analytics.success_probability(n, np.pi / (4 * n))[0] - 1) for n in range(1, 9)]
    printed = abs(analytics.deterministic_fidelity(1, np.pi / 8) - 0.933013)
    elapsed = time.perf_counter() - t0
    ok = max(errs) <= 1e-9 and printed <= 5e-7 and elapsed < 1
    report(1, ok, f"max error {max(errs):.1e}, 6-digit value off by {printed:.1e}, {elapsed:.3f} s")


def test_criterion_2_oracle_equivalence(report):
    t0 = time.perf_counter()
    worst = 0.0
    for n in range(1, 6):
        for a in alpha_grid(n):
            worst = max(worst,
                        abs(oracle.brute_force_deterministic(n, a) - analytics.deterministic_fidelity(n, a)),
                        abs(oracle.brute_force_unambiguous(n, a) - analytics.success_probability(n, a)[0]))
    elapsed = time.perf_counter() - t0
    report(2, worst <= 1e-6 and elapsed < 120, f"max residual {worst:.1e}, {elapsed:.1f} s")


def test_criterion_3_circuit_exactness(report):
    t0 = time.perf_counter()
    kraus = complete = prob = 0.0
    for n in range(1, 6):
        for a in alpha_grid(n):
            p = CanonicalPair.from_alpha(n, a)
            expected = analytics.success_probability(n, a)[0]
            for which in (0, 1):
                ins = simulate_qubit_retrieval(p, which)
                u = p.unitary(which)
                lam = [np.trace(dag(k) @ k).real / 2 for k in ins.success_kraus]
                kraus = max(kraus, *(np.linalg.norm(k - np.sqrt(l) * u)
                                     for k, l in zip(ins.success_kraus, lam)))
                complete = max(complete, ins.completeness_residual())
                prob = max(prob, abs(sum(lam) - expected))
    elapsed = time.perf_counter() - t0
    ok = max(kraus, complete, prob) <= 1e-10 and elapsed < 30
    report(3, ok, f"Kraus {kraus:.1e}, completeness {complete:.1e}, P_succ {prob:.1e}, {elapsed:.2f} s")


def test_criterion_4_qudit_generalization(report):
    rng = np.random.default_rng(4)
    iso = prob = 0.0
    for d in (2, 3, 4):
        for n, a in [(1, np.pi / 6), (1, 0.2), (2, 0.05), (2, 0.18), (3, np.pi / 12)]:
            betas = tuple(rng.uniform(-a, a, size=d - 2))
            g = build_qudit_isometry(CanonicalPair.from_alpha(n, a, d=d, betas=betas))
            iso = max(iso, np.linalg.norm(dag(g.matrix) @ g.matrix - np.eye(2 * d)))
            for which in (0, 1):
                ks = g.branch_kraus(which)["success"]
                got = sum(np.trace(dag(k) @ k).real for k in ks) / d
                prob = max(prob, abs(got - analytics.success_probability(n, a)[0]))
    a = np.pi / 6
    g = build_qudit_isometry(CanonicalPair.from_alpha(1, a, d=3, betas=(a,)))
    extremal = abs(abs(g.y_diag[1]) - 1)
    ok = max(iso, prob, extremal) <= 1e-10
    report(4, ok, f"isometry {iso:.1e}, P_succ {prob:.1e}, extremal |y| {extremal:.1e}")


def test_criterion_5_boundary_identities(report):
    chi_vs_at = max(abs(analytics.chi(n) - alpha_t(n)) for n in range(1, 6))
    chi1 = abs(analytics.chi(1) - np.pi / 8)
    seam = max(abs(analytics.small_branch(n, analytics.chi(n)) - analytics.large_branch(n, analytics.chi(n)))
               for n in range(1, 6))
    ok = chi_vs_at <= 1e-10 and chi1 <= 1e-12 and seam <= 1e-10
    report(5, ok, f"chi vs alpha_t {chi_vs_at:.1e}, chi_1 {chi1:.1e}, branches {seam:.1e}")


def test_criterion_6_block_lemmas(report):
    out = oracle.lemma_battery(instances=500, seed=6)
    ok = all(bool(v["pass"]) for v in out.values())
    worst = {k: v.get("max_residual", v.get("max_decrease", v.get("agreements"))) for k, v in out.items()}
    report(6, ok, ", ".join(f"{k} {v:.1e}" if isinstance(v, float) else f"{k} {v}"
                            for k, v in sorted(worst.items())))


def test_criterion_7_optics(report):
    worst, modes = 0.0, set()
    for n in (1, 2, 3):
        for a in alpha_grid(n, 50):
            comp = compile_angles(n, a)
            worst = max(worst, comp.residual_norm)
            modes.add(comp.mode)
            k = build_isometry_M(n, a).matrix @ dag(HADAMARD)
            worst = max(worst, np.linalg.norm(k - comp.K_matrix))
    wrong = 0.0
    for a in np.linspace(0.01, np.pi / 4, 30):
        comp = compile_usd(a)
        p = CanonicalPair.from_alpha(1, a)
        wrong = max(wrong, abs((comp.realized() @ storage_state(p, 0))[1]),
                    abs((comp.realized() @ storage_state(p, 1))[0]))
    ok = worst <= 1e-8 and wrong <= 1e-10 and modes == {"isometry_small", "isometry_large"}
    report(7, ok, f"||C - MH^dag|| {worst:.1e} over {sorted(modes)}, USD wrong amplitude {wrong:.1e}")


def test_criterion_8_average_fidelity(report):
    p = CanonicalPair.from_alpha(1, np.pi / 8)
    det = simulate_deterministic_retrieval(p)
    est = oracle.monte_carlo_F_avg((det.choi_0, det.choi_1), p, samples=100_000, seed=8)
    target = 1 / 3 + 2 / 3 * analytics.deterministic_fidelity(1, np.pi / 8)
    z = abs(est.mean - target) / est.stderr
    report(8, z <= 3, f"MC {est.mean:.6f} vs {target:.6f}, {z:.2f} standard errors")


def _claims_9():
    # (a) ideal probability-mode estimators recover the closed forms
    exact = 0.0
    for n in (1, 2, 3):
        for a in alpha_grid(n, 10):
            r = estimate(run_virtual_experiment(CanonicalPair.from_alpha(n, a), shots=0))
            exact = max(exact, abs(r.P_succ_hat - analytics.success_probability(n, a)[0]),
                        abs(r.F_exp - 1))
    # (b) fidelity drop from a 0.929 CNOT across the small-alpha regime, n = 1
    noisy = NoiseModel.noisy_cnot(0.929)
    drops = []
    for a in np.linspace(analytics.chi(1) / 8, analytics.chi(1) * 0.99, 8):
        p = CanonicalPair.from_alpha(1, a)
        ideal = estimate(run_virtual_experiment(p, shots=0)).F_exp
        drops.append(ideal - estimate(run_virtual_experiment(p, noisy, shots=0)).F_exp)
    # (c) optimal success never below measure-and-prepare
    gap = np.inf
    for n in (1, 2, 3):
        for a in alpha_grid(n, 10):
            p = CanonicalPair.from_alpha(n, a)
            opt = estimate(run_virtual_experiment(p, shots=0)).P_succ_hat
            gap = min(gap, opt - measure_and_prepare_arm(p, shots=0).P_succ_hat)
    # (d) group baselines
    base = max(abs(analytics.group_baseline(2, 1, phase_gate=True) - 0.5),
               abs(analytics.group_baseline(2, 3, phase_gate=True) - 0.75))
    return exact, drops, gap, base


def test_criterion_9_experiment_claims(report):
    exact, drops, gap, base = _claims_9()
    parts = {
        "a": (exact <= 1e-12, f"estimator error {exact:.1e}"),
        "b": (all(abs(d - 0.03) <= 0.01 for d in drops),
              f"drop {min(drops):.4f}..{max(drops):.4f}, target 0.03 +- 0.01"),
        "c": (gap >= -1e-12, f"min optimal - m&p {gap:.2e}"),
        "d": (base == 0.0, f"baseline error {base:.1e}"),
    }
    detail = "; ".join(f"({k}) {'pass' if ok else 'FAIL'} {msg}" for k, (ok, msg) in parts.items())
    report(9, all(ok for ok, _ in parts.values()), detail)


def _cli(args, path):
    cmd = [sys.executable, "-m", "sarlab", *args, "--output", str(path)]
    return subprocess.run(cmd, capture_output=True, text=True).returncode


def test_criterion_10_determinism(report, tmp_path):
    runs = {
        "verify": ["verify", "--lemmas", "--seed", "10"],
        "experiment": ["experiment", "--shots", "2000", "--seed", "10"],
    }
    same, codes = {}, {}
    for name, args in runs.items():
        a, b = tmp_path / f"{name}_a", tmp_path / f"{name}_b"
        codes[name] = (_cli(args, a), _cli(args, b))
        same[name] = a.exists() and a.read_bytes() == b.read_bytes()
    ok = all(same.values()) and all(c == (0, 0) for c in codes.values())
    report(10, ok, ", ".join(f"{k} identical={v} exit={codes[k]}" for k, v in same.items()))
