import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sarlab import analytics
from sarlab.analytics import Regime


def raw_fidelity(n, a):
    return 0.5 + 0.5 * np.sqrt(1 - (np.sin(2 * a) * np.cos(2 * n * a)) ** 2)


def raw_success(n, a):
    cn, c, s = np.cos(2 * n * a), np.cos(2 * a), np.sin(2 * a)
    if cn * (c + s) > 1:
        return (1 - cn ** 2) / (2 * (1 - cn * c))
    return 1 - cn * s


def test_fidelity_spot_values():
    assert abs(analytics.deterministic_fidelity(1, np.pi / 8) - (0.5 + np.sqrt(3) / 4)) < 1e-12
    assert abs(analytics.deterministic_fidelity(1, np.pi / 8) - 0.933013) < 1e-6
    for n in range(1, 6):
        assert abs(analytics.deterministic_fidelity(n, np.pi / (4 * n)) - 1) < 1e-12
        assert analytics.deterministic_fidelity(n, 0.0) == 1.0


def test_fidelity_out_of_range():
    with pytest.raises(ValueError):
        analytics.deterministic_fidelity(2, np.pi / 4)


def test_average_fidelity():
    assert abs(analytics.average_fidelity(0.933013, 2) - 0.955342) < 1e-6


def test_success_spot_values():
    v, r = analytics.success_probability(1, np.pi / 8)
    assert abs(v - 0.5) < 1e-12
    assert abs(analytics.small_branch(1, np.pi / 8) - 0.5) < 1e-12
    assert abs(analytics.large_branch(1, np.pi / 8) - 0.5) < 1e-12
    v, r = analytics.success_probability(2, 0.0)
    assert v == pytest.approx(0.8, abs=1e-15) and r is Regime.DEGENERATE
    assert analytics.success_probability(2, 1e-9)[0] == pytest.approx(0.8, abs=1e-9)
    v, r = analytics.success_probability(1, np.pi / 4)
    assert abs(v - 1) < 1e-12 and r is Regime.LARGE


@pytest.mark.parametrize("n", range(1, 6))
def test_success_matches_raw_formulas(n):
    for a in np.linspace(1e-3, np.pi / (4 * n), 40):
        # the raw small branch cancels catastrophically as alpha -> 0
        tol = 1e-12 + 1e-16 / a ** 2
        assert abs(analytics.success_probability(n, a)[0] - raw_success(n, a)) < tol
        assert abs(analytics.deterministic_fidelity(n, a) - raw_fidelity(n, a)) < 1e-12


def test_chi_solves_boundary_equation():
    assert abs(analytics.chi(1) - np.pi / 8) < 1e-12
    for n in range(1, 9):
        c = analytics.chi(n)
        assert 0 < c < np.pi / (4 * n)
        assert abs(np.cos(2 * n * c) * (np.cos(2 * c) + np.sin(2 * c)) - 1) < 1e-12
        assert abs(analytics.small_branch(n, c) - analytics.large_branch(n, c)) < 1e-10
        assert analytics.regime(n, c * 0.99) is Regime.SMALL
        assert analytics.regime(n, c * 1.01) is Regime.LARGE


def test_lambdas():
    la, lb = analytics.lambdas(1, np.pi / 6)
    assert abs(la - 0.408494) < 1e-6 and abs(lb - 0.158494) < 1e-6
    assert abs(la + lb - (1 - np.cos(np.pi / 3) * np.sin(np.pi / 3))) < 1e-12
    for n in (1, 2, 3):
        assert np.allclose(analytics.lambdas(n, np.pi / (4 * n)), (0.5, 0.5), atol=1e-12)
    q, zero = analytics.lambdas(1, np.pi / 16)
    assert zero == 0.0
    assert abs(q - np.sin(np.pi / 8) ** 2 / (2 * (1 - np.cos(np.pi / 8) ** 2))) < 1e-12
    assert abs(q - analytics.success_probability(1, np.pi / 16)[0]) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_lambda_sum_identity(n):
    for a in np.linspace(analytics.chi(n), np.pi / (4 * n), 30):
        la, lb = analytics.lambdas(n, a)
        assert la >= 0 and lb >= 0
        assert abs(la + lb - (1 - np.cos(2 * n * a) * np.sin(2 * a))) < 1e-12


def test_asymptotic_expansion():
    assert analytics.asymptotic_success(1, 0) == pytest.approx(0.5, abs=1e-15)
    assert analytics.asymptotic_success(3, 0) == pytest.approx(0.9, abs=1e-15)
    e1 = abs(analytics.success_probability(2, 0.01)[0] - analytics.asymptotic_success(2, 0.01))
    e2 = abs(analytics.success_probability(2, 0.02)[0] - analytics.asymptotic_success(2, 0.02))
    assert 16 * 0.8 <= e2 / e1 <= 16 * 1.2


def test_group_baselines():
    assert analytics.group_baseline(2, 3) == pytest.approx(0.5)
    assert analytics.group_baseline(2, 3, phase_gate=True) == pytest.approx(0.75)
    assert analytics.group_baseline(2, 1, phase_gate=True) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        analytics.group_baseline(1, 1)


def test_eta_u_identity():
    for n in (1, 2, 3):
        for a in np.linspace(0, np.pi / (4 * n), 11):
            expected = (1 + np.cos(2 * n * a) * np.cos(2 * a)) / 2
            assert abs(analytics.eta_u(n, a) - expected) < 1e-12
            assert analytics.eta_u(n, a) >= 0.5 - 1e-15


def test_processor_formulas():
    for a in np.linspace(0, np.pi / 4, 9):
        assert abs(analytics.processor_fidelity(a, np.pi / 2) - 1) < 1e-12
    assert abs(analytics.beta_boundary(np.pi / 8) - np.pi / 4) < 1e-12
    for n in (1, 2, 3):
        for a in np.linspace(1e-3, np.pi / (4 * n), 15):
            b = 2 * n * a
            assert abs(analytics.processor_success(a, b) - analytics.success_probability(n, a)[0]) < 1e-12
            assert abs(analytics.processor_fidelity(a, b) - analytics.deterministic_fidelity(n, a)) < 1e-12


def test_monotone_in_n():
    for a in np.linspace(1e-3, np.pi / 20, 30):
        vals = [analytics.success_probability(n, a)[0] for n in range(1, 6)]
        assert np.all(np.diff(vals) >= -1e-12)


def test_monotonicity_in_alpha_fails_only_where_expansion_predicts():
    # n = 1 is flat then rising; for n >= 2 the alpha^2 coefficient is
    # negative, so P_succ first dips below n^2/(n^2+1)
    vals = [analytics.success_probability(1, a)[0] for a in np.linspace(0, np.pi / 4, 200)]
    assert np.all(np.diff(vals) >= -1e-12)
    for n in range(2, 6):
        coeff = (n ** 2 + 2 * n ** 4 - 3 * n ** 6) / (3 * (n ** 2 + 1) ** 2)
        assert coeff < 0
        grid = np.linspace(0, np.pi / (4 * n), 200)
        vals = np.array([analytics.success_probability(n, a)[0] for a in grid])
        assert vals[1] < vals[0]
        # beyond the dip the curve rises to 1
        lowest = int(np.argmin(vals))
        assert np.all(np.diff(vals[lowest:]) >= -1e-12)
        assert vals[-1] == pytest.approx(1.0, abs=1e-12)


def test_protocol_report():
    r = analytics.protocol_report(1, np.pi / 6)
    assert r.regime is Regime.LARGE
    assert abs(r.lambda_A + r.lambda_B - r.P_succ) < 1e-12
    assert abs(r.F_avg - (1 + 2 * r.F_e) / 3) < 1e-12
    r3 = analytics.protocol_report(1, np.pi / 6, d=3)
    assert r3.F_e is None and r3.P_succ == r.P_succ


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.floats(0.0, 1.0))
def test_values_are_probabilities(n, frac):
    a = frac * np.pi / (4 * n)
    p, _ = analytics.success_probability(n, a)
    f = analytics.deterministic_fidelity(n, a)
    assert 0 <= p <= 1 + 1e-12
    assert 0.5 <= f <= 1 + 1e-12
    assert p >= analytics.usd_success(n, a) - 1e-12
