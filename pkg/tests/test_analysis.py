import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epidde.analysis import (
    characteristic,
    characteristic_determinant,
    classify_dfe,
    classify_endemic,
    critical_delay,
    critical_delay_by_root_tracking,
    dfe_coefficients,
    endemic_coefficients,
    endemic_equilibrium,
    endemic_exists,
    leading_root,
    omega_star,
    quarantine_branch_stable,
    reproduction_number,
    transversality,
)
from epidde.model import ModelParams, rhs

# parameter set with d2^2 < e2^2 at the crossing, used for the delay-induced loss
# of stability; found by scanning (gamma, alpha, beta) with the other defaults
HOPF = ModelParams(gamma=0.05, alpha=0.01)
HOPF_BETA = 0.2


def next_generation_r0(p: ModelParams, beta: float) -> float:
    """Spectral radius of F V^-1 on the (E, I) block, treating the delayed
    removal as an exit at rate p e^{-gamma tau}."""
    F = np.array([[0.0, beta], [0.0, 0.0]])
    V = np.array([[p.epsilon + p.mu, 0.0],
                  [-p.epsilon, p.gamma + p.mu + p.p * math.exp(-p.gamma * p.tau)]])
    return max(abs(np.linalg.eigvals(F @ np.linalg.inv(V))))


params_st = st.builds(
    ModelParams,
    mu=st.floats(0.005, 0.3), epsilon=st.floats(0.01, 2.0), gamma=st.floats(0.01, 1.0),
    p=st.floats(0.0, 1.0), tau=st.floats(0.0, 20.0), kappa=st.floats(0.0, 30.0),
    rho=st.floats(0.0, 1.0), alpha=st.floats(0.0, 1.0), delta=st.floats(0.0, 2.0))


def test_reproduction_number_values():
    p = ModelParams()
    assert reproduction_number(p, 0.5) == pytest.approx(0.881942, abs=1e-6)
    assert reproduction_number(p, 1.0) == pytest.approx(1.763884, abs=1e-6)


@settings(max_examples=200, deadline=None)
@given(params_st, st.floats(0.0, 5.0))
def test_reproduction_number_matches_next_generation_matrix(p, beta):
    assert reproduction_number(p, beta) == pytest.approx(next_generation_r0(p, beta), rel=1e-12,
                                                         abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(params_st, st.floats(0.01, 5.0))
def test_endemic_state_exists_iff_r0_above_one(p, beta):
    r0 = reproduction_number(p, beta)
    if abs(r0 - 1) < 1e-9:
        return
    assert endemic_exists(p, beta) == (r0 > 1)


@settings(max_examples=200, deadline=None)
@given(params_st, st.floats(0.01, 5.0))
def test_endemic_state_is_a_steady_state(p, beta):
    eq = endemic_equilibrium(p, beta)
    if eq is None:
        return
    assert all(v >= 0 for v in eq)
    assert sum(eq) == pytest.approx(1.0, abs=1e-9)
    residual = rhs(0.0, list(eq), eq.i, eq.q, p.with_beta(beta))
    assert np.max(np.abs(residual)) < 1e-10


def test_endemic_state_frozen_values():
    eq = endemic_equilibrium(ModelParams(), 1.0)
    expected = (0.566930, 0.104030, 0.047361, 0.077850, 0.198430, 0.005399)
    assert np.allclose(eq, expected, atol=2e-6)
    assert endemic_equilibrium(ModelParams(), 0.5) is None


def test_dfe_coefficients_from_subsystem_determinant():
    # (λ+ε+μ)(λ+γ+μ+c e^{-λτ}) - εβ expanded by hand
    p, beta = ModelParams(), 0.84
    c = p.p * math.exp(-p.gamma * p.tau)
    co = dfe_coefficients(p, beta)
    assert co.d1 == pytest.approx(p.epsilon + p.gamma + 2 * p.mu)
    assert co.d2 == pytest.approx((p.epsilon + p.mu) * (p.gamma + p.mu) - p.epsilon * beta)
    assert co.e1 == pytest.approx(c)
    assert co.e2 == pytest.approx(c * (p.epsilon + p.mu))
    assert co.d2 == pytest.approx(-0.11185, abs=5e-6)
    assert co.e2 == pytest.approx(0.058301, abs=5e-6)
    assert co.f1 == pytest.approx(co.d1**2 - 2 * co.d2 - co.e1**2)
    assert co.f2 == pytest.approx(co.d2**2 - co.e2**2)


def _random_lambdas(n, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(-1, 1, n) + 1j * rng.uniform(-2, 2, n)


@pytest.mark.parametrize("equilibrium,beta", [("dfe", 0.5), ("dfe", 1.0), ("endemic", 1.0)])
def test_factored_characteristic_matches_jacobian_determinant(equilibrium, beta):
    p = ModelParams()
    for lam in _random_lambdas(100, 7):
        a = characteristic(lam, p, beta, equilibrium)
        b = characteristic_determinant(lam, p, beta, equilibrium)
        assert abs(a - b) <= 1e-9 * max(abs(a), abs(b))


def test_endemic_characteristic_undefined_below_threshold():
    with pytest.raises(Exception):
        characteristic(0.1 + 0.1j, ModelParams(), 0.5, "endemic")


def test_quarantine_branch_at_defaults():
    # (mu + delta*alpha)^2 = 0.0663^2 vs (rho(1-alpha))^2 = 0.0711^2
    assert not quarantine_branch_stable(ModelParams())
    assert quarantine_branch_stable(HOPF)


def test_omega_star_solves_modulus_equation():
    co = dfe_coefficients(HOPF, HOPF_BETA)
    w = omega_star(co)
    assert w**4 + co.f1 * w**2 + co.f2 == pytest.approx(0.0, abs=1e-14)


def test_critical_delay_frozen():
    crit = critical_delay(HOPF, HOPF_BETA)
    assert crit.found
    assert crit.tau_star == pytest.approx(8.654480, abs=2e-6)
    assert crit.omega_star == pytest.approx(0.187004, abs=2e-6)
    # self-consistency: i*omega is a root of the factored function at tau*
    p_star = HOPF.replace(tau=crit.tau_star)
    val = characteristic(1j * crit.omega_star, p_star, HOPF_BETA, "dfe")
    scale = abs(characteristic(1.0 + 1j * crit.omega_star, p_star, HOPF_BETA, "dfe"))
    assert abs(val) < 1e-7 * scale


def test_critical_delay_agrees_with_root_tracking():
    crit = critical_delay(HOPF, HOPF_BETA)
    tracked = critical_delay_by_root_tracking(HOPF, HOPF_BETA, np.arange(7.0, 10.0001, 0.01))
    assert abs(crit.tau_star - tracked) < 0.05


def test_leading_root_changes_sign_across_tau_star():
    tau_star = critical_delay(HOPF, HOPF_BETA).tau_star
    below = leading_root(HOPF.replace(tau=0.9 * tau_star), HOPF_BETA)
    at = leading_root(HOPF.replace(tau=tau_star), HOPF_BETA)
    above = leading_root(HOPF.replace(tau=1.1 * tau_star), HOPF_BETA)
    assert below.real < 0 < above.real
    assert abs(at.real) < 1e-8


def test_leading_root_is_a_root():
    p = HOPF.replace(tau=5.0)
    lam = leading_root(p, HOPF_BETA)
    scale = abs(characteristic(lam + 1, p, HOPF_BETA, "dfe"))
    assert abs(characteristic(lam, p, HOPF_BETA, "dfe")) < 1e-8 * scale


def test_transversality_frozen():
    crit = critical_delay(HOPF, HOPF_BETA)
    tr = transversality(HOPF, HOPF_BETA, crit.omega_star, crit.tau_star)
    assert tr.x == pytest.approx(119.87, rel=1e-3)
    assert tr.y == pytest.approx(-83.28, rel=1e-3)
    assert tr.z == pytest.approx(11.55, rel=1e-3)
    assert tr.holds


def test_root_velocity_positive_at_crossing():
    # independent check of transversality: d Re(lambda)/d tau > 0 by finite differences
    tau_star = critical_delay(HOPF, HOPF_BETA).tau_star
    h = 1e-3
    up = leading_root(HOPF.replace(tau=tau_star + h), HOPF_BETA).real
    down = leading_root(HOPF.replace(tau=tau_star - h), HOPF_BETA).real
    assert (up - down) / (2 * h) > 0


def test_classify_dfe_verdicts():
    assert classify_dfe(ModelParams(), 1.0).verdict == "unstable"
    rep = classify_dfe(HOPF, HOPF_BETA)
    assert rep.verdict == "stable_below_tau_star"
    assert rep.tau_star == pytest.approx(8.654480, abs=2e-6)
    # at defaults the quarantine hypothesis fails, so the criterion gives no verdict
    assert classify_dfe(ModelParams(), 0.5).verdict == "inconclusive"


def test_classify_dfe_stable_for_all_delays():
    p = HOPF.replace(p=0.05)
    co = dfe_coefficients(p, 0.05)
    assert co.d2**2 > co.e2**2
    assert classify_dfe(p, 0.05).verdict == "stable_all_delays"


def test_classify_endemic():
    assert classify_endemic(ModelParams(), 0.5) is None
    rep = classify_endemic(ModelParams(), 1.0)
    assert rep.state == endemic_equilibrium(ModelParams(), 1.0)
    assert rep.conditions["c_all_positive"]
    assert not rep.conditions["quarantine_branch"]
    assert rep.verdict == "inconclusive"
    assert rep.to_dict()["verdict"] == "inconclusive"


def test_sextic_coefficients_from_modulus_identity():
    # |P(iw)|^2 - |Q(iw)|^2 expanded numerically must match the sextic
    co = endemic_coefficients(ModelParams(), 1.0)
    k = co.sextic()
    for w in (0.1, 0.37, 1.3):
        lam = 1j * w
        P = lam**3 + co.a1 * lam**2 + co.a2 * lam + co.a3
        Q = co.b0 * lam**2 + co.b1 * lam + co.b2
        poly = w**6 + k[0] * w**4 + k[1] * w**2 + k[2]
        assert abs(P) ** 2 - abs(Q) ** 2 == pytest.approx(poly, rel=1e-10, abs=1e-14)


def test_stability_matches_simulation_on_hopf_set():
    from epidde.model import simulate

    tau_star = critical_delay(HOPF, HOPF_BETA).tau_star
    calm = simulate(HOPF.with_beta(HOPF_BETA).replace(tau=0.8 * tau_star), horizon=1500.0)
    assert abs(calm.states[-1, 2]) < 1e-8
