import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import operator
from parablow import diagnostics
from parablow.diagnostics import (
    BlowupBounds,
    StepCheck,
    ThetaError,
    blowup_upper_bound,
    continuous_blowup_bound,
    continuous_phi_envelope,
    f_rayleigh,
    growth_envelope_check,
    growth_envelope_violations,
    interpolant,
    j_energy,
    lemma_checks,
    mass_functional,
    mu_n,
    phi,
    psi_n,
    theta_limit,
    z_from_phi,
    z_value,
)
from parablow.model import ModelParams, State, StepOptions
from parablow.spatial import inner, quadrature
from parablow.step import existence_horizon, max_stable_dt, monotone_step

HALF = ModelParams(0.5, 0.5, 0.0)
TIGHT = StepOptions(tol_abs=1e-14, tol_rel=1e-14)


# --- functionals ---------------------------------------------------------------


def test_phi_examples():
    op = operator(3)
    assert phi(np.zeros(3), np.zeros(3), HALF, op) == 0.0
    # (1/3 + 1/3) * weight sum 3/4
    assert phi(np.ones(3), np.ones(3), HALF, op) == pytest.approx(0.5, rel=1e-14)


@given(st.floats(0.01, 100), st.floats(0.05, 0.95))
def test_phi_homogeneity(c, m):
    op = operator(8)
    prm = ModelParams(m, m / 2, 0.0)
    u = op.rho1 + 0.3
    zero = np.zeros(8)
    assert phi(c * u, zero, prm, op) == pytest.approx(c ** (m + 1) * phi(u, zero, prm, op), rel=1e-12)


def test_z_examples():
    assert z_from_phi(1.0, 0.3) == 1.0
    assert z_from_phi(8.0, 0.5) == pytest.approx(0.5, rel=1e-14)
    assert z_from_phi(2.0, 0.5) < z_from_phi(1.0, 0.5)
    with pytest.raises(ValueError):
        z_from_phi(0.0, 0.5)
    op = operator(3)
    assert z_value(np.ones(3), np.ones(3), HALF, op) == pytest.approx(0.5 ** (-1 / 3))


def test_j_energy_eigen_identity(op32):
    r = op32.rho1
    lam = op32.lambda1
    rr = inner(op32, r, r)
    assert j_energy(np.zeros(32), np.zeros(32), 0.0, op32) == 0.0
    for a in (0.0, 0.5 * lam, 2 * lam):
        assert j_energy(r, r, a, op32) == pytest.approx(2 * (lam - a) * rr, rel=1e-11)
    assert abs(j_energy(r, r, lam, op32)) <= 1e-10 * lam * rr
    assert j_energy(r, r, 2 * lam, op32) < 0


def test_psi_symmetric_is_independent_of_reference(op8, rng):
    prm = ModelParams(0.4, 0.4, 0.0)
    u, v = rng.uniform(0.1, 2, 8), rng.uniform(0.1, 2, 8)
    a = psi_n(rng.uniform(0.1, 5, 8), u, v, prm, op8)
    b = psi_n(rng.uniform(0.1, 5, 8), u, v, prm, op8)
    assert a == pytest.approx(b, rel=1e-14)
    ref = quadrature(op8, prm.m * (u**1.4 + v**1.4)) ** (1 / 1.4)
    assert a == pytest.approx(ref, rel=1e-14)
    assert psi_n(u, np.zeros(8), np.zeros(8), prm, op8) == 0.0


@given(arrays(np.float64, 8, elements=st.floats(0.01, 10)), arrays(np.float64, 8, elements=st.floats(0.01, 10)), st.floats(0.05, 0.95))
def test_psi_power_equals_scaled_phi(u, v, m):
    op = operator(8)
    prm = ModelParams(m, m, 0.0)
    assert psi_n(u, u, v, prm, op) ** (m + 1) == pytest.approx((m + 1) * phi(u, v, prm, op), rel=1e-12)


def test_f_rayleigh_examples(op32):
    r = op32.rho1
    prm = ModelParams(0.5, 0.5, op32.lambda1)
    assert abs(f_rayleigh(r, r, r, prm, op32)) <= 1e-10
    assert f_rayleigh(r, r, 0.5 * r, prm.with_alpha(0.0), op32) > 0
    with pytest.raises(ValueError):
        f_rayleigh(r, np.zeros(32), np.zeros(32), prm, op32)


@given(st.floats(0.1, 10), st.floats(0.1, 0.9), st.floats(0.1, 1.0), st.floats(0.0, 30.0))
def test_f_rayleigh_scale_invariant(c, m, ratio, a):
    # J is 2-homogeneous and psi is 1-homogeneous in (u, v), so F is 0-homogeneous
    op = operator(8)
    prm = ModelParams(m, m * ratio, a)
    u = op.rho1 + 0.1
    v = 0.7 * op.rho1 + 0.2
    Fc = f_rayleigh(u, c * u, c * v, prm, op)
    F1 = f_rayleigh(u, u, v, prm, op)
    assert Fc == pytest.approx(F1, rel=1e-10, abs=1e-12)
    assert j_energy(c * u, c * v, a, op) == pytest.approx(c**2 * j_energy(u, v, a, op), rel=1e-10, abs=1e-12)
    assert psi_n(u, c * u, c * v, prm, op) == pytest.approx(c * psi_n(u, u, v, prm, op), rel=1e-12)


def test_mu_not_above_phi(op8, rng):
    prm = ModelParams(0.6, 0.3, 0.0)
    u, v = rng.uniform(0.1, 3, 8), rng.uniform(0.1, 3, 8)
    assert mu_n(u, prm, op8) <= phi(u, v, prm, op8)


# --- bounds --------------------------------------------------------------------


def test_blowup_bound_formula(op32):
    prm = ModelParams(0.5, 0.5, 2 * op32.lambda1)
    u = 2 * op32.rho1
    J0 = j_energy(u, u, prm.alpha, op32)
    P0 = phi(u, u, prm, op32)
    assert blowup_upper_bound(u, u, prm, op32) == pytest.approx(3.0 * P0 / -J0, rel=1e-14)
    # p == m: numerical and continuous bounds coincide
    assert continuous_blowup_bound(u, u, prm, op32) == blowup_upper_bound(u, u, prm, op32)
    assert blowup_upper_bound(u, u, prm.with_alpha(0.0), op32) is None
    assert continuous_blowup_bound(u, u, prm.with_alpha(0.0), op32) is None
    # p < m: the numerical bound is the smaller factor (1-p) in the denominator
    asym = ModelParams(0.5, 0.25, 2 * op32.lambda1)
    assert blowup_upper_bound(u, u, asym, op32) < continuous_blowup_bound(u, u, asym, op32)


def test_blowup_bound_unit_example(monkeypatch):
    # Phi0 = 1 and J0 = -1 with m = p = 1/2 give (1.5 / 0.5) * 1 = 3
    monkeypatch.setattr(diagnostics, "phi", lambda *a: 1.0)
    monkeypatch.setattr(diagnostics, "j_energy", lambda *a: -1.0)
    assert diagnostics.blowup_upper_bound(None, None, HALF, None) == 3.0
    monkeypatch.setattr(diagnostics, "j_energy", lambda *a: 0.0)
    assert diagnostics.blowup_upper_bound(None, None, HALF, None) is None


def test_bounds_consistency():
    assert BlowupBounds(1.0, 1.0, 0.1, 0.5).consistent()
    assert not BlowupBounds(0.4, 1.0, 0.1, 0.5).consistent()
    assert not BlowupBounds(1.0, 1.0, 0.6, 0.5).consistent()
    assert BlowupBounds(None, None, 0.1, 0.5).consistent()


def test_continuous_phi_envelope():
    assert continuous_phi_envelope(2.0, 0.0, 1.0, 0.5) == 2.0
    assert continuous_phi_envelope(2.0, 0.5, 1.0, 0.5) == pytest.approx(2.0 * 2**3)
    assert continuous_phi_envelope(2.0, 1.0, 1.0, 0.5) == math.inf


class Rec:
    def __init__(self, n, t, phi):
        self.n, self.t, self.phi = n, t, phi


def test_growth_envelope_trivial_cases():
    prm = ModelParams(0.5, 0.5, 1.0)
    assert growth_envelope_check([Rec(0, 0.0, 3.0)], 1.0, prm)
    assert growth_envelope_check([Rec(0, 0.0, 3.0), Rec(1, 1.0, 1e30)], 1.0, prm)
    bad = [Rec(0, 0.0, 1.0), Rec(1, 0.5, 1e3)]
    assert not growth_envelope_check(bad, 1.0, prm)
    assert growth_envelope_violations(bad, 1.0, prm)[0][0] == 1
    assert growth_envelope_check([], 1.0, prm)


# --- theta ---------------------------------------------------------------------


@pytest.mark.parametrize("c", [0.3, 1.0, 4.0])
def test_theta_for_eigen_data(op32, c):
    prm = ModelParams(0.5, 0.5, op32.lambda1)
    est = theta_limit(c * op32.rho1, c * op32.rho1, prm, op32)
    assert est.theta == pytest.approx(c, rel=1e-12)
    assert est.residual <= 1e-10 * est.rhs
    # the bound is attained for u0 = v0 = c rho1
    assert est.theta**prm.m == pytest.approx(est.bound, rel=1e-12)
    assert est.bound_holds


def test_theta_monotone_in_data(op32, rng):
    prm = ModelParams(0.5, 0.5, op32.lambda1)
    u, v = rng.uniform(0.1, 2, 32), rng.uniform(0.1, 2, 32)
    a = theta_limit(u, v, prm, op32)
    b = theta_limit(2 * u, v, prm, op32)
    assert b.theta > a.theta
    assert a.bound_holds and b.bound_holds


@given(arrays(np.float64, 8, elements=st.floats(0.01, 50)), arrays(np.float64, 8, elements=st.floats(0.01, 50)), st.floats(0.1, 0.9), st.floats(0.1, 1.0))
def test_theta_solves_defining_equation(u, v, m, ratio):
    op = operator(8)
    prm = ModelParams(m, m * ratio, op.lambda1)
    est = theta_limit(u, v, prm, op)
    assert est.residual <= 1e-10 * est.rhs
    if prm.symmetric:
        assert est.bound_holds
    else:
        assert est.bound is None


def test_theta_rejects_zero_data(op8):
    with pytest.raises(ThetaError):
        theta_limit(np.zeros(8), np.zeros(8), ModelParams(0.5, 0.5, 1.0), op8)


# --- interpolant ---------------------------------------------------------------


def test_interpolant_midpoint_and_endpoints():
    prm = ModelParams(0.5, 0.5, 0.0)
    a = State([1.0, 2.0], [1.0, 3.0], t=0.0)
    b = State([4.0, 2.0], [0.25, 3.0], t=0.1, n=1)
    u, v = interpolant(a, b, 0.05, prm)
    assert u[0] == pytest.approx(2.25, rel=1e-14)
    assert u[1] == pytest.approx(2.0, rel=1e-14)
    u0, _ = interpolant(a, b, 0.0, prm)
    u1, v1 = interpolant(a, b, 0.1, prm)
    np.testing.assert_array_equal(u0, a.u)
    np.testing.assert_array_equal(u1, b.u)
    np.testing.assert_array_equal(v1, b.v)
    with pytest.raises(ValueError):
        interpolant(a, b, 0.2, prm)
    with pytest.raises(ValueError):
        interpolant(a, b, 0.05, ModelParams(0.5, 0.4, 0.0))


# --- per-step lemma checks ---------------------------------------------------------


def test_step_check_tolerance():
    assert StepCheck("x", -1e-12, 1.0, 1e-9).ok
    assert not StepCheck("x", -1e-6, 1.0, 1e-9).ok


def _fixed_run(op, prm, u0, v0, steps):
    s = State(u0, v0)
    dt = min(max_stable_dt(s, prm, TIGHT), existence_horizon(u0, v0, prm).T1 / (steps + 1))
    out = [s]
    for _ in range(steps):
        s, _ = monotone_step(s, dt, op, prm, TIGHT)
        out.append(s)
    return out


@given(st.data())
def test_lemmas_hold_along_random_runs(data):
    n = data.draw(st.sampled_from([4, 8, 16]))
    op = operator(n)
    m = data.draw(st.floats(0.1, 0.95))
    prm = ModelParams(m, m * data.draw(st.floats(0.1, 1.0)), data.draw(st.sampled_from([0.0, 0.5, 1.0, 2.0, 3.0])) * op.lambda1)
    vals = arrays(np.float64, n, elements=st.floats(0.05, 3.0))
    states = _fixed_run(op, prm, data.draw(vals), data.draw(vals), 5)
    J0neg = j_energy(states[0].u, states[0].v, prm.alpha, op) < 0
    for a, b in zip(states[:-1], states[1:]):
        for chk in lemma_checks(a, b, prm, op, J0_negative=J0neg):
            assert chk.ok, chk


def test_lemma_names_with_negative_energy(op32):
    prm = ModelParams(0.5, 0.5, 2 * op32.lambda1)
    states = _fixed_run(op32, prm, 3 * op32.rho1, 3 * op32.rho1, 3)
    names = [c.name for c in lemma_checks(states[0], states[1], prm, op32)]
    assert names == [
        "bracket_lower",
        "bracket_upper",
        "F_decrease",
        "J_nonincrease",
        "mu_le_phi",
        "phi_increase",
        "phi_dissipation",
        "phi_power_estimate",
    ]


def test_lemma_checks_detect_a_wrong_step(op8):
    prm = ModelParams(0.5, 0.5, 0.0)
    a = State(op8.rho1, op8.rho1)
    # growing while J > 0 contradicts the energy decay
    b = State(2 * op8.rho1, 2 * op8.rho1, t=0.01, n=1)
    failed = {c.name for c in lemma_checks(a, b, prm, op8) if not c.ok}
    assert "J_nonincrease" in failed


def test_mass_functional_nonincreasing_at_critical(op32, rng):
    prm = ModelParams(0.5, 0.5, op32.lambda1)
    u0 = rng.uniform(0.2, 2.0, 32)
    v0 = rng.uniform(0.2, 2.0, 32)
    states = _fixed_run(op32, prm, u0, v0, 20)
    M0 = mass_functional(u0, v0, prm, op32)
    for s in states:
        assert mass_functional(s.u, s.v, prm, op32) <= M0 + 1e-9
