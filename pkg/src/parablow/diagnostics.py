"""Energy functionals, a priori blow-up bounds and the per-step lemma checks.

Every integral is the lumped quadrature of the spatial operator, so the
discrete identities these checks rely on hold up to rounding only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spatial import dirichlet_energy, inner, quadrature


def phi(u, v, params, op):
    """``int (m/(m+1) u^{m+1} + p/(p+1) v^{p+1})``."""
    m, p = params.m, params.p
    return quadrature(op, m / (m + 1.0) * np.asarray(u) ** (m + 1.0) + p / (p + 1.0) * np.asarray(v) ** (p + 1.0))


def z_value(u, v, params, op):
    return z_from_phi(phi(u, v, params, op), params.m)


def z_from_phi(phi_value, m):
    if not phi_value > 0:
        raise ValueError("Z is undefined for Phi <= 0")
    return phi_value ** ((m - 1.0) / (m + 1.0))


def j_energy(u, v, alpha, op):
    """``int (|grad u|^2 + |grad v|^2 - 2 alpha u v)``."""
    return dirichlet_energy(op, u) + dirichlet_energy(op, v) - 2.0 * alpha * inner(op, u, v)


def psi_n(u_ref, u, v, params, op):
    """``(int (m u_ref^{m-p} u^{p+1} + p v^{p+1}))^{1/(p+1)}``; ``u_ref`` is the current level."""
    m, p = params.m, params.p
    integrand = m * np.asarray(u_ref) ** (m - p) * np.asarray(u) ** (p + 1.0) + p * np.asarray(v) ** (p + 1.0)
    return quadrature(op, integrand) ** (1.0 / (p + 1.0))


def f_rayleigh(u_ref, u, v, params, op):
    """``J(u, v) / psi_n(u, v)^2``."""
    s = psi_n(u_ref, u, v, params, op)
    if not s > 0:
        raise ValueError("F is undefined where psi vanishes")
    return j_energy(u, v, params.alpha, op) / s**2


def mu_n(u, params, op):
    m = params.m
    return m / (m + 1.0) * quadrature(op, np.asarray(u) ** (m + 1.0))


def blowup_upper_bound(u0, v0, params, op):
    """Upper bound on the numerical blow-up time, or ``None`` when ``J(u0, v0) >= 0``."""
    J0 = j_energy(u0, v0, params.alpha, op)
    if not J0 < 0:
        return None
    return (1.0 + params.m) / (1.0 - params.p) * phi(u0, v0, params, op) / (-J0)


def continuous_blowup_bound(u0, v0, params, op):
    """The bound for the exact solution; coincides with the numerical one when ``p == m``."""
    J0 = j_energy(u0, v0, params.alpha, op)
    if not J0 < 0:
        return None
    return (1.0 + params.m) / (1.0 - params.m) * phi(u0, v0, params, op) / (-J0)


def continuous_phi_envelope(phi0, t, T, m):
    """Upper bound for ``Phi(t)`` of the exact solution blowing up at ``T``."""
    if t >= T:
        return math.inf
    return (T / (T - t)) ** ((m + 1.0) / (1.0 - m)) * phi0


@dataclass(frozen=True)
class BlowupBounds:
    T_upper: float | None
    T_continuous: float | None
    T1: float
    T_star: float | None = None

    def consistent(self):
        """``T1 <= T* <= T_upper`` (vacuous unless both T* and the upper bound exist)."""
        if self.T_star is None or self.T_upper is None:
            return True
        return self.T1 <= self.T_star <= self.T_upper


def growth_envelope_check(steps, T_star, params, rtol=1e-8):
    """Check ``Phi_n^{1/(m+1)} <= (T*/(T*-t_n))^{1/(1-m)} Phi_0^{1/(m+1)}`` on every record.

    ``steps`` is any sequence with ``t`` and ``phi`` attributes (``StepReport``).
    Records at ``t_n >= T*`` are trivially satisfied.
    """
    return not growth_envelope_violations(steps, T_star, params, rtol)


def growth_envelope_violations(steps, T_star, params, rtol=1e-8):
    m = params.m
    steps = list(steps)
    if not steps:
        return []
    base = steps[0].phi ** (1.0 / (m + 1.0))
    bad = []
    for s in steps:
        if s.t >= T_star:
            continue
        lhs = s.phi ** (1.0 / (m + 1.0))
        rhs = (T_star / (T_star - s.t)) ** (1.0 / (1.0 - m)) * base
        if lhs > rhs * (1.0 + rtol):
            bad.append((s.n, lhs, rhs))
    return bad


@dataclass(frozen=True)
class ThetaEstimate:
    theta: float
    residual: float
    rhs: float
    bound: float | None
    m: float

    @property
    def bound_holds(self):
        return self.bound is None or self.theta**self.m <= self.bound * (1.0 + 1e-12)


class ThetaError(ValueError):
    pass


def theta_limit(u0, v0, params, op, rtol=1e-14):
    """Amplitude of the limit ``theta * rho1`` in the critical case ``alpha = lambda1``.

    Solves ``int (theta^m rho1^{m+1} + theta^p rho1^{p+1}) = int (u0^m + v0^p) rho1``
    by bisection; the left side is increasing in ``theta``.
    """
    m, p = params.m, params.p
    rho = op.rho1
    rhs = quadrature(op, (np.asarray(u0) ** m + np.asarray(v0) ** p) * rho)
    if not rhs > 0:
        raise ThetaError("right-hand side must be positive")
    I_m = quadrature(op, rho ** (m + 1.0))
    I_p = quadrature(op, rho ** (p + 1.0))

    def lhs(theta):
        return theta**m * I_m + theta**p * I_p

    lo, hi = 0.0, 1.0
    while lhs(hi) < rhs:
        lo, hi = hi, 2.0 * hi
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if lhs(mid) < rhs:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            break
    theta = 0.5 * (lo + hi)
    residual = abs(lhs(theta) - rhs)
    bound = None
    if params.symmetric:
        bound = quadrature(op, (np.asarray(u0) ** m + np.asarray(v0) ** m) * rho) / (2.0 * I_m)
    return ThetaEstimate(theta, residual, rhs, bound, m)


def interpolant(state_n, state_np1, t, params):
    """Time interpolant linear in ``u^m``; requires ``p == m``."""
    if not params.symmetric:
        raise ValueError("the time interpolant is defined for p == m only")
    t0, t1 = state_n.t, state_np1.t
    if not (t0 <= t <= t1):
        raise ValueError(f"t={t} outside [{t0}, {t1}]")
    m = params.m
    if t == t0:
        return np.array(state_n.u), np.array(state_n.v)
    if t == t1:
        return np.array(state_np1.u), np.array(state_np1.v)
    s = (t - t0) / (t1 - t0)
    um = state_n.u**m + s * (state_np1.u**m - state_n.u**m)
    vm = state_n.v**m + s * (state_np1.v**m - state_n.v**m)
    return um ** (1.0 / m), vm ** (1.0 / m)


# --- per-step lemma checks -------------------------------------------------
# Each returns the signed slack (>= 0 when the inequality holds) together with
# the scale the tolerance is measured against.


@dataclass(frozen=True)
class StepCheck:
    name: str
    slack: float
    scale: float
    rtol: float

    @property
    def ok(self):
        return self.slack >= -self.rtol * self.scale


def step_quantities(prev, new, params, op, dt=None):
    """Functionals needed by the per-step lemmas for the step ``prev -> new``."""
    un, vn, u1, v1 = prev.u, prev.v, new.u, new.v
    psi_old = psi_n(un, un, vn, params, op)
    psi_new = psi_n(un, u1, v1, params, op)
    J_old = j_energy(un, vn, params.alpha, op)
    J_new = j_energy(u1, v1, params.alpha, op)
    return dict(
        dt=new.t - prev.t if dt is None else dt,
        psi_old=psi_old,
        psi_new=psi_new,
        J_old=J_old,
        J_new=J_new,
        F_old=J_old / psi_old**2,
        F_new=J_new / psi_new**2,
        phi_old=phi(un, vn, params, op),
        phi_new=phi(u1, v1, params, op),
        mu_old=mu_n(un, params, op),
    )


def lemma_checks(prev, new, params, op, J0_negative=None, q=None, dt=None):
    """All per-step inequalities of the scheme, as a list of ``StepCheck``."""
    q = q or step_quantities(prev, new, params, op, dt)
    p = params.p
    dt = q["dt"]
    mid = q["psi_new"] ** (p - 1.0) - q["psi_old"] ** (p - 1.0)
    low = (1.0 - p) * dt * q["F_new"]
    up = (1.0 - p) * dt * q["F_old"]
    mid_scale = abs(mid)
    checks = [
        StepCheck("bracket_lower", mid - low, mid_scale, 1e-9),
        StepCheck("bracket_upper", up - mid, mid_scale, 1e-9),
        StepCheck("F_decrease", q["F_old"] - q["F_new"], 1.0 + abs(q["F_old"]), 1e-9),
        StepCheck("J_nonincrease", q["J_old"] - q["J_new"], 1.0 + abs(q["J_old"]), 1e-10),
        StepCheck("mu_le_phi", q["phi_old"] - q["mu_old"], q["phi_old"], 1e-12),
    ]
    if J0_negative is None:
        J0_negative = q["J_old"] < 0
    if J0_negative:
        po, pn = q["phi_old"], q["phi_new"]
        checks.append(StepCheck("phi_increase", pn - po, po, 1e-12))
        checks.append(StepCheck("phi_dissipation", dt * q["J_old"] - (po - pn), max(abs(po - pn), dt * abs(q["J_old"])), 1e-9))
        e = (p - 1.0) / (p + 1.0)
        lhs = po ** (2.0 / (p + 1.0)) * (pn**e - po**e)
        rhs = (1.0 - p) / (1.0 + params.m) * dt * q["J_old"]
        checks.append(StepCheck("phi_power_estimate", rhs - lhs, max(abs(lhs), abs(rhs)), 1e-9))
    return checks


def mass_functional(u, v, params, op):
    """``int (u^m + v^m) rho1``; nonincreasing along ``p == m`` runs at ``alpha = lambda1``."""
    m = params.m
    return quadrature(op, (np.asarray(u) ** m + np.asarray(v) ** m) * op.rho1)
