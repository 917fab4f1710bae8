"""One implicit step of the time-derivative-nonlinear scheme.

For the transformed system the new level ``(u, v)`` solves, nodewise,

    m/((1-p) dt) * u * un^{m-p} * (un^{p-1} - u^{p-1}) + A u = alpha v
    p/((1-p) dt) * v *          (vn^{p-1} - v^{p-1}) + A v = alpha u

which we compute by Keller's monotone iteration started from a constant
supersolution. Each sweep solves two decoupled linear M-matrix systems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import State, StepOptions
from .spatial import ShiftedOperator


class StepError(RuntimeError):
    pass


class StepConditionError(StepError):
    """The solvability constraint on ``dt`` fails for the current state."""


class ConvergenceError(StepError):
    def __init__(self, message, iterations, residual):
        super().__init__(f"{message}: {iterations} iterations, last change {residual:.3e}")
        self.iterations = iterations
        self.residual = residual


class MonotonicityError(StepError):
    pass


class ConsistencyError(StepError):
    """Supersolution bracket has the wrong signs; indicates a coding error."""


# inflation of the constant supersolution; both inequalities are tight at the
# sup-norm node so rounding could otherwise flip them
SUPER_INFLATION = 1e-11
BISECT_NUDGE = 1e-12
BISECT_RTOL = 1e-12
BISECT_MAX = 200
# allowed rise between consecutive Keller iterates, relative to the sup-norm
MONOTONE_RTOL = 1e-13
ROUNDOFF_FLOOR = 1e-14


@dataclass(frozen=True)
class Supersolution:
    c1: float
    c2: float
    x0: float
    a: float
    b: float


@dataclass(frozen=True)
class StepStats:
    iterations: int
    change: float
    residual: float
    max_rise: float
    supersolution: Supersolution


@dataclass(frozen=True)
class ExistenceHorizon:
    lambda0: float
    phi0: float
    T1: float
    p: float

    def majorant(self, t):
        """``lambda0 / (1 - t*phi0)^{1/(1-p)}``, infinite once ``t*phi0 >= 1``."""
        s = 1.0 - t * self.phi0
        if s <= 0:
            return math.inf
        return self.lambda0 / s ** (1.0 / (1.0 - self.p))


def stability_product(state, params):
    return state.sup_u ** (1.0 - params.m) * state.sup_v ** (1.0 - params.p)


def check_step_condition(state, params, dt):
    if params.alpha == 0.0:
        return True
    m, p, a = params.m, params.p, params.alpha
    # multiplied out so that tiny alpha*dt cannot underflow into a division by zero
    return (a * (1.0 - p) * dt) ** 2 * stability_product(state, params) < m * p


def max_stable_dt(state, params, opts):
    if params.alpha == 0.0:
        return opts.dt_max
    m, p, a = params.m, params.p, params.alpha
    num = opts.sigma * math.sqrt(m * p)
    den = a * (1.0 - p) * math.sqrt(stability_product(state, params))
    # compare before dividing: den may underflow for tiny alpha
    if num >= opts.dt_max * den:
        return opts.dt_max
    return num / den


def supersolution_bracket(state, params, dt):
    m, p, a = params.m, params.p, params.alpha
    lo = (1.0 - p) / p * dt * a * state.sup_v ** (1.0 - p)
    hi = m / ((1.0 - p) * a * dt) * state.sup_u ** (m - 1.0)
    return lo, hi


def supersolution_root_function(x, state, params, dt):
    """Positive multiple of the bracketing function whose root fixes ``C2/C1``.

    Equals ``f(x)`` up to the factor ``x * ||v||^{p-1} / K`` with
    ``K = (m/((1-p) alpha dt))^{(1-p)/(1-m)}``; this form stays O(1) when ``dt``
    is tiny, where the unscaled one overflows.
    """
    a, b = supersolution_bracket(state, params, dt)
    p = params.p
    return state.sup_v ** (p - 1.0) * (1.0 - a / x) - state.sup_u ** (p - 1.0) * x ** (p - 1.0) * (1.0 - x / b)


def supersolution_f(x, state, params, dt):
    """The unscaled bracketing function (overflows for very small ``dt``)."""
    m, p, al = params.m, params.p, params.alpha
    a, b = supersolution_bracket(state, params, dt)
    k = m / ((1.0 - p) * al * dt)
    return p / ((1.0 - p) * al * dt) * a * b ** ((m - p) / (1.0 - m)) * x**p * (x - b) + k ** (
        (1.0 - p) / (1.0 - m)
    ) * (x - a)


def constant_supersolution(state, params, dt):
    """Constants ``(C1, C2)`` dominating ``(u_n, v_n)`` that are a supersolution of the step."""
    m, p, al = params.m, params.p, params.alpha
    if al == 0.0:
        return Supersolution(state.sup_u, state.sup_v, state.sup_v / state.sup_u, 0.0, math.inf)
    a, b = supersolution_bracket(state, params, dt)
    if not a < b:
        raise StepConditionError(f"empty supersolution bracket a={a:.6e} >= b={b:.6e} at dt={dt:.6e}")
    lo, hi = a * (1.0 + BISECT_NUDGE), b * (1.0 - BISECT_NUDGE)
    g = lambda x: supersolution_root_function(x, state, params, dt)  # noqa: E731
    if not (g(lo) < 0.0 < g(hi)):
        raise ConsistencyError(f"bracket signs wrong: f(a)={g(lo):.3e}, f(b)={g(hi):.3e}")
    # a and b may be many decades apart: bisect geometrically
    for _ in range(BISECT_MAX):
        if hi / lo - 1.0 <= BISECT_RTOL:
            break
        mid = math.sqrt(lo * hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    x0 = hi  # f(x0) >= 0 side
    c1 = state.sup_u / (1.0 - al * (1.0 - p) / m * dt * x0 * state.sup_u ** (1.0 - m)) ** (1.0 / (1.0 - p))
    c2 = state.sup_v / (1.0 - al * (1.0 - p) / p * (dt / x0) * state.sup_v ** (1.0 - p)) ** (1.0 / (1.0 - p))
    # x0 sits on the f >= 0 side, so x0*c1 >= c2 and the larger value keeps both inequalities
    c2 = max(c2, x0 * c1)
    s = 1.0 + SUPER_INFLATION
    return Supersolution(c1 * s, c2 * s, x0, a, b)


def supersolution_defects(sup, state, params, dt):
    """Nodewise slack of the two constant-supersolution inequalities (>= 0 when satisfied)."""
    m, p, al = params.m, params.p, params.alpha
    k = 1.0 / ((1.0 - p) * dt)
    u, v = state.u, state.v
    d1 = m * k * (sup.c1 * u ** (m - 1.0) - sup.c1**p * u ** (m - p)) - al * sup.c2
    d2 = p * k * (sup.c2 * v ** (p - 1.0) - sup.c2**p) - al * sup.c1
    return d1, d2


class StepSystem:
    """Coefficients of the step from ``state`` with time step ``dt``."""

    def __init__(self, state, dt, op, params, lin_tol=1e-12):
        m, p = params.m, params.p
        k = 1.0 / ((1.0 - p) * dt)
        self.state, self.dt, self.op, self.params = state, dt, op, params
        self.du = m * k * state.u ** (m - 1.0)
        self.cu = m * k * state.u ** (m - p)
        self.dv = p * k * state.v ** (p - 1.0)
        self.cv = p * k
        self.Su = ShiftedOperator(op, self.du, lin_tol)
        self.Sv = ShiftedOperator(op, self.dv, lin_tol)

    def residual(self, u, v):
        """Scheme residual divided by ``dt`` (so it reads ``A u + ... - alpha v``)."""
        a, p = self.params.alpha, self.params.p
        ru = self.Su.matvec(u) - a * v - self.cu * u**p
        rv = self.Sv.matvec(v) - a * u - self.cv * v**p
        return ru, rv

    def scaled_residual(self, u, v):
        """Residual divided nodewise by the diagonal of the shifted operator (units of u, v)."""
        ru, rv = self.residual(u, v)
        return max(float(np.max(np.abs(ru / self.Su.diag))), float(np.max(np.abs(rv / self.Sv.diag))))

    def sweep(self, u, v):
        a, p = self.params.alpha, self.params.p
        un = self.Su.solve(a * v + self.cu * u**p)
        vn = self.Sv.solve(a * u + self.cv * v**p)
        return un, vn


def monotone_step(state, dt, op, params, opts=None, record=None):
    """Advance ``state`` by ``dt``. Returns ``(new_state, StepStats)``.

    ``record``, if a list, receives every Keller iterate ``(u_j, v_j)``.
    """
    opts = opts or StepOptions()
    if not check_step_condition(state, params, dt):
        raise StepConditionError(f"dt={dt:.6e} violates the solvability condition at t={state.t:.6e}")
    sup = constant_supersolution(state, params, dt)
    system = StepSystem(state, dt, op, params, opts.lin_tol)
    u = np.full(op.size, sup.c1)
    v = np.full(op.size, sup.c2)
    if record is not None:
        record.append((u, v))
    tol = opts.tol_abs + opts.tol_rel * max(sup.c1, sup.c2)
    max_rise = 0.0
    change = last_change = math.inf
    for j in range(1, opts.max_iter + 1):
        un, vn = system.sweep(u, v)
        if not (np.all(un > 0) and np.all(vn > 0)):
            raise MonotonicityError(f"Keller iterate {j} lost positivity at t={state.t:.6e}")
        rise = max(float(np.max((un - u) / u.max())), float(np.max((vn - v) / v.max())))
        max_rise = max(max_rise, rise)
        change = max(float(np.max(np.abs(un - u))), float(np.max(np.abs(vn - v))))
        u, v = un, vn
        if record is not None:
            record.append((u, v))
        if change <= tol:
            break
        # rounding floor: further sweeps only shuffle the last bits
        if change <= ROUNDOFF_FLOOR * max(sup.c1, sup.c2) and change >= last_change:
            break
        last_change = change
    else:
        raise ConvergenceError(f"monotone iteration did not converge at t={state.t:.6e}", opts.max_iter, change)
    stats = StepStats(j, change, system.scaled_residual(u, v), max_rise, sup)
    return State(u, v, state.t + dt, state.n + 1), stats


def existence_horizon(u0, v0, params):
    lam0 = max(float(np.max(u0)), float(np.max(v0)))
    m, p, a = params.m, params.p, params.alpha
    if a == 0.0:
        return ExistenceHorizon(lam0, 0.0, math.inf, p)
    T1 = min(m / (a * (1.0 - p)) * lam0 ** (m - 1.0), p / (a * (1.0 - p)) * lam0 ** (p - 1.0))
    # the majorant rate is 1/T1 (exponents 1-m, 1-p); with m-1, p-1 it fails for lam0 > 1
    return ExistenceHorizon(lam0, 1.0 / T1, T1, p)


def detect_blowup(state, opts, dt_proposed):
    return state.sup_u + state.sup_v >= opts.blowup_threshold or dt_proposed < opts.dt_min


def to_original_variables(u, v, params):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(u < 0) or np.any(v < 0):
        raise ValueError("original variables need nonnegative fields")
    return u**params.m, v**params.p


def from_original_variables(u1, v1, params):
    u1 = np.asarray(u1, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    if np.any(u1 < 0) or np.any(v1 < 0):
        raise ValueError("original variables need nonnegative fields")
    return u1 ** (1.0 / params.m), v1 ** (1.0 / params.p)
