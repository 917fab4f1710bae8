"""Independent references for the step engine.

The Newton solver attacks the same nonlinear step equations as the monotone
iteration but shares nothing with it beyond the residual coefficients and
the constant supersolution used as a starting point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import solve_banded

from .model import State, StepOptions
from .step import StepConditionError, StepSystem, check_step_condition, constant_supersolution, monotone_step


class NewtonDivergence(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleConfig:
    damping: float = 0.5
    tol: float = 1e-13
    max_iter: int = 100
    max_halvings: int = 40
    refinements: tuple = (1e-3, 5e-4, 2.5e-4)

    def __post_init__(self):
        if not 0 < self.damping < 1:
            raise ValueError("damping factor must lie in (0, 1)")
        if len(self.refinements) < 2:
            raise ValueError("need at least two refinement levels")


def _newton_solve(system, u, v, rhs):
    """Solve with the Jacobian of the step residual at ``(u, v)``."""
    p, a = system.params.p, system.params.alpha
    ju = system.Su.diag - p * system.cu * u ** (p - 1.0)
    jv = system.Sv.diag - p * system.cv * v ** (p - 1.0)
    n = system.op.size
    if system.op.spec.dim != 1:
        delta = spla.spsolve(_jacobian(system, u, v), rhs)
        return delta[:n], delta[n:]
    # interleave (u_0, v_0, u_1, v_1, ...): pentadiagonal
    off = system.op.offdiag[0] if n > 1 else 0.0
    ab = np.zeros((5, 2 * n))
    ab[2, 0::2] = ju
    ab[2, 1::2] = jv
    ab[1, 1::2] = -a
    ab[3, 0::2] = -a
    ab[0, 2:] = off
    ab[4, :-2] = off
    z = np.empty(2 * n)
    z[0::2], z[1::2] = rhs[:n], rhs[n:]
    delta = solve_banded((2, 2), ab, z, check_finite=False)
    return delta[0::2], delta[1::2]


def _jacobian(system, u, v):
    p, a = system.params.p, system.params.alpha
    A = system.op.matrix
    ju = A + sp.diags(system.du - p * system.cu * u ** (p - 1.0))
    jv = A + sp.diags(system.dv - p * system.cv * v ** (p - 1.0))
    off = sp.identity(system.op.size) * (-a)
    return sp.bmat([[ju, off], [off, jv]], format="csc")


def _scaled(system, ru, rv):
    return max(float(np.max(np.abs(ru / system.Su.diag))), float(np.max(np.abs(rv / system.Sv.diag))))


def newton_step_oracle(state, dt, op, params, cfg=None):
    """Damped Newton on the step equations, started at the constant supersolution.

    Returns ``(u, v, iterations)``; the converged scaled residual is at most
    ``cfg.tol`` times the supersolution level.
    """
    cfg = cfg or OracleConfig()
    if not check_step_condition(state, params, dt):
        raise StepConditionError(f"dt={dt:.6e} violates the solvability condition")
    sup = constant_supersolution(state, params, dt)
    system = StepSystem(state, dt, op, params)
    n = op.size
    u = np.full(n, sup.c1)
    v = np.full(n, sup.c2)
    scale = max(sup.c1, sup.c2, 1.0)
    ru, rv = system.residual(u, v)
    res = _scaled(system, ru, rv)
    for it in range(1, cfg.max_iter + 1):
        if res <= cfg.tol * scale:
            return u, v, it - 1
        du, dv = _newton_solve(system, u, v, -np.concatenate([ru, rv]))
        step = 1.0
        for _ in range(cfg.max_halvings):
            uu, vv = u + step * du, v + step * dv
            if np.all(uu > 0) and np.all(vv > 0):
                ru_t, rv_t = system.residual(uu, vv)
                res_t = _scaled(system, ru_t, rv_t)
                if res_t < res or res_t <= cfg.tol * scale:
                    break
            step *= cfg.damping
        else:
            raise NewtonDivergence(f"line search failed at iteration {it}, residual {res:.3e}")
        u, v, ru, rv, res = uu, vv, ru_t, rv_t, res_t
    if res <= cfg.tol * scale:
        return u, v, cfg.max_iter
    raise NewtonDivergence(f"no convergence in {cfg.max_iter} iterations, residual {res:.3e}")


@dataclass(frozen=True)
class SlopeCondition:
    C0: float
    T2: float


def check_initial_slope_condition(u0, v0, alpha, op, params, rtol=1e-10):
    """Smallest ``C0 >= 0`` with ``A u0 - alpha v0 + C0 u0^m >= 0`` and the mirrored
    inequality for ``v0``; also ``T2 = m / ((1-m) C0)`` (infinite when ``C0 = 0``).

    Negative parts below ``rtol`` times the size of the terms are treated as rounding.
    """
    u0 = np.asarray(u0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    m = params.m
    Au, Av = op.apply(u0), op.apply(v0)
    ru = alpha * v0 - Au
    rv = alpha * u0 - Av
    ru[np.abs(ru) <= rtol * (np.abs(Au) + alpha * v0)] = 0.0
    rv[np.abs(rv) <= rtol * (np.abs(Av) + alpha * u0)] = 0.0
    C0 = max(0.0, float(np.max(ru / u0**m)), float(np.max(rv / v0**m)))
    T2 = math.inf if C0 == 0.0 else m / ((1.0 - m) * C0)
    return SlopeCondition(C0, T2)


def fixed_step_run(state, dt, n_steps, op, params, opts=None):
    """``n_steps`` monotone steps at constant ``dt``; returns every state."""
    states = [state]
    for _ in range(n_steps):
        state, _ = monotone_step(state, dt, op, params, opts)
        states.append(state)
    return states


@dataclass
class ConvergenceResult:
    dts: tuple
    differences: list
    orders: list = field(default_factory=list)

    @property
    def order(self):
        return self.orders[-1] if self.orders else math.nan


def self_convergence(op, params, u0, v0, T, dts=(1e-3, 5e-4, 2.5e-4), opts=None):
    """Observed temporal order from successive refinements at a common time ``T``."""
    if len(dts) < 2:
        raise ValueError("need at least two refinement levels")
    opts = opts or StepOptions()
    finals = []
    for dt in dts:
        n_steps = int(round(T / dt))
        if not math.isclose(n_steps * dt, T, rel_tol=1e-9):
            raise ValueError(f"T={T} is not a multiple of dt={dt}")
        states = fixed_step_run(State(u0, v0), T / n_steps, n_steps, op, params, opts)
        finals.append(states[-1])
    diffs = [
        max(float(np.max(np.abs(a.u - b.u))), float(np.max(np.abs(a.v - b.v))))
        for a, b in zip(finals[:-1], finals[1:])
    ]
    orders = []
    for i in range(len(diffs) - 1):
        ratio = dts[i] / dts[i + 1]
        if diffs[i] > 0 and diffs[i + 1] > 0 and ratio > 1:
            orders.append(math.log(diffs[i] / diffs[i + 1]) / math.log(ratio))
        else:
            orders.append(math.nan)
    return ConvergenceResult(tuple(dts), diffs, orders)
