"""Time loop around the monotone step with per-step diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import (
    BlowupBounds,
    ThetaEstimate,
    blowup_upper_bound,
    continuous_blowup_bound,
    j_energy,
    mu_n,
    phi,
    psi_n,
    step_quantities,
    theta_limit,
)
from .model import State, StepOptions
from .spatial import LinearSolveError
from .step import (
    ExistenceHorizon,
    StepError,
    check_step_condition,
    detect_blowup,
    existence_horizon,
    max_stable_dt,
    monotone_step,
)

OUTCOMES = ("reached_T", "blew_up", "decayed", "error")
# relative slack when deciding that t has arrived at T
T_RTOL = 1e-12
# alpha counts as critical when within this relative distance of lambda1
CRITICAL_RTOL = 1e-9


class RunError(RuntimeError):
    """A step failed; carries the step index and time where it happened."""

    def __init__(self, n, t, cause):
        super().__init__(f"step {n} at t={t:.6e}: {cause}")
        self.n = n
        self.t = t
        self.cause = cause


@dataclass(frozen=True)
class StepReport:
    """Diagnostics of the transition ``n -> n+1``.

    ``phi``, ``J``, ``sup_u``, ``sup_v`` and ``mu`` refer to level ``n``; the
    ``*_new`` entries evaluate ``psi_n`` / ``F_n`` at level ``n+1``. The record
    for the last state of a run has ``dt = 0`` and ``iterations = 0``.
    """

    n: int
    t: float
    dt: float
    phi: float
    J: float
    psi_old: float
    psi_new: float
    F_old: float
    F_new: float
    sup_u: float
    sup_v: float
    iterations: int
    mu: float
    residual: float = 0.0


@dataclass
class RunReport:
    outcome: str
    T_star: float | None
    steps: list
    final: State
    terminal: StepReport
    bounds: BlowupBounds
    horizon: ExistenceHorizon
    theta: ThetaEstimate | None = None
    message: str = ""
    states: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)

    @property
    def records(self):
        """One record per state: every transition plus the terminal state."""
        return self.steps + [self.terminal]

    @property
    def blew_up(self):
        return self.outcome == "blew_up"


def _terminal_record(state, params, op):
    u, v = state.u, state.v
    J = j_energy(u, v, params.alpha, op)
    s = psi_n(u, u, v, params, op)
    F = J / s**2
    return StepReport(state.n, state.t, 0.0, phi(u, v, params, op), J, s, s, F, F, state.sup_u, state.sup_v, 0, mu_n(u, params, op))


def _step_record(prev, new, stats, params, op):
    q = step_quantities(prev, new, params, op)
    return StepReport(
        prev.n,
        prev.t,
        q["dt"],
        q["phi_old"],
        q["J_old"],
        q["psi_old"],
        q["psi_new"],
        q["F_old"],
        q["F_new"],
        prev.sup_u,
        prev.sup_v,
        stats.iterations,
        q["mu_old"],
        stats.residual,
    )


def is_critical(params, op, rtol=CRITICAL_RTOL):
    return abs(params.alpha - op.lambda1) <= rtol * op.lambda1


def initial_bounds(u0, v0, params, op):
    h = existence_horizon(u0, v0, params)
    return BlowupBounds(blowup_upper_bound(u0, v0, params, op), continuous_blowup_bound(u0, v0, params, op), h.T1), h


def integrate(
    op,
    params,
    u0,
    v0,
    T,
    dt=None,
    opts=None,
    decay_floor=None,
    keep_states=False,
    snapshot_every=0,
    strict=False,
):
    """Advance from ``(u0, v0)`` until ``T``, blow-up or decay.

    ``dt=None`` selects ``max_stable_dt`` at every step; a number fixes the step
    (the last one is shortened to land on ``T``) and a violated solvability
    condition is then an error. ``strict`` re-raises step failures as
    ``RunError`` instead of returning an ``error`` report.
    """
    opts = opts or StepOptions()
    if not T > 0:
        raise ValueError("T must be positive")
    if dt is not None and not dt > 0:
        raise ValueError("fixed dt must be positive")
    state = State(u0, v0)
    bounds, horizon = initial_bounds(state.u, state.v, params, op)
    theta = theta_limit(state.u, state.v, params, op) if is_critical(params, op) else None
    steps, states, snaps = [], [state] if keep_states else [], []
    if snapshot_every:
        snaps.append(state)
    outcome, T_star, message = None, None, ""
    while outcome is None:
        proposal = max_stable_dt(state, params, opts)
        if detect_blowup(state, opts, proposal):
            outcome, T_star = "blew_up", state.t
            break
        if state.t >= T * (1.0 - T_RTOL):
            outcome = "reached_T"
            break
        if decay_floor is not None and max(state.sup_u, state.sup_v) < decay_floor:
            outcome = "decayed"
            break
        h = min(proposal if dt is None else dt, T - state.t)
        try:
            if dt is not None and not check_step_condition(state, params, h):
                raise StepError(f"fixed dt={h:.6e} violates the solvability condition")
            new, stats = monotone_step(state, h, op, params, opts)
        except (StepError, LinearSolveError) as exc:
            if strict:
                raise RunError(state.n, state.t, exc) from exc
            outcome, message = "error", str(RunError(state.n, state.t, exc))
            break
        steps.append(_step_record(state, new, stats, params, op))
        state = new
        if keep_states:
            states.append(state)
        if snapshot_every and state.n % snapshot_every == 0:
            snaps.append(state)
    if snapshot_every and snaps[-1] is not state:
        snaps.append(state)
    bounds = BlowupBounds(bounds.T_upper, bounds.T_continuous, bounds.T1, T_star)
    return RunReport(
        outcome,
        T_star,
        steps,
        state,
        _terminal_record(state, params, op),
        bounds,
        horizon,
        theta,
        message,
        states,
        snaps,
    )


def psi_power_series(report, params):
    """``psi^{m-1}`` of every recorded state (meaningful for ``p == m``)."""
    return np.array([r.psi_old ** (params.m - 1.0) for r in report.records])


def relative_l2_distance(op, f, g):
    diff = math.sqrt(op.weight * float(np.sum((f - g) ** 2)))
    ref = math.sqrt(op.weight * float(np.sum(g**2)))
    return diff / ref

