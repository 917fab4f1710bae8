"""Byte-stable CSV and summary files for a finished run."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .step import to_original_variables

STEPS_HEADER = "n,t,dt,phi,J,psi_n,F_n,sup_u,sup_v,iters"


def fmt(x):
    """Shortest round-tripping repr; stable across runs and platforms."""
    if x is None:
        return "none"
    return repr(float(x))


def steps_csv(report):
    lines = [STEPS_HEADER]
    for r in report.records:
        values = (r.t, r.dt, r.phi, r.J, r.psi_old, r.F_old, r.sup_u, r.sup_v)
        lines.append(",".join([str(r.n)] + [fmt(x) for x in values] + [str(r.iterations)]))
    return "\n".join(lines) + "\n"


def snapshot_csv(op, values, u1, v1):
    coords = op.spec.coordinates()
    if op.spec.dim == 1:
        header = "x,value,u1,v1"
        cols = [coords]
    else:
        header = "x,y,value,u1,v1"
        cols = [coords[:, 0], coords[:, 1]]
    rows = np.column_stack(cols + [values, u1, v1])
    return header + "\n" + "".join(",".join(fmt(x) for x in row) + "\n" for row in rows)


def summary_text(report, params, op):
    b = report.bounds
    lines = [f"outcome={report.outcome}"]
    if report.blew_up:
        if b.T_upper is None:
            lines.append(f"T_star={fmt(report.T_star)} bound=none")
        else:
            lines.append(f"T_star={fmt(report.T_star)} <= bound={fmt(b.T_upper)}")
    lines += [
        f"t_end={fmt(report.final.t)}",
        f"steps={len(report.steps)}",
        f"m={fmt(params.m)}",
        f"p={fmt(params.p)}",
        f"alpha={fmt(params.alpha)}",
        f"lambda1={fmt(op.lambda1)}",
        f"T1={fmt(b.T1)}",
        f"T_upper={fmt(b.T_upper)}",
        f"T_continuous={fmt(b.T_continuous)}",
        f"sup_u={fmt(report.final.sup_u)}",
        f"sup_v={fmt(report.final.sup_v)}",
    ]
    if report.theta is not None:
        th = report.theta
        lines.append(f"theta={fmt(th.theta)}")
        lines.append(f"theta_residual={fmt(th.residual)}")
        if th.bound is not None:
            lines.append(f"theta_m_bound={fmt(th.bound)}")
    if report.message:
        lines.append(f"message={report.message}")
    return "\n".join(lines) + "\n"


def emit(report, params, op, out_dir):
    """Write ``steps.csv``, ``u_<n>.csv`` / ``v_<n>.csv`` snapshots and ``summary.txt``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "steps.csv", out / "summary.txt"]
    written[0].write_text(steps_csv(report))
    written[1].write_text(summary_text(report, params, op))
    for state in report.snapshots:
        u1, v1 = to_original_variables(state.u, state.v, params)
        for name, values in (("u", state.u), ("v", state.v)):
            path = out / f"{name}_{state.n}.csv"
            path.write_text(snapshot_csv(op, values, u1, v1))
            written.append(path)
    return written
