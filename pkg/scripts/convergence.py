"""Temporal self-convergence and Newton agreement for the monotone scheme."""

import argparse

import numpy as np

from parablow.model import ModelParams, State, StepOptions
from parablow.oracle import NewtonDivergence, newton_step_oracle, self_convergence
from parablow.spatial import DomainSpec, build_operator
from parablow.step import max_stable_dt, monotone_step


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--m", type=float, default=0.5)
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--alpha-over-lambda1", type=float, default=0.5)
    ap.add_argument("--T", type=float, default=0.05)
    ap.add_argument("--samples", type=int, default=50)
    args = ap.parse_args()
    op = build_operator(DomainSpec.interval(args.n))
    params = ModelParams(args.m, args.p, args.alpha_over_lambda1 * op.lambda1)

    dts = (2e-3, 1e-3, 5e-4, 2.5e-4)
    res = self_convergence(op, params, op.rho1, op.rho1, args.T, dts=dts)
    for dt, d in zip(dts[1:], res.differences):
        print(f"dt={dt:.2e} max difference to previous level={d:.3e}")
    print("observed orders:", " ".join(f"{o:.3f}" for o in res.orders))

    rng = np.random.default_rng(0)
    tight = StepOptions(tol_abs=1e-14, tol_rel=1e-14)
    gaps, failed = [], 0
    for _ in range(args.samples):
        s = State(rng.uniform(0.05, 3, args.n), rng.uniform(0.05, 3, args.n))
        dt = max_stable_dt(s, params, StepOptions())
        mono, _ = monotone_step(s, dt, op, params, tight)
        try:
            u, v, _ = newton_step_oracle(s, dt, op, params)
        except NewtonDivergence:
            failed += 1
            continue
        gaps.append(max(np.abs(u - mono.u).max(), np.abs(v - mono.v).max()))
    print(f"Newton vs monotone: {len(gaps)} converged, {failed} diverged, max gap={max(gaps, default=np.nan):.3e}")


if __name__ == "__main__":
    main()
