"""Per-step inequality battery on random positive data; prints violation counts per check."""

import argparse
import time
from collections import Counter

import numpy as np

from parablow.diagnostics import lemma_checks
from parablow.model import ModelParams, State, StepOptions
from parablow.spatial import DomainSpec, build_operator
from parablow.step import existence_horizon, max_stable_dt, monotone_step

TIGHT = StepOptions(tol_abs=1e-14, tol_rel=1e-14)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[8, 32])
    ap.add_argument("--pairs", type=int, default=10)
    ap.add_argument("--steps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    bad, total = Counter(), Counter()
    worst = {}
    t0 = time.perf_counter()
    for n in args.n:
        op = build_operator(DomainSpec.interval(n))
        for m, p in ((0.5, 0.5), (0.7, 0.4), (0.9, 0.2)):
            for af in (0.0, 0.5, 1.0, 2.0):
                params = ModelParams(m, p, af * op.lambda1)
                for _ in range(args.pairs):
                    state = State(rng.uniform(0.05, 3, n), rng.uniform(0.05, 3, n))
                    T1 = existence_horizon(state.u, state.v, params).T1
                    dt = min(max_stable_dt(state, params, StepOptions()), T1 / (args.steps + 1))
                    for _ in range(args.steps):
                        new, _ = monotone_step(state, dt, op, params, TIGHT)
                        for chk in lemma_checks(state, new, params, op, dt=dt):
                            total[chk.name] += 1
                            bad[chk.name] += not chk.ok
                            rel = chk.slack / chk.scale if chk.scale else chk.slack
                            worst[chk.name] = min(worst.get(chk.name, np.inf), rel)
                        state = new
    for name in total:
        print(f"{name:16s} checks={total[name]:6d} violations={bad[name]:4d} min relative slack={worst[name]:.3e}")
    print(f"time={time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
