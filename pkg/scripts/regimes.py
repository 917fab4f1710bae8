"""Run the three long-time regimes on the unit interval and print their diagnostics.

    python3 scripts/regimes.py blowup --n 64 --out runs/blowup
    python3 scripts/regimes.py decay
    python3 scripts/regimes.py critical
"""

import argparse
import time

from parablow.config import bump
from parablow.model import ModelParams
from parablow.output import emit
from parablow.run import integrate, psi_power_series, relative_l2_distance
from parablow.spatial import DomainSpec, build_operator


def blowup(op, args):
    params = ModelParams(args.m, args.m, 2.0 * op.lambda1)
    rep = integrate(op, params, 5 * op.rho1, 5 * op.rho1, 10.0)
    b = rep.bounds
    print(f"outcome={rep.outcome} T*={rep.T_star} T1={b.T1:.6g} upper bound={b.T_upper} continuous={b.T_continuous}")
    print(f"steps={len(rep.steps)} sup_u={rep.final.sup_u:.3e} sup_v={rep.final.sup_v:.3e}")
    return rep, params


def decay(op, args):
    params = ModelParams(args.m, args.m, 0.5 * op.lambda1)
    rep = integrate(op, params, op.rho1, op.rho1, 1e3, decay_floor=1e-3)
    pp = psi_power_series(rep, params)
    print(f"outcome={rep.outcome} at t={rep.final.t:.4g} steps={len(rep.steps)}")
    print(f"psi^(m-1): {pp[0]:.6g} -> {pp[-1]:.6g}, mean slope {(pp[-1] - pp[0]) / rep.final.t:.6g}")
    return rep, params


def critical(op, args):
    params = ModelParams(args.m, args.m, op.lambda1)
    u0 = op.rho1 + 2.0 * bump(op.spec)
    rep = integrate(op, params, u0, u0, 3.0)
    th = rep.theta
    dist = relative_l2_distance(op, rep.final.u, th.theta * op.rho1)
    print(f"outcome={rep.outcome} theta={th.theta:.10g} theta^m bound={th.bound}")
    print(f"relative L2 distance to theta*rho1 at t={rep.final.t:.4g}: {dist:.3e}")
    return rep, params


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("regime", choices=["blowup", "decay", "critical"])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--m", type=float, default=0.5)
    ap.add_argument("--out", help="directory for steps.csv and summary.txt")
    args = ap.parse_args()
    op = build_operator(DomainSpec.interval(args.n))
    t0 = time.perf_counter()
    rep, params = {"blowup": blowup, "decay": decay, "critical": critical}[args.regime](op, args)
    print(f"time={time.perf_counter() - t0:.2f}s")
    if args.out:
        for path in emit(rep, params, op, args.out):
            print("wrote", path)


if __name__ == "__main__":
    main()
