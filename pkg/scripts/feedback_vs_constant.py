#!/usr/bin/env python3
"""Compare the saturating feedback policy against constant minimal and
maximal fumigation from the same kernel-interior start, and report total
control effort and any constraint violations.

Usage:
    python3 scripts/feedback_vs_constant.py [--m0 0.05] [--h0 0.1] [--horizon 400]
"""

import argparse

from scipy.integrate import trapezoid

from rossmac.kernel import build_kernel
from rossmac.model import ModelRates, State
from rossmac.trajectory import (
    ConstantControl,
    SaturatingFeedback,
    audit_viability,
    simulate,
)

RATES = ModelRates(A_m=0.02906, A_h=0.31066, gamma=0.1,
                   u_min=0.01, u_max=0.03733)
H_BAR = 0.5


def effort(traj) -> float:
    return float(trapezoid(traj.u, traj.t))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m0", type=float, default=0.05)
    ap.add_argument("--h0", type=float, default=0.1)
    ap.add_argument("--horizon", type=float, default=400.0)
    args = ap.parse_args()

    kernel = build_kernel(RATES, H_BAR, step=2e-4)
    start = State(args.m0, args.h0)

    policies = {
        "u_min constant": ConstantControl(RATES.u_min),
        "u_max constant": ConstantControl(RATES.u_max),
        "saturating feedback": SaturatingFeedback(kernel, RATES.u_min, RATES.u_max),
    }
    print(f"start=({args.m0}, {args.h0})  H_bar={H_BAR}  horizon={args.horizon}")
    for name, policy in policies.items():
        traj = simulate(start, policy, RATES, args.horizon, dt_out=1.0)
        violation = audit_viability(traj, H_BAR)
        m_end, h_end = traj.final_state()
        print(
            f"{name:22s} effort={effort(traj):8.3f} "
            f"violation={'none' if violation is None else f'{violation:.1f}'} "
            f"final=({m_end:.4f}, {h_end:.4f})"
        )


if __name__ == "__main__":
    main()
