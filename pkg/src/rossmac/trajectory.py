"""Simulation of the controlled system under constant, piecewise-constant
and saturating-feedback fumigation policies, plus constraint auditing.

The feedback policy interpolates between minimal and maximal fumigation
according to the distance to the kernel frontier,

    u = (1 - exp(-d)) * u_min + exp(-d) * u_max,

and is evaluated continuously inside the integrator so the closed loop is
a smooth autonomous system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from rossmac.kernel import (
    KernelDescription,
    Regime,
    _frontier_polyline,
    _point_polyline_distance,
    distance_to_frontier,
    kernel_membership,
)
from rossmac.model import ModelRates, State, g_h, g_m


class SimulationError(RuntimeError):
    """Integrator failure, carrying the time at which it occurred."""

    def __init__(self, message: str, at_time: float):
        super().__init__(f"{message} (t = {at_time})")
        self.at_time = at_time


def feedback_control(
    state: State, kernel: KernelDescription, u_min: float, u_max: float
) -> float:
    """Saturating viable control: u_max on the frontier, decaying to u_min
    deep inside the kernel."""
    d = distance_to_frontier(kernel, state)
    w = math.exp(-d)
    return min(max((1.0 - w) * u_min + w * u_max, u_min), u_max)


@dataclass(frozen=True)
class ConstantControl:
    u: float

    def control(self, t: float, m: float, h: float) -> float:
        return self.u

    def breakpoints_within(self, horizon: float) -> list[float]:
        return []


@dataclass(frozen=True)
class PiecewiseConstantControl:
    """Control defined by (time, rate) breakpoints; the rate of the latest
    breakpoint at or before t applies.  First breakpoint must be at t=0."""

    schedule: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.schedule or self.schedule[0][0] != 0.0:
            raise ValueError("schedule must start with a breakpoint at t = 0")
        times = [t for t, _ in self.schedule]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("breakpoint times must be strictly increasing")

    def control(self, t: float, m: float, h: float) -> float:
        u = self.schedule[0][1]
        for tb, ub in self.schedule:
            if tb <= t:
                u = ub
            else:
                break
        return u

    def breakpoints_within(self, horizon: float) -> list[float]:
        return [t for t, _ in self.schedule if 0.0 < t < horizon]


class SaturatingFeedback:
    """State feedback saturating at u_max on the kernel frontier.

    States that drift outside the kernel are clamped to u_max rather than
    erroring mid-integration; the event is recorded on `left_kernel`.
    """

    def __init__(self, kernel: KernelDescription, u_min: float, u_max: float):
        if kernel.regime is not Regime.MEDIUM:
            raise ValueError("saturating feedback requires a medium-regime kernel")
        if not 0.0 <= u_min <= u_max:
            raise ValueError("feedback needs 0 <= u_min <= u_max")
        self.kernel = kernel
        self.u_min = u_min
        self.u_max = u_max
        self.left_kernel = False
        self._poly = _frontier_polyline(kernel)

    def control(self, t: float, m: float, h: float) -> float:
        k = self.kernel
        # Small negative drift in m or h still counts as inside.
        inside = (m <= k.M_bar and h <= k.H_bar) or (
            m <= k.M_inf
            and h <= float(k.frontier_value(min(max(m, k.M_bar), k.M_inf)))
        )
        if not inside:
            self.left_kernel = True
            return self.u_max
        xs, ys = self._poly
        d = _point_polyline_distance(xs, ys, m, h)
        w = math.exp(-d)
        return min(max((1.0 - w) * self.u_min + w * self.u_max, self.u_min), self.u_max)

    def breakpoints_within(self, horizon: float) -> list[float]:
        return []


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped (t, m, h, u) samples of one simulation run."""

    t: np.ndarray
    m: np.ndarray
    h: np.ndarray
    u: np.ndarray
    dt_out: float
    left_kernel: bool = False

    def __post_init__(self) -> None:
        if np.any(np.diff(self.t) <= 0.0) or self.t[0] != 0.0:
            raise ValueError("sample times must increase strictly from 0")
        if not (np.all(np.isfinite(self.m)) and np.all(np.isfinite(self.h))):
            raise ValueError("non-finite state samples")

    def final_state(self) -> tuple[float, float]:
        return float(self.m[-1]), float(self.h[-1])


def _validate_policy_bounds(policy, rates: ModelRates) -> None:
    if isinstance(policy, ConstantControl):
        us = [policy.u]
    elif isinstance(policy, PiecewiseConstantControl):
        us = [u for _, u in policy.schedule]
    elif isinstance(policy, SaturatingFeedback):
        us = [policy.u_min, policy.u_max]
    else:
        raise TypeError(f"unsupported policy {policy!r}")
    for u in us:
        if not (rates.u_min <= u <= rates.u_max):
            raise ValueError(
                f"policy emits control {u} outside [{rates.u_min}, {rates.u_max}]"
            )


def simulate(
    initial: State,
    policy,
    rates: ModelRates,
    horizon: float,
    dt_out: float = 0.1,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    stop_event=None,
) -> Trajectory:
    """Integrate the controlled system and resample on the dt_out grid.

    `stop_event(t, m, h)` may end the run early at its root (scipy event
    semantics); the final sample then sits at the event time instead of
    the horizon.
    """
    if horizon <= 0.0 or dt_out <= 0.0:
        raise ValueError("horizon and dt_out must be positive")
    _validate_policy_bounds(policy, rates)

    def rhs(t, z):
        m, h = z
        u = policy.control(t, m, h)
        return [g_m(m, h, u, rates), g_h(m, h, rates)]

    events = None
    if stop_event is not None:
        def ev(t, z):
            return stop_event(t, z[0], z[1])
        ev.terminal = True
        events = ev

    grid = np.arange(0.0, horizon, dt_out)
    if horizon - grid[-1] > 1e-12 * max(1.0, horizon):
        grid = np.append(grid, horizon)
    else:
        grid[-1] = horizon

    # Piecewise-constant controls are integrated segment by segment so that
    # control discontinuities coincide with integrator restarts.
    cuts = [0.0] + policy.breakpoints_within(horizon) + [horizon]
    ts: list[np.ndarray] = []
    ms: list[np.ndarray] = []
    hs: list[np.ndarray] = []
    z0 = [initial.m, initial.h]
    stopped = False
    for a, b in zip(cuts, cuts[1:]):
        seg_grid = grid[(grid >= a) & (grid <= b)]
        sol = solve_ivp(
            rhs,
            (a, b),
            z0,
            method="RK45",
            rtol=rtol,
            atol=atol,
            dense_output=True,
            events=events,
        )
        if sol.status == -1:
            raise SimulationError(f"integration failed: {sol.message}", sol.t[-1])
        t_end = sol.t[-1]
        if events is not None and sol.t_events[0].size > 0:
            t_end = float(sol.t_events[0][0])
            stopped = True
        keep = seg_grid[seg_grid < t_end - 1e-15] if stopped else seg_grid[seg_grid <= t_end]
        if keep.size:
            z = sol.sol(keep)
            ts.append(keep)
            ms.append(z[0])
            hs.append(z[1])
        if stopped:
            ze = sol.sol(t_end)
            ts.append(np.array([t_end]))
            ms.append(np.array([ze[0]]))
            hs.append(np.array([ze[1]]))
            break
        z0 = list(sol.sol(b))

    t = np.concatenate(ts)
    t, idx = np.unique(np.round(t, 15), return_index=True)
    m = np.concatenate(ms)[idx]
    h = np.concatenate(hs)[idx]
    u = np.array([policy.control(ti, mi, hi) for ti, mi, hi in zip(t, m, h)])
    return Trajectory(
        t=t,
        m=m,
        h=h,
        u=u,
        dt_out=dt_out,
        left_kernel=getattr(policy, "left_kernel", False),
    )


def audit_viability(traj: Trajectory, H_bar: float) -> float | None:
    """Earliest sample time with h > H_bar, or None if the cap holds."""
    over = np.nonzero(traj.h > H_bar)[0]
    if over.size == 0:
        return None
    return float(traj.t[over[0]])
