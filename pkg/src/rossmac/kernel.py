"""Viability-kernel regime classification, frontier curve and queries.

Three regimes arise depending on the cap H_bar on infected humans:

  low    -- the kernel reduces to the origin,
  high   -- the whole constraint box [0,1] x [0,H_bar] is strongly invariant,
  medium -- the kernel is a strict subset whose upper-right frontier is the
            graph of a strictly decreasing curve Y(m), obtained by
            integrating a boundary ODE in m under maximal fumigation.

The frontier curve is also an orbit of the controlled field under maximal
fumigation, which the test suite exploits as an independent check.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from rossmac.model import ModelRates, State, g_h, g_m


class Regime(enum.Enum):
    LOW = "low"
    HIGH = "high"
    MEDIUM = "medium"


class FrontierIntegrationError(RuntimeError):
    """The boundary ODE left its domain of validity (denominator sign flip
    or integrator failure)."""


def regime_thresholds(rates: ModelRates, u_max: float | None = None) -> tuple[float, float]:
    """(lower, upper) thresholds on H_bar separating the three regimes.

    lower = (A_h - gamma*u_max/A_m) / (A_h + gamma), may be nonpositive;
    upper = A_h / (A_h + gamma).
    """
    if rates.A_m == 0.0:
        raise ValueError("threshold undefined: A_m = 0")
    u = rates.u_max if u_max is None else u_max
    denom = rates.A_h + rates.gamma
    lower = (rates.A_h - rates.gamma * u / rates.A_m) / denom
    upper = rates.A_h / denom
    return lower, upper


def classify_regime(rates: ModelRates, H_bar: float) -> Regime:
    """Classify the viability-kernel regime for cap H_bar.

    When the lower threshold is nonpositive the strict-inequality
    hypothesis behind the medium characterization fails, but the kernel is
    still a strict subset with a frontier curve, so such caps below the
    upper threshold are classified medium (callers can flag them via
    outside_proven_hypotheses).
    """
    if not 0.0 < H_bar < 1.0:
        raise ValueError(f"H_bar must lie in (0, 1), got {H_bar!r}")
    lower, upper = regime_thresholds(rates)
    if H_bar >= upper:
        return Regime.HIGH
    if lower > 0.0 and H_bar < lower:
        return Regime.LOW
    return Regime.MEDIUM


def outside_proven_hypotheses(rates: ModelRates, H_bar: float) -> bool:
    """True when the medium classification falls outside the positivity
    hypothesis on the lower threshold."""
    lower, upper = regime_thresholds(rates)
    return classify_regime(rates, H_bar) is Regime.MEDIUM and lower <= 0.0


def m_bar(rates: ModelRates, H_bar: float) -> float:
    """Mosquito proportion on the line h = H_bar where dh/dt vanishes."""
    if not 0.0 < H_bar < 1.0:
        raise ValueError(f"H_bar must lie in (0, 1), got {H_bar!r}")
    if rates.A_h == 0.0:
        raise ValueError("m_bar undefined: A_h = 0")
    return rates.gamma * H_bar / (rates.A_h * (1.0 - H_bar))


@dataclass(frozen=True)
class ConstraintBox:
    """The admissible region [0,1] x [0, H_bar]."""

    H_bar: float

    def __post_init__(self) -> None:
        if not 0.0 < self.H_bar < 1.0:
            raise ValueError(f"H_bar must lie in (0, 1), got {self.H_bar!r}")

    def contains(self, state: State) -> bool:
        return state.h <= self.H_bar


@dataclass(frozen=True)
class KernelDescription:
    """Tagged description of the viability kernel for a given cap.

    For the medium regime the frontier curve is stored as ascending-m
    samples (frontier_m, frontier_y) running from (M_bar, H_bar) to
    (M_inf, Y(M_inf)); queries interpolate them with a monotone cubic.
    """

    regime: Regime
    H_bar: float
    M_bar: float | None = None
    M_inf: float | None = None
    frontier_m: np.ndarray | None = None
    frontier_y: np.ndarray | None = None
    outside_proven_hypotheses: bool = False
    _interp: PchipInterpolator | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if not 0.0 < self.H_bar < 1.0:
            raise ValueError(f"H_bar must lie in (0, 1), got {self.H_bar!r}")
        if self.regime is not Regime.MEDIUM:
            return
        if self.frontier_m is None or self.frontier_y is None:
            raise ValueError("medium kernel requires frontier samples")
        fm, fy = self.frontier_m, self.frontier_y
        if not (self.M_bar < self.M_inf <= 1.0):
            raise ValueError("medium kernel requires M_bar < M_inf <= 1")
        if abs(fm[0] - self.M_bar) > 1e-12 or abs(fy[0] - self.H_bar) > 1e-12:
            raise ValueError("frontier must start at (M_bar, H_bar)")
        if np.any(np.diff(fm) <= 0.0) or np.any(np.diff(fy) >= 0.0):
            raise ValueError("frontier must be strictly decreasing in Y")
        if np.any(fm < 0.0) or np.any(fm > 1.0) or np.any(fy < 0.0) or np.any(fy > 1.0):
            raise ValueError("frontier samples must lie in the unit square")
        object.__setattr__(self, "_interp", PchipInterpolator(fm, fy))

    def frontier_value(self, m) -> np.ndarray:
        """Interpolated frontier height Y(m) for m in [M_bar, M_inf]."""
        if self._interp is None:
            raise ValueError("frontier only defined for the medium regime")
        return self._interp(m)


def boundary_curve(
    rates: ModelRates,
    H_bar: float,
    step: float = 1e-3,
    rtol: float = 1e-9,
    atol: float = 1e-9,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Integrate the frontier ODE Y'(m) = g_h / g_m forward in m.

    Starts exactly at (M_bar, H_bar), where the quotient is 0/negative,
    and stops when Y hits zero (M_inf < 1) or m reaches 1 (M_inf = 1).
    Returns (M_inf, m_samples, y_samples) with samples spaced by `step`.
    """
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step!r}")
    mb = m_bar(rates, H_bar)
    if mb >= 1.0:
        raise ValueError("frontier start M_bar >= 1; cap is not in the medium regime")

    den0 = g_m(mb, H_bar, rates.u_max, rates)
    if den0 >= 0.0:
        raise FrontierIntegrationError(
            "frontier ODE denominator nonnegative at the start; "
            "parameters violate the medium-regime hypotheses"
        )

    def rhs(m, y):
        return [g_h(m, y[0], rates) / g_m(m, y[0], rates.u_max, rates)]

    def hit_zero(m, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1

    def denom_zero(m, y):
        return g_m(m, y[0], rates.u_max, rates)

    denom_zero.terminal = True
    denom_zero.direction = 1

    sol = solve_ivp(
        rhs,
        (mb, 1.0),
        [H_bar],
        method="RK45",
        rtol=rtol,
        atol=atol,
        events=(hit_zero, denom_zero),
        dense_output=True,
    )
    if sol.status == -1:
        raise FrontierIntegrationError(f"frontier integration failed: {sol.message}")
    if sol.t_events[1].size > 0:
        raise FrontierIntegrationError(
            "frontier ODE denominator changed sign during integration"
        )

    if sol.t_events[0].size > 0:
        m_inf = float(sol.t_events[0][0])
        y_end = 0.0
    else:
        m_inf = 1.0
        y_end = float(sol.sol(1.0)[0])

    m_grid = np.arange(mb, m_inf, step)
    if m_inf - m_grid[-1] < 0.25 * step:
        m_grid = m_grid[:-1]
    m_samples = np.append(m_grid, m_inf)
    y_samples = sol.sol(m_samples)[0]
    y_samples[0] = H_bar
    y_samples[-1] = y_end
    # Integration noise can leave tiny out-of-range tail values near zero.
    y_samples = np.clip(y_samples, 0.0, H_bar)
    return m_inf, m_samples, y_samples


def build_kernel(
    rates: ModelRates,
    H_bar: float,
    step: float = 1e-3,
    rtol: float = 1e-9,
    atol: float = 1e-9,
) -> KernelDescription:
    """Classify the regime and, for medium caps, compute the frontier."""
    regime = classify_regime(rates, H_bar)
    if regime is not Regime.MEDIUM:
        return KernelDescription(regime=regime, H_bar=H_bar)
    m_inf, fm, fy = boundary_curve(rates, H_bar, step=step, rtol=rtol, atol=atol)
    return KernelDescription(
        regime=Regime.MEDIUM,
        H_bar=H_bar,
        M_bar=float(fm[0]),
        M_inf=m_inf,
        frontier_m=fm,
        frontier_y=fy,
        outside_proven_hypotheses=outside_proven_hypotheses(rates, H_bar),
    )


def kernel_membership(desc: KernelDescription, state: State) -> bool:
    """Whether a state belongs to the (closed) viability kernel."""
    if desc.regime is Regime.LOW:
        return state.m == 0.0 and state.h == 0.0
    if desc.regime is Regime.HIGH:
        return state.h <= desc.H_bar
    if state.m <= desc.M_bar:
        return state.h <= desc.H_bar
    if state.m > desc.M_inf:
        return False
    return state.h <= float(desc.frontier_value(state.m))


def _frontier_polyline(desc: KernelDescription) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the upper frontier: the flat cap segment joined with the
    sampled curve."""
    xs = np.concatenate(([0.0], desc.frontier_m))
    ys = np.concatenate(([desc.H_bar], desc.frontier_y))
    return xs, ys


def _point_polyline_distance(xs: np.ndarray, ys: np.ndarray, px: float, py: float) -> float:
    ax, ay = xs[:-1], ys[:-1]
    bx, by = xs[1:], ys[1:]
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    t = np.where(seg2 > 0.0, ((px - ax) * dx + (py - ay) * dy) / np.where(seg2 > 0.0, seg2, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    cx, cy = ax + t * dx, ay + t * dy
    return float(np.sqrt(np.min((px - cx) ** 2 + (py - cy) ** 2)))


def distance_to_frontier(desc: KernelDescription, state: State) -> float:
    """Euclidean distance from a kernel state to the upper frontier.

    The frontier is the segment h = H_bar over [0, M_bar] joined with the
    sampled curve; the distance is the point-to-polyline minimum.
    """
    if desc.regime is not Regime.MEDIUM:
        raise ValueError("distance to frontier is only defined for medium kernels")
    if not kernel_membership(desc, state):
        raise ValueError(f"state ({state.m}, {state.h}) lies outside the kernel")
    xs, ys = _frontier_polyline(desc)
    return _point_polyline_distance(xs, ys, state.m, state.h)


def regime_diagram(
    rates_base: ModelRates,
    u_grid,
    H_grid,
) -> list[list[Regime]]:
    """Regime per (u_max, H_bar) grid cell, row-major over H then u."""
    u_grid = list(u_grid)
    H_grid = list(H_grid)
    if not u_grid or not H_grid:
        raise ValueError("grids must be nonempty")
    out = []
    for H in H_grid:
        row = []
        for u in u_grid:
            cell_rates = ModelRates(
                A_m=rates_base.A_m,
                A_h=rates_base.A_h,
                gamma=rates_base.gamma,
                u_min=min(rates_base.u_min, u),
                u_max=u,
            )
            row.append(classify_regime(cell_rates, H))
        out.append(row)
    return out
