"""The two timescale-separation limits of the coupled dynamics.

Fast behavior (eps_z -> 0): at a given infection level y the replicator
snaps to z_I = 0 and z_S = 1 (y below the interior level y_int) or z_S = 0
(y above it), which closes a piecewise-smooth scalar epidemic equation

    dy/dt = [(1-y) beta_p       - gamma] y   for y < y_int
    dy/dt = [(1-y) alpha beta_p - gamma] y   for y > y_int.

Both one-sided fields can point toward y_int, which then acts as a sliding
surface; the sliding convention used here picks the Filippov convex-hull
value closest to zero (exactly zero while the surface attracts).  The limit
of y(t) falls into one of four parameter cases keyed to the ordering of
0, y_u, y_int and y_p; only the sliding case can be non-monotone.

Fast epidemic (eps_y -> 0): y snaps to the quasi-steady SIS equilibrium
y* = max(0, 1 - gamma/beta_eff(z_S, z_I)), closing reduced replicator
dynamics in (z_S, z_I).  When beta_eff is driven slowly across gamma the
infection stays near the (now unstable) disease-free branch for a while
before taking off: the bifurcation delay, measured here as the interpolated
time between the beta_eff = gamma crossing and y first rising through a
takeoff threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .equilibria import BoundaryCaseError, critical_levels
from .integrate import Trajectory, sign_crossings
from .model import ModelParams, SystemState, beta_eff, vector_field

__all__ = [
    "ReducedEpidemicCase",
    "DelayMeasurement",
    "QuasiSteady",
    "reduced_epidemic_rhs",
    "classify_reduced_epidemic",
    "quasi_steady_y",
    "reduced_behavioral_rhs",
    "simulate_reduced_epidemic",
    "measure_bifurcation_delay",
    "delay_csv",
]

DELAY_HEADER = "gamma,eps,delta,t_cross,t_takeoff,delay"

_BOUNDARY_RTOL = 1e-12


@dataclass(frozen=True)
class ReducedEpidemicCase:
    """Limit classification of the fast-behavior reduced epidemic.

    case_id 1: y_u < 0           -> y converges monotonically to 0
    case_id 2: 0 < y_u < y_int   -> monotone convergence to y_u
    case_id 3: y_p < y_int < y_u -> convergence to y_int (sliding, possibly
                                    non-monotone)
    case_id 4: y_int < y_p       -> monotone convergence to y_p
    """

    case_id: int
    predicted_limit: float
    monotone: bool


class QuasiSteady(NamedTuple):
    """Quasi-steady infection level; ``critical`` flags beta_eff = gamma."""

    y: float
    critical: bool


@dataclass(frozen=True)
class DelayMeasurement:
    t_cross: float
    t_takeoff: float
    delay: float


def _one_sided(p: ModelParams, y: float) -> tuple[float, float]:
    below = ((1.0 - y) * p.beta_p - p.gamma) * y
    above = ((1.0 - y) * p.alpha * p.beta_p - p.gamma) * y
    return below, above


def reduced_epidemic_rhs(p: ModelParams, y: float) -> float:
    """Piecewise reduced epidemic field; Filippov value on the surface."""
    y_int = critical_levels(p).y_int
    below, above = _one_sided(p, y)
    if y < y_int:
        return below
    if y > y_int:
        return above
    lo, hi = min(below, above), max(below, above)
    if lo <= 0.0 <= hi:
        return 0.0
    return lo if lo > 0.0 else hi


def classify_reduced_epidemic(p: ModelParams) -> ReducedEpidemicCase:
    """Predict the limit of the reduced epidemic from the critical levels."""
    lv = critical_levels(p)
    scale = 1.0 + abs(lv.y_u) + abs(lv.y_int) + abs(lv.y_p)
    if abs(lv.y_u) <= _BOUNDARY_RTOL * scale:
        raise BoundaryCaseError("y_u = 0 (gamma = beta_p): case boundary")
    if abs(lv.y_u - lv.y_int) <= _BOUNDARY_RTOL * scale:
        raise BoundaryCaseError("y_u = y_int: case boundary")
    if abs(lv.y_p - lv.y_int) <= _BOUNDARY_RTOL * scale:
        raise BoundaryCaseError("y_p = y_int: case boundary")

    if lv.y_u < 0.0:
        return ReducedEpidemicCase(1, 0.0, True)
    if lv.y_u < lv.y_int:
        return ReducedEpidemicCase(2, lv.y_u, True)
    if lv.y_int > lv.y_p:
        return ReducedEpidemicCase(3, lv.y_int, False)
    return ReducedEpidemicCase(4, lv.y_p, True)


def quasi_steady_y(p: ModelParams, z_S: float, z_I: float) -> QuasiSteady:
    """Stable SIS equilibrium for frozen strategies (fast-epidemic limit)."""
    be = beta_eff(p, SystemState(0.0, z_S, z_I))
    if abs(be - p.gamma) <= 1e-12:
        return QuasiSteady(0.0, True)
    if be < p.gamma:
        return QuasiSteady(0.0, False)
    return QuasiSteady(1.0 - p.gamma / be, False)


def reduced_behavioral_rhs(p: ModelParams, z_S: float, z_I: float) -> tuple[float, float]:
    """Replicator field evaluated on the quasi-steady infection level."""
    y_star = quasi_steady_y(p, z_S, z_I).y
    d = vector_field(p, SystemState(y_star, z_S, z_I))
    return d.dz_S, d.dz_I


def simulate_reduced_epidemic(
    p: ModelParams,
    y0: float,
    t_end: float,
    dt: float = 0.01,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the reduced epidemic with explicit sliding handling.

    Away from y_int each smooth one-sided field is advanced with RK4.  A step
    that lands across the surface is checked: if the surface attracts from
    both sides the state is placed on it and held there (Filippov sliding,
    zero normal flow); a transversal crossing is simply accepted on the
    smooth extension.
    """
    if not 0.0 <= y0 <= 1.0:
        raise ValueError(f"y0 must lie in [0, 1], got {y0}")
    y_int = critical_levels(p).y_int

    def f_below(y: float) -> float:
        return ((1.0 - y) * p.beta_p - p.gamma) * y

    def f_above(y: float) -> float:
        return ((1.0 - y) * p.alpha * p.beta_p - p.gamma) * y

    def sliding_here() -> bool:
        return f_below(y_int) >= 0.0 >= f_above(y_int)

    times = [0.0]
    ys = [y0]
    t, y = 0.0, y0
    while t < t_end - 1e-12 * t_end:
        h = min(dt, t_end - t)
        if y == y_int and sliding_here():
            t += h
            times.append(t)
            ys.append(y_int)
            continue
        f = f_below if y < y_int else f_above
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (y - y_int) * (y_new - y_int) < 0.0 and sliding_here():
            y_new = y_int  # attracting surface: land on it
        y = min(1.0, max(0.0, y_new))
        t += h
        times.append(t)
        ys.append(y)
    return np.array(times), np.array(ys)


def measure_bifurcation_delay(
    tr: Trajectory,
    p: ModelParams,
    delta: float = 1e-2,
) -> Optional[DelayMeasurement]:
    """Delay between beta_eff rising through gamma and y rising through delta.

    Both events are taken as the first upward crossing of the recorded
    series, linearly interpolated.  Returns None when either event is absent
    (distinguishing "not applicable" from a zero delay).
    """
    if len(tr) < 2:
        return None
    cross_ups = [t for t, d in sign_crossings(tr.times, tr.beta_eff_series - p.gamma) if d > 0]
    takeoff_ups = [t for t, d in sign_crossings(tr.times, tr.states[:, 0] - delta) if d > 0]
    if not cross_ups or not takeoff_ups:
        return None
    t_cross, t_takeoff = cross_ups[0], takeoff_ups[0]
    return DelayMeasurement(t_cross, t_takeoff, t_takeoff - t_cross)


def delay_csv(gamma: float, eps: float, delta: float, m: Optional[DelayMeasurement]) -> str:
    """One-row delay report; a not-applicable measurement yields nan fields."""
    lines = [DELAY_HEADER]
    if m is None:
        lines.append(f"{gamma:.17g},{eps:.17g},{delta:.17g},nan,nan,nan")
    else:
        lines.append(
            f"{gamma:.17g},{eps:.17g},{delta:.17g},"
            f"{m.t_cross:.17g},{m.t_takeoff:.17g},{m.delay:.17g}"
        )
    return "\n".join(lines) + "\n"
