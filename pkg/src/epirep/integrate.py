"""Time integration of the coupled dynamics with invariant-set enforcement.

Two schemes are provided: classic fixed-step RK4 and an adaptive embedded
Dormand-Prince 5(4) pair (the default).  Timescale separation is handled by
dividing the epidemic derivative by ``eps_y`` and both replicator derivatives
by ``eps_z``; values of 1 recover the plain system.

After every accepted step the state is clamped back into [0,1]^3.  The exact
flow never leaves the cube, so clamping only absorbs floating-point drift of
the order of the local error; the largest clamp applied is reported on the
trajectory.  Convergence is declared when the per-step state change stays
below ``convergence_eps`` for a full ``convergence_window`` of simulated
time, which copes with the oscillatory approach to the mixed equilibrium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .model import ModelParams, SystemState

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "StiffnessError",
    "integrate",
    "crossing_events",
    "sign_crossings",
    "trajectory_csv",
    "write_trajectory_csv",
]

# Adaptive steps are capped so the convergence window always spans several
# samples even when the dynamics have gone quiet.
_MAX_STEP = 1.0
_MIN_STEP = 1e-14

TRAJECTORY_HEADER = "t,y,z_S,z_I,beta_eff,delta_F"


class StiffnessError(RuntimeError):
    """Adaptive step size collapsed below the representable minimum."""


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk45_adaptive"
    dt: float = 0.01
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    t_end: float = 200.0
    record_every: int = 1
    convergence_eps: float = 1e-9
    convergence_window: float = 10.0

    def __post_init__(self) -> None:
        if self.method not in ("rk4_fixed", "rk45_adaptive"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.t_end > 0:
            raise ValueError("t_end must be > 0")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be > 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class Trajectory:
    times: np.ndarray            # (n,)
    states: np.ndarray           # (n, 3) rows (y, z_S, z_I)
    beta_eff_series: np.ndarray  # (n,)
    delta_F_series: np.ndarray   # (n,)
    converged_to: Optional[SystemState]
    max_clamp: float = 0.0

    def __len__(self) -> int:
        return len(self.times)

    def state_at(self, i: int) -> SystemState:
        return SystemState.from_array(self.states[i])


# Dormand-Prince 5(4) tableau; the 5th-order row propagates, the difference
# to the 4th-order row estimates the local error.
_DP_A = (
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                   187 / 2100, 1 / 40])
_DP_ERR = _DP_B5 - _DP_B4


class _Recorder:
    """Collects accepted steps, decimated, plus convergence bookkeeping."""

    def __init__(self, x0: np.ndarray, cfg: IntegratorConfig):
        self.cfg = cfg
        self.times = [0.0]
        self.states = [x0.copy()]
        self.accepted = 0
        self.quiet_since = 0.0
        self.converged: Optional[np.ndarray] = None
        self.max_clamp = 0.0
        self._last_t = 0.0
        self._last_x = x0.copy()

    def push(self, t: float, x: np.ndarray, clamp: float, delta: float) -> bool:
        """Register an accepted step; returns True when converged."""
        self.accepted += 1
        self.max_clamp = max(self.max_clamp, clamp)
        self._last_t, self._last_x = t, x
        if self.accepted % self.cfg.record_every == 0:
            self.times.append(t)
            self.states.append(x.copy())
        if delta >= self.cfg.convergence_eps:
            self.quiet_since = t
        elif t - self.quiet_since >= self.cfg.convergence_window:
            self.converged = x.copy()
            return True
        return False

    def finish(self) -> tuple[np.ndarray, np.ndarray]:
        if self.times[-1] != self._last_t:
            self.times.append(self._last_t)
            self.states.append(self._last_x.copy())
        return np.array(self.times), np.array(self.states)


def _step_rk45(f, x, h):
    k = np.empty((7, x.size))
    k[0] = f(x)
    for i, row in enumerate(_DP_A):
        xi = x + h * sum(a * k[j] for j, a in enumerate(row))
        k[i + 1] = f(xi)
    x_new = x + h * (_DP_B5 @ k)
    err_vec = h * (_DP_ERR @ k)
    return x_new, err_vec


def _run_rk45(f: Callable, x0: np.ndarray, cfg: IntegratorConfig):
    rec = _Recorder(x0, cfg)
    t, x, h = 0.0, x0.copy(), min(cfg.dt, _MAX_STEP)
    while t < cfg.t_end:
        h = min(h, _MAX_STEP, cfg.t_end - t)
        if h < _MIN_STEP:
            raise StiffnessError(f"adaptive step underflow at t={t:.6g}")
        x_new, err_vec = _step_rk45(f, x, h)
        sc = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(x), np.abs(x_new))
        err = math.sqrt(float(np.mean((err_vec / sc) ** 2)))
        if not math.isfinite(err):
            h *= 0.2
            continue
        if err <= 1.0:
            t += h
            clamped = np.clip(x_new, 0.0, 1.0)
            clamp = float(np.max(np.abs(clamped - x_new)))
            delta = float(np.max(np.abs(clamped - x)))
            x = clamped
            if rec.push(t, x, clamp, delta):
                break
        h *= min(5.0, max(0.2, 0.9 * err ** -0.2 if err > 0 else 5.0))
    return rec


def _run_rk4(f: Callable, x0: np.ndarray, cfg: IntegratorConfig):
    rec = _Recorder(x0, cfg)
    t, x = 0.0, x0.copy()
    while t < cfg.t_end - 1e-12 * cfg.t_end:
        h = min(cfg.dt, cfg.t_end - t)
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x_new = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
        clamped = np.clip(x_new, 0.0, 1.0)
        clamp = float(np.max(np.abs(clamped - x_new)))
        delta = float(np.max(np.abs(clamped - x)))
        x = clamped
        if rec.push(t, x, clamp, delta):
            break
    return rec


def integrate(
    p: ModelParams,
    s0: SystemState,
    cfg: IntegratorConfig,
    eps_y: float = 1.0,
    eps_z: float = 1.0,
) -> Trajectory:
    """Integrate the (possibly timescale-separated) system from ``s0``.

    eps_y scales the epidemic equation (dy/dt = f_y / eps_y), eps_z both
    replicator equations; both must lie in (0, 1].
    """
    if not (0.0 < eps_y <= 1.0 and 0.0 < eps_z <= 1.0):
        raise ValueError(f"eps_y and eps_z must lie in (0, 1], got {eps_y}, {eps_z}")

    c_P, alpha, beta_u, beta_p = p.c_P, p.alpha, p.beta_u, p.beta_p
    gamma, L_eff, dc = p.gamma, p.L * (1.0 - p.alpha), p.c_IP - p.c_IU

    def f(x: np.ndarray) -> np.ndarray:
        y, z_S, z_I = x
        tr = beta_u * z_I + beta_p * (1.0 - z_I)
        sigma = z_S + alpha * (1.0 - z_S)
        return np.array([
            (((1.0 - y) * sigma * tr - gamma) * y) / eps_y,
            (z_S * (1.0 - z_S) * (c_P - L_eff * tr * y)) / eps_z,
            (z_I * (1.0 - z_I) * dc) / eps_z,
        ])

    runner = _run_rk45 if cfg.method == "rk45_adaptive" else _run_rk4
    rec = runner(f, s0.as_array(), cfg)
    times, states = rec.finish()

    y, z_S, z_I = states[:, 0], states[:, 1], states[:, 2]
    tr = beta_u * z_I + beta_p * (1.0 - z_I)
    be = (z_S + alpha * (1.0 - z_S)) * tr
    dF = c_P - L_eff * tr * y
    converged = SystemState.from_array(rec.converged) if rec.converged is not None else None
    return Trajectory(times, states, be, dF, converged, rec.max_clamp)


def sign_crossings(times: np.ndarray, values: np.ndarray) -> list[tuple[float, int]]:
    """Zero crossings of a sampled scalar series.

    Returns (time, direction) pairs with direction +1 for upward crossings,
    times linearly interpolated between the bracketing non-zero samples.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    s = np.sign(values)
    nz = np.nonzero(s)[0]
    events = []
    for a, b in zip(nz[:-1], nz[1:]):
        if s[a] == s[b]:
            continue
        va, vb = values[a], values[b]
        t = times[a] + (times[b] - times[a]) * (0.0 - va) / (vb - va)
        events.append((float(t), int(s[b])))
    return events


def crossing_events(tr: Trajectory, threshold_fn: Callable) -> list[tuple[float, int]]:
    """Crossings of ``threshold_fn(y, z_S, z_I) = 0`` along a trajectory.

    ``threshold_fn`` is applied to the recorded coordinate arrays, so any
    numpy-broadcastable expression works, e.g. ``lambda y, zs, zi: y - 0.1``.
    """
    if len(tr) == 0:
        return []
    g = np.asarray(
        threshold_fn(tr.states[:, 0], tr.states[:, 1], tr.states[:, 2]), dtype=float
    )
    return sign_crossings(tr.times, g)


def trajectory_csv(tr: Trajectory) -> str:
    """CSV text for a trajectory (17 significant digits per field)."""
    lines = [TRAJECTORY_HEADER]
    for i in range(len(tr)):
        lines.append(
            f"{tr.times[i]:.17g},{tr.states[i, 0]:.17g},{tr.states[i, 1]:.17g},"
            f"{tr.states[i, 2]:.17g},{tr.beta_eff_series[i]:.17g},{tr.delta_F_series[i]:.17g}"
        )
    return "\n".join(lines) + "\n"


def write_trajectory_csv(tr: Trajectory, path) -> None:
    with open(path, "w") as fh:
        fh.write(trajectory_csv(tr))
