"""Coupled SIS epidemic / replicator protection-adoption model.

The state (y, z_S, z_I) collects the infected fraction, the unprotected
fraction among susceptibles and the unprotected fraction among infected.
Protection scales the transmission rate on both sides of a contact, so the
epidemic sees an effective infection rate

    beta_eff = (z_S + alpha (1-z_S)) (beta_u z_I + beta_p (1-z_I)),

while susceptibles weigh the protection cost c_P against the instantaneous
infection risk, giving the payoff advantage of staying unprotected

    Delta_F = c_P - L (1-alpha) (beta_u z_I + beta_p (1-z_I)) y.

The coupled dynamics are

    dy/dt   = [(1-y) beta_eff - gamma] y
    dz_S/dt = z_S (1-z_S) Delta_F
    dz_I/dt = z_I (1-z_I) (c_IP - c_IU)

and leave the unit cube [0,1]^3 forward-invariant: the y-flow vanishes at
y=0 and points inward at y=1, and replicator boundaries z in {0,1} are fixed.
All operations here are pure functions of immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModelParams",
    "SystemState",
    "Derivative",
    "default_params",
    "vector_field",
    "jacobian",
    "beta_eff",
    "delta_F",
]


@dataclass(frozen=True)
class ModelParams:
    """Epidemic and behavioral constants.

    Validity is checked once at construction so that the hot-path operations
    (vector field, Jacobian) can assume well-formed inputs.

    c_P     cost of adopting protection for a susceptible (> 0)
    alpha   protection efficacy factor for susceptibles (0 < alpha < 1)
    beta_u  transmission rate of an unprotected infected (> beta_p)
    beta_p  transmission rate of a protected infected (>= 0)
    c_IU    cost of remaining unprotected while infected (> c_IP)
    c_IP    cost of protection while infected (>= 0)
    L       loss upon infection (> 0)
    gamma   recovery rate (> 0)
    """

    c_P: float
    alpha: float
    beta_u: float
    beta_p: float
    c_IU: float
    c_IP: float
    L: float
    gamma: float

    def __post_init__(self) -> None:
        if not self.c_P > 0:
            raise ValueError(f"c_P must be > 0, got {self.c_P}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.beta_u > self.beta_p >= 0:
            raise ValueError(
                f"need beta_u > beta_p >= 0, got beta_u={self.beta_u}, beta_p={self.beta_p}"
            )
        if not self.c_IU > self.c_IP >= 0:
            raise ValueError(
                f"need c_IU > c_IP >= 0, got c_IU={self.c_IU}, c_IP={self.c_IP}"
            )
        if not self.L > 0:
            raise ValueError(f"L must be > 0, got {self.L}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")


@dataclass(frozen=True)
class SystemState:
    """A point (y, z_S, z_I).

    Model states live in the unit cube; that invariant is maintained by the
    integrator, not enforced here, so that diagnostic extensions of
    equilibrium branches outside the cube remain representable.
    """

    y: float
    z_S: float
    z_I: float

    def as_array(self) -> np.ndarray:
        return np.array([self.y, self.z_S, self.z_I], dtype=float)

    @classmethod
    def from_array(cls, x) -> "SystemState":
        return cls(float(x[0]), float(x[1]), float(x[2]))

    def in_unit_cube(self, tol: float = 0.0) -> bool:
        return all(-tol <= c <= 1.0 + tol for c in (self.y, self.z_S, self.z_I))


@dataclass(frozen=True)
class Derivative:
    """Time derivatives (dy/dt, dz_S/dt, dz_I/dt)."""

    dy: float
    dz_S: float
    dz_I: float

    def as_array(self) -> np.ndarray:
        return np.array([self.dy, self.dz_S, self.dz_I], dtype=float)


def default_params(gamma: float = 0.1) -> ModelParams:
    """Parameter set used by the bundled configs and experiment scripts."""
    return ModelParams(
        c_P=1.0, alpha=0.5, beta_u=0.3, beta_p=0.15,
        c_IU=2.0, c_IP=1.0, L=80.0, gamma=gamma,
    )


def _transmission(p: ModelParams, z_I: float) -> float:
    # mean transmission rate of the infected pool
    return p.beta_u * z_I + p.beta_p * (1.0 - z_I)


def vector_field(p: ModelParams, s: SystemState) -> Derivative:
    """Evaluate the coupled dynamics at a state inside the unit cube."""
    tr = _transmission(p, s.z_I)
    sigma = s.z_S + p.alpha * (1.0 - s.z_S)
    dy = ((1.0 - s.y) * sigma * tr - p.gamma) * s.y
    dz_S = s.z_S * (1.0 - s.z_S) * (p.c_P - p.L * (1.0 - p.alpha) * tr * s.y)
    dz_I = s.z_I * (1.0 - s.z_I) * (p.c_IP - p.c_IU)
    return Derivative(dy, dz_S, dz_I)


def jacobian(p: ModelParams, s: SystemState) -> np.ndarray:
    """Analytic 3x3 Jacobian of the vector field at ``s``.

    The third row is (0, 0, (1-2 z_I)(c_IP - c_IU)) because the infected
    replicator decouples from y and z_S.
    """
    y, z_S, z_I = s.y, s.z_S, s.z_I
    tr = _transmission(p, z_I)
    sigma = z_S + p.alpha * (1.0 - z_S)
    la = p.L * (1.0 - p.alpha)
    J = np.empty((3, 3), dtype=float)
    J[0, 0] = ((1.0 - y) * sigma * tr - p.gamma) - y * sigma * tr
    J[0, 1] = y * (1.0 - y) * (1.0 - p.alpha) * tr
    J[0, 2] = y * (1.0 - y) * sigma * (p.beta_u - p.beta_p)
    J[1, 0] = -z_S * (1.0 - z_S) * la * tr
    J[1, 1] = (1.0 - 2.0 * z_S) * (p.c_P - la * tr * y)
    J[1, 2] = -z_S * (1.0 - z_S) * la * (p.beta_u - p.beta_p) * y
    J[2, 0] = 0.0
    J[2, 1] = 0.0
    J[2, 2] = (1.0 - 2.0 * z_I) * (p.c_IP - p.c_IU)
    return J


def beta_eff(p: ModelParams, s: SystemState) -> float:
    """Effective infection rate felt by the population at state ``s``."""
    return (s.z_S + p.alpha * (1.0 - s.z_S)) * _transmission(p, s.z_I)


def delta_F(p: ModelParams, s: SystemState) -> float:
    """Payoff advantage of staying unprotected for a susceptible.

    Positive values drive z_S toward 1, negative toward 0; the sign flips
    exactly at the interior infection level where protection cost and
    expected infection loss balance.
    """
    return p.c_P - p.L * (1.0 - p.alpha) * _transmission(p, s.z_I) * s.y
