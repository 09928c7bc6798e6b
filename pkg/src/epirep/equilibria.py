"""Closed-form equilibria of the coupled dynamics and their local stability.

With the infected replicator converging to z_I = 0, the system has at most
five equilibria:

    E0 = (0, 0, 0)            protected disease-free
    E1 = (0, 1, 0)            unprotected disease-free
    E2 = (y_u, 1, 0)          endemic, nobody protects
    E3 = (y_int, z_S_int, 0)  endemic, mixed protection
    E4 = (y_p, 0, 0)          endemic, everybody protects

built from four critical infection levels

    y_u   = 1 - gamma / beta_p          endemic level with no protection
    y_int = c_P / (L (1-alpha) beta_p)  level where Delta_F vanishes
    y_p   = 1 - gamma / (alpha beta_p)  endemic level with full protection
    z_S_int = [gamma / (beta_p (1 - y_int)) - alpha] / (1 - alpha)

Existence and stability are decided by the ordering of gamma against beta_p
and alpha*beta_p and of y_int against y_u and y_p; off the knife-edge
boundaries exactly one of E1..E4 is locally stable.  Eigenvalues come from a
direct cubic solve of the 3x3 characteristic polynomial (one Newton polish
per root), so no linear-algebra eigensolver is needed.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .model import ModelParams, SystemState, jacobian

__all__ = [
    "EQUILIBRIUM_IDS",
    "CriticalLevels",
    "EquilibriumReport",
    "DegenerateParametersError",
    "BoundaryCaseError",
    "critical_levels",
    "equilibrium_point",
    "equilibrium_exists",
    "all_equilibria",
    "regime",
    "eigenvalues_3x3",
    "stability_verdict",
]

EQUILIBRIUM_IDS = ("E0", "E1", "E2", "E3", "E4")

# Table rows: epidemic-parameter regime x endemic-level ordering.
REGIME_R1 = "gamma > beta_p"
REGIME_R2 = "alpha*beta_p < gamma < beta_p, y_u < y_int"
REGIME_R3 = "alpha*beta_p < gamma < beta_p, y_int < y_u"
REGIME_R4 = "gamma < alpha*beta_p, y_u < y_int"
REGIME_R5 = "gamma < alpha*beta_p, y_p < y_int < y_u"
REGIME_R6 = "gamma < alpha*beta_p, y_int < y_p"

# Relative width of the knife-edge neighbourhood treated as "on a boundary".
_BOUNDARY_RTOL = 1e-12


class DegenerateParametersError(ValueError):
    """Critical levels are undefined (beta_p = 0, or y_int = 1)."""


class BoundaryCaseError(ValueError):
    """Parameters sit exactly on a regime boundary; no row applies."""


@dataclass(frozen=True)
class CriticalLevels:
    """The four closed-form levels; they may fall outside [0, 1]."""

    y_u: float
    y_int: float
    y_p: float
    z_S_int: float


@dataclass(frozen=True)
class EquilibriumReport:
    id: str
    point: Optional[SystemState]
    exists: bool
    eigenvalues: tuple[complex, ...]
    stability: str  # "stable" | "unstable" | "marginal" | "undefined"


def critical_levels(p: ModelParams) -> CriticalLevels:
    """Closed-form critical infection levels for valid params with beta_p > 0."""
    if p.beta_p == 0:
        raise DegenerateParametersError("beta_p = 0: y_u and y_int are undefined")
    y_u = 1.0 - p.gamma / p.beta_p
    y_int = p.c_P / (p.L * (1.0 - p.alpha) * p.beta_p)
    y_p = 1.0 - p.gamma / (p.alpha * p.beta_p)
    if y_int == 1.0:
        raise DegenerateParametersError("y_int = 1: z_S_int is undefined")
    z_S_int = (p.gamma / (p.beta_p * (1.0 - y_int)) - p.alpha) / (1.0 - p.alpha)
    return CriticalLevels(y_u=y_u, y_int=y_int, y_p=y_p, z_S_int=z_S_int)


def equilibrium_point(p: ModelParams, eq_id: str) -> Optional[np.ndarray]:
    """Closed-form coordinates of an equilibrium, physical or not.

    Returns None when the formula itself is undefined (degenerate params);
    otherwise the point, which may lie outside the unit cube in regimes where
    the equilibrium does not exist.
    """
    if eq_id == "E0":
        return np.zeros(3)
    if eq_id == "E1":
        return np.array([0.0, 1.0, 0.0])
    try:
        lv = critical_levels(p)
    except DegenerateParametersError:
        return None
    if eq_id == "E2":
        return np.array([lv.y_u, 1.0, 0.0])
    if eq_id == "E3":
        return np.array([lv.y_int, lv.z_S_int, 0.0])
    if eq_id == "E4":
        return np.array([lv.y_p, 0.0, 0.0])
    raise ValueError(f"unknown equilibrium id {eq_id!r}")


def equilibrium_exists(p: ModelParams, eq_id: str) -> bool:
    """Existence inside the unit cube, per parameter regime."""
    if eq_id in ("E0", "E1"):
        return True
    if p.beta_p == 0:
        return False
    if eq_id == "E2":
        return p.beta_p > p.gamma
    if eq_id == "E4":
        return p.gamma < p.alpha * p.beta_p
    if eq_id == "E3":
        try:
            lv = critical_levels(p)
        except DegenerateParametersError:
            return False
        # Inequality chain plus the direct state-space constraints; the two
        # agree in exact arithmetic but can disagree near boundaries.
        return (
            lv.y_p < lv.y_int < lv.y_u
            and lv.y_int < 1.0
            and 0.0 < lv.z_S_int < 1.0
        )
    raise ValueError(f"unknown equilibrium id {eq_id!r}")


def all_equilibria(p: ModelParams) -> list[EquilibriumReport]:
    """Reports for E0..E4: point, existence, eigenvalues, stability verdict."""
    reports = []
    for eq_id in EQUILIBRIUM_IDS:
        pt = equilibrium_point(p, eq_id)
        if pt is None or not np.all(np.isfinite(pt)):
            reports.append(EquilibriumReport(eq_id, None, False, (), "undefined"))
            continue
        state = SystemState.from_array(pt)
        J = jacobian(p, state)
        eigs = eigenvalues_3x3(J)
        verdict = stability_verdict(eigs, J)
        reports.append(
            EquilibriumReport(eq_id, state, equilibrium_exists(p, eq_id), eigs, verdict)
        )
    return reports


def _near(a: float, b: float) -> bool:
    return abs(a - b) <= _BOUNDARY_RTOL * (1.0 + abs(a) + abs(b))


def regime(p: ModelParams) -> str:
    """Row label of the existence/stability table for these parameters.

    Raises BoundaryCaseError when the parameters sit on a knife edge
    (gamma = beta_p, gamma = alpha*beta_p, y_u = y_int or y_int = y_p),
    where one eigenvalue is genuinely zero and no row applies.
    """
    if _near(p.gamma, p.beta_p):
        raise BoundaryCaseError(f"gamma = beta_p (= {p.beta_p}): transcritical boundary")
    if p.gamma > p.beta_p:
        return REGIME_R1

    lv = critical_levels(p)
    if _near(p.gamma, p.alpha * p.beta_p):
        raise BoundaryCaseError(
            f"gamma = alpha*beta_p (= {p.alpha * p.beta_p}): transcritical boundary"
        )
    if _near(lv.y_u, lv.y_int):
        raise BoundaryCaseError(f"y_u = y_int (= {lv.y_int}): transcritical boundary")

    if p.gamma > p.alpha * p.beta_p:
        return REGIME_R2 if lv.y_u < lv.y_int else REGIME_R3

    if lv.y_u < lv.y_int:
        return REGIME_R4
    if _near(lv.y_int, lv.y_p):
        raise BoundaryCaseError(f"y_int = y_p (= {lv.y_int}): transcritical boundary")
    return REGIME_R5 if lv.y_p < lv.y_int else REGIME_R6


# ---------------------------------------------------------------------------
# 3x3 eigenvalues via the characteristic cubic
# ---------------------------------------------------------------------------

def _cubic_roots(a: float, b: float, c: float) -> list[complex]:
    """Roots of lambda^3 + a lambda^2 + b lambda + c via Cardano."""
    # depressed cubic t^3 + p t + q with lambda = t - a/3
    pp = b - a * a / 3.0
    qq = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    shift = -a / 3.0
    half_q_sq = (qq / 2.0) ** 2
    third_p_cb = (pp / 3.0) ** 3
    disc = half_q_sq + third_p_cb
    # disc <= 0 means three real roots (repeated when = 0); a tolerance
    # absorbs the cancellation noise that otherwise fakes tiny spirals at
    # repeated eigenvalues.
    all_real = disc <= 1e-12 * (half_q_sq + abs(third_p_cb) + 1e-300)
    s = cmath.sqrt(disc)
    u3 = -qq / 2.0 + s
    if abs(u3) < abs(-qq / 2.0 - s):
        u3 = -qq / 2.0 - s  # avoid cancellation in the cube-root argument
    if u3 == 0:
        return [complex(shift)] * 3  # p = q = 0: triple root
    u = u3 ** (1.0 / 3.0)
    omega = complex(-0.5, math.sqrt(3.0) / 2.0)
    roots = []
    for k in range(3):
        uk = u * omega ** k
        lam = uk - pp / (3.0 * uk) + shift
        roots.append(complex(lam.real, 0.0) if all_real else lam)
    return roots


def eigenvalues_3x3(m: np.ndarray) -> tuple[complex, complex, complex]:
    """Eigenvalues of a real 3x3 matrix, sorted by real part descending.

    Solves the characteristic cubic directly and polishes each root with one
    Newton step; residuals satisfy |det(m - lambda I)| <= 1e-8 (1 + ||m||_F).
    """
    m = np.asarray(m, dtype=float)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    minors = (
        m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1]
        + m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
        + m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    )
    det = (
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )
    a, b, c = -tr, minors, -det

    def poly(lam: complex) -> complex:
        return ((lam + a) * lam + b) * lam + c

    roots = _cubic_roots(a, b, c)
    polished = []
    for lam in roots:
        fval = poly(lam)
        fder = (3.0 * lam + 2.0 * a) * lam + b
        if abs(fder) > 1e-30:
            # one guarded Newton step; near repeated roots f' ~ 0 and the
            # step is garbage, so keep it only if the residual improves
            cand = lam - fval / fder
            if abs(poly(cand)) < abs(fval):
                lam = cand
        if abs(lam.imag) <= 1e-12 * (1.0 + abs(lam)):
            lam = complex(lam.real, 0.0)
        polished.append(lam)
    polished.sort(key=lambda z: (-z.real, -z.imag))
    return (polished[0], polished[1], polished[2])


def stability_verdict(eigs: tuple[complex, ...], J: np.ndarray) -> str:
    """Classify by eigenvalue real parts with a scale-aware zero tolerance.

    A real part within tol of zero yields "marginal" rather than a guess:
    the transcritical boundaries carry a genuine zero eigenvalue.
    """
    tol = 1e-9 * (1.0 + float(np.linalg.norm(J)))
    res = [z.real for z in eigs]
    if any(abs(r) <= tol for r in res):
        return "marginal"
    if all(r < -tol for r in res):
        return "stable"
    return "unstable"


def with_gamma(p: ModelParams, gamma: float) -> ModelParams:
    """Copy of ``p`` with a different recovery rate."""
    return replace(p, gamma=gamma)
