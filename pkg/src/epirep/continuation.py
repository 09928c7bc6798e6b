"""Equilibrium branches over the recovery rate and transcritical points.

All five equilibrium branches are graphs over gamma, so natural-parameter
continuation suffices: the closed forms act as predictor at each grid value
and a short Newton iteration on the vector field corrects them (a guard
against transcription errors; the correction is a no-op to rounding).

A transcritical crossing makes one real eigenvalue pass through zero, which
flips the sign of det(J) along the branch.  Bifurcation points are located by
bisecting those determinant sign changes to |d gamma| <= 1e-10 and pairing
branches whose states coincide at the zero.  For this model the exchanging
pairs are fixed, so labels are keyed to the pair identity:

    T0: E0/E4    T1: E1/E2    T2: E2/E3    T3: E3/E4

Branch segments with states outside [0,1]^3 are truncated by default; pass
``include_nonphysical=True`` to keep them for diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .equilibria import (
    EQUILIBRIUM_IDS,
    eigenvalues_3x3,
    equilibrium_point,
    stability_verdict,
    with_gamma,
)
from .model import ModelParams, SystemState, jacobian, vector_field

__all__ = [
    "Branch",
    "BranchSample",
    "BifurcationPoint",
    "BranchTraceError",
    "newton_correct",
    "trace_branch",
    "detect_transcritical",
    "branches_csv",
    "bifurcations_csv",
]

BRANCH_HEADER = "branch,gamma,y,z_S,z_I,re_lambda_max,stable"
BIFURCATION_HEADER = "label,gamma_star,branch_a,branch_b"

_PAIR_LABELS = {
    frozenset(("E0", "E4")): "T0",
    frozenset(("E1", "E2")): "T1",
    frozenset(("E2", "E3")): "T2",
    frozenset(("E3", "E4")): "T3",
}

_CUBE_TOL = 1e-12
_RESIDUAL_TOL = 1e-10


class BranchTraceError(RuntimeError):
    """Newton correction failed to reach a small residual at some gamma."""


@dataclass(frozen=True)
class BranchSample:
    gamma: float
    state: np.ndarray
    re_lambda_max: float
    stable: bool


@dataclass
class Branch:
    id: str
    samples: list[BranchSample]
    valid_range: Optional[tuple[float, float]]


@dataclass(frozen=True)
class BifurcationPoint:
    label: str
    gamma_star: float
    branches: tuple[str, str]


def _residual(p: ModelParams, x: np.ndarray) -> np.ndarray:
    return vector_field(p, SystemState.from_array(x)).as_array()


def newton_correct(p: ModelParams, x0: np.ndarray, max_iter: int = 5) -> np.ndarray:
    """Polish an approximate equilibrium with Newton's method.

    Raises BranchTraceError if the residual neither reaches ~machine level
    nor decreases within ``max_iter`` iterations.  A singular Jacobian is
    tolerated when the residual is already below the branch tolerance (that
    is the situation exactly at a transcritical point).
    """
    x = np.array(x0, dtype=float)
    f = _residual(p, x)
    for _ in range(max_iter):
        nf = float(np.max(np.abs(f)))
        if nf <= 1e-13:
            return x
        try:
            step = np.linalg.solve(jacobian(p, SystemState.from_array(x)), -f)
        except np.linalg.LinAlgError:
            if nf <= _RESIDUAL_TOL:
                return x
            raise BranchTraceError(
                f"singular Jacobian with residual {nf:.3g} at gamma={p.gamma}"
            )
        x_new = x + step
        f_new = _residual(p, x_new)
        if float(np.max(np.abs(f_new))) >= nf:
            break  # no decrease; accept x if already good enough
        x, f = x_new, f_new
    if float(np.max(np.abs(f))) > _RESIDUAL_TOL:
        raise BranchTraceError(
            f"Newton correction stalled at gamma={p.gamma} (residual {np.max(np.abs(f)):.3g})"
        )
    return x


def _in_cube(x: np.ndarray) -> bool:
    return bool(np.all(x >= -_CUBE_TOL) and np.all(x <= 1.0 + _CUBE_TOL))


def trace_branch(
    p_base: ModelParams,
    eq_id: str,
    gamma_range: tuple[float, float],
    n_steps: int,
    include_nonphysical: bool = False,
) -> Branch:
    """Sample one equilibrium branch on a uniform gamma grid."""
    lo, hi = gamma_range
    if not (0.0 < lo < hi):
        raise ValueError(f"gamma_range must satisfy 0 < lo < hi, got {gamma_range}")
    if n_steps < 2:
        raise ValueError("n_steps must be >= 2")

    samples: list[BranchSample] = []
    physical_gammas: list[float] = []
    for gamma in np.linspace(lo, hi, n_steps):
        p = with_gamma(p_base, float(gamma))
        pt = equilibrium_point(p, eq_id)
        if pt is None or not np.all(np.isfinite(pt)):
            continue
        pt = newton_correct(p, pt)
        J = jacobian(p, SystemState.from_array(pt))
        eigs = eigenvalues_3x3(J)
        stable = stability_verdict(eigs, J) == "stable"
        physical = _in_cube(pt)
        if physical:
            physical_gammas.append(float(gamma))
        if physical or include_nonphysical:
            samples.append(BranchSample(float(gamma), pt, eigs[0].real, stable))

    valid = (min(physical_gammas), max(physical_gammas)) if physical_gammas else None
    return Branch(eq_id, samples, valid)


def _det3(m: np.ndarray) -> float:
    return float(
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )


def _branch_det(p_base: ModelParams, eq_id: str, gamma: float) -> float:
    p = with_gamma(p_base, gamma)
    pt = equilibrium_point(p, eq_id)
    if pt is None or not np.all(np.isfinite(pt)):
        return float("nan")
    return _det3(jacobian(p, SystemState.from_array(pt)))


def detect_transcritical(
    p_base: ModelParams,
    gamma_range: tuple[float, float],
    scan_points: int = 512,
) -> list[BifurcationPoint]:
    """Locate all transcritical points inside ``gamma_range``.

    Returns an empty list when no eigenvalue zero is bracketed (not an
    error).  Each reported point has the exchanging branch pair coinciding in
    state space to 1e-7 and a vanishing eigenvalue on both branches.
    """
    lo, hi = gamma_range
    if not (0.0 < lo < hi):
        raise ValueError(f"gamma_range must satisfy 0 < lo < hi, got {gamma_range}")

    zeros: list[tuple[str, float]] = []
    grid = np.linspace(lo, hi, scan_points)
    for eq_id in EQUILIBRIUM_IDS:
        dets = np.array([_branch_det(p_base, eq_id, g) for g in grid])
        for i in range(len(grid) - 1):
            da, db = dets[i], dets[i + 1]
            if not (np.isfinite(da) and np.isfinite(db)):
                continue
            if da == 0.0:  # grid point exactly on the zero
                zeros.append((eq_id, float(grid[i])))
                continue
            if da * db < 0.0:
                zeros.append((eq_id, _bisect_det(p_base, eq_id, grid[i], grid[i + 1])))

    points: list[BifurcationPoint] = []
    used: set[int] = set()
    for i, (id_a, ga) in enumerate(zeros):
        if i in used:
            continue
        for j in range(i + 1, len(zeros)):
            id_b, gb = zeros[j]
            if j in used or id_a == id_b or abs(ga - gb) > 1e-8:
                continue
            g_star = 0.5 * (ga + gb)
            pa = equilibrium_point(with_gamma(p_base, g_star), id_a)
            pb = equilibrium_point(with_gamma(p_base, g_star), id_b)
            if pa is None or pb is None:
                continue
            if float(np.max(np.abs(pa - pb))) > 1e-7:
                continue
            if not (_has_zero_eig(p_base, id_a, g_star) and _has_zero_eig(p_base, id_b, g_star)):
                continue
            pair = frozenset((id_a, id_b))
            label = _PAIR_LABELS.get(pair, "T?")
            points.append(BifurcationPoint(label, g_star, tuple(sorted(pair))))
            used.update((i, j))
            break
    points.sort(key=lambda bp: bp.gamma_star)
    return points


def _bisect_det(p_base: ModelParams, eq_id: str, lo: float, hi: float) -> float:
    f_lo = _branch_det(p_base, eq_id, lo)
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        f_mid = _branch_det(p_base, eq_id, mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def _has_zero_eig(p_base: ModelParams, eq_id: str, gamma: float) -> bool:
    p = with_gamma(p_base, gamma)
    pt = equilibrium_point(p, eq_id)
    eigs = eigenvalues_3x3(jacobian(p, SystemState.from_array(pt)))
    return min(abs(z.real) for z in eigs) <= 1e-7


def branches_csv(branches: list[Branch]) -> str:
    lines = [BRANCH_HEADER]
    for br in sorted(branches, key=lambda b: b.id):
        for s in br.samples:
            lines.append(
                f"{br.id},{s.gamma:.17g},{s.state[0]:.17g},{s.state[1]:.17g},"
                f"{s.state[2]:.17g},{s.re_lambda_max:.17g},{1 if s.stable else 0}"
            )
    return "\n".join(lines) + "\n"


def bifurcations_csv(points: list[BifurcationPoint]) -> str:
    lines = [BIFURCATION_HEADER]
    for bp in points:
        lines.append(f"{bp.label},{bp.gamma_star:.17g},{bp.branches[0]},{bp.branches[1]}")
    return "\n".join(lines) + "\n"
