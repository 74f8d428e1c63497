"""Brute-force variational cross-check on discretized curves.

Deliberately independent of the main pipeline: 2nd-order finite differences,
trapezoidal quadrature, plain gradient descent with backtracking, direction
locks enforced by penalty terms with a stiffening schedule. Used to bracket
shooting costs, not to certify optimality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSegment, NoDescent
from .se2 import BoundaryConditions

PENALTY_SCHEDULE = (1e1, 1e2, 1e3, 1e4, 1e5)


@dataclass(frozen=True)
class DiscreteCurve:
    """Uniform-parameter polyline with locked endpoints and end directions."""

    points: np.ndarray  # (N, 2)
    mode: str           # "projective" | "oriented"
    start_angle: float
    end_angle: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 8:
            raise ValueError("discrete curves need at least 8 planar points")
        if np.min(np.linalg.norm(np.diff(pts, axis=0), axis=1)) <= 1e-9:
            raise DegenerateSegment("consecutive points (nearly) coincide")


def _kinematics(pts: np.ndarray):
    """(v, cross) by 2nd-order differences on the unit-step parameter grid.

    pts may be a single (N, 2) curve or a batch (B, N, 2).
    """
    single = pts.ndim == 2
    P = pts[None] if single else pts
    n = P.shape[1]
    h = 1.0 / (n - 1)
    d1 = np.empty_like(P)
    d1[:, 1:-1] = (P[:, 2:] - P[:, :-2]) / (2 * h)
    # cubic-exact one-sided stencils keep the boundary from polluting the
    # quadratic interior convergence
    d1[:, 0] = (-11 * P[:, 0] + 18 * P[:, 1] - 9 * P[:, 2] + 2 * P[:, 3]) / (6 * h)
    d1[:, -1] = (11 * P[:, -1] - 18 * P[:, -2] + 9 * P[:, -3] - 2 * P[:, -4]) / (6 * h)
    d2 = np.empty_like(P)
    d2[:, 1:-1] = (P[:, 2:] - 2 * P[:, 1:-1] + P[:, :-2]) / (h * h)
    d2[:, 0] = (
        (35 / 12) * P[:, 0] - (26 / 3) * P[:, 1] + (19 / 2) * P[:, 2]
        - (14 / 3) * P[:, 3] + (11 / 12) * P[:, 4]
    ) / (h * h)
    d2[:, -1] = (
        (35 / 12) * P[:, -1] - (26 / 3) * P[:, -2] + (19 / 2) * P[:, -3]
        - (14 / 3) * P[:, -4] + (11 / 12) * P[:, -5]
    ) / (h * h)
    v = np.hypot(d1[..., 0], d1[..., 1])
    cross = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
    if single:
        return v[0], cross[0]
    return v, cross


def _cost_values(pts: np.ndarray) -> np.ndarray:
    """Trapezoidal value(s) of the length-curvature cost; batch-aware."""
    single = pts.ndim == 2
    P = pts[None] if single else pts
    n = P.shape[1]
    h = 1.0 / (n - 1)
    v, cross = _kinematics(P)
    v2 = np.maximum(v * v, 1e-18)
    w = cross / v2  # speed times curvature
    f = np.hypot(v, w)
    vals = h * (np.sum(f[:, 1:-1], axis=1) + 0.5 * (f[:, 0] + f[:, -1]))
    vals = np.where(np.all(np.isfinite(f), axis=1), vals, np.inf)
    return float(vals[0]) if single else vals


def discrete_cost_J(curve: DiscreteCurve) -> float:
    """Trapezoidal sum of sqrt(v^2 + v^2 K^2) over the polyline."""
    if np.min(np.linalg.norm(np.diff(curve.points, axis=0), axis=1)) <= 1e-9:
        raise DegenerateSegment("consecutive points (nearly) coincide")
    return _cost_values(curve.points)


def _direction_penalties(pts: np.ndarray, bc_angles, mode: str, weight: float):
    """Penalty for the first/last segment directions; mod pi in projective
    mode (sin^2 of the angle gap), full-circle in oriented mode."""
    single = pts.ndim == 2
    P = pts[None] if single else pts
    a0, a1 = bc_angles
    d_first = P[:, 1] - P[:, 0]
    d_last = P[:, -1] - P[:, -2]
    pen = np.zeros(P.shape[0])
    for d, ang in ((d_first, a0), (d_last, a1)):
        phi = np.arctan2(d[:, 1], d[:, 0])
        if mode == "projective":
            pen += np.sin(phi - ang) ** 2
        else:
            pen += 2.0 * np.sin(0.5 * (phi - ang)) ** 2
    pen = weight * pen
    return float(pen[0]) if single else pen


def objective(pts: np.ndarray, bc_angles, mode: str, weight: float):
    return _cost_values(pts) + _direction_penalties(pts, bc_angles, mode, weight)


def gradient(
    pts: np.ndarray, bc_angles, mode: str, weight: float, scheme: str = "forward"
) -> np.ndarray:
    """Finite-difference gradient of the penalized objective over the
    interior points (endpoints stay locked). Batched perturbations keep the
    forward scheme cheap; the central scheme exists as a cross-check."""
    n = pts.shape[0]
    free = slice(1, n - 1)
    m = 2 * (n - 2)
    eps = 1e-7 * max(1.0, float(np.max(np.abs(pts))))
    base = objective(pts, bc_angles, mode, weight)
    batch = np.repeat(pts[None], m, axis=0)
    idx = np.arange(m)
    rows = 1 + idx // 2
    cols = idx % 2
    batch[idx, rows, cols] += eps
    plus = objective(batch, bc_angles, mode, weight)
    if scheme == "forward":
        g = (plus - base) / eps
    else:
        batch2 = np.repeat(pts[None], m, axis=0)
        batch2[idx, rows, cols] -= eps
        minus = objective(batch2, bc_angles, mode, weight)
        g = (plus - minus) / (2 * eps)
    out = np.zeros_like(pts)
    out[free] = g.reshape(n - 2, 2)
    return out


def _descend(pts, bc_angles, mode, weight, max_iter=120, rel_stop=3e-9):
    """Plain gradient descent with a backtracking step."""
    cost = objective(pts, bc_angles, mode, weight)
    step = 0.05 * max(1e-6, float(np.linalg.norm(pts[-1] - pts[0])))
    for _ in range(max_iter):
        g = gradient(pts, bc_angles, mode, weight)
        gnorm = float(np.linalg.norm(g))
        if gnorm < 1e-12:
            break
        improved = False
        for _ in range(30):
            trial = pts - (step / gnorm) * g
            c_try = objective(trial, bc_angles, mode, weight)
            if c_try < cost - 1e-15:
                improved = True
                break
            step *= 0.5
            if step < 1e-14:
                break
        if not improved:
            break
        gain = cost - c_try
        pts, cost = trial, c_try
        step *= 1.3
        if gain < rel_stop * max(cost, 1e-12):
            break
    return pts, cost


def _bezier(p0, p1, c1, c2, n):
    t = np.linspace(0.0, 1.0, n)[:, None]
    return (
        (1 - t) ** 3 * p0
        + 3 * (1 - t) ** 2 * t * c1
        + 3 * (1 - t) * t**2 * c2
        + t**3 * p1
    )


def _initializers(bc: BoundaryConditions, n: int, restarts: int, rng: np.random.Generator):
    p0 = np.asarray(bc.start_point, dtype=float)
    p1 = np.asarray(bc.end_point, dtype=float)
    d = float(np.linalg.norm(p1 - p0))
    e0 = np.array([math.cos(bc.start_angle), math.sin(bc.start_angle)])
    e1 = np.array([math.cos(bc.end_angle), math.sin(bc.end_angle)])
    t = np.linspace(0.0, 1.0, n)[:, None]
    line = (1 - t) * p0 + t * p1
    inits = [line]
    signs = [(1, 1), (1, -1), (-1, 1), (-1, -1)] if bc.mode == "projective" else [(1, 1)]
    for s0, s1 in signs:
        for scale in (0.4,) if bc.mode == "projective" else (0.4, 0.8):
            c1 = p0 + s0 * scale * d * e0
            c2 = p1 - s1 * scale * d * e1
            inits.append(_bezier(p0, p1, c1, c2, n))
    while len(inits) < restarts:
        wiggle = rng.normal(scale=0.08 * d, size=(n, 2))
        wiggle[0] = wiggle[-1] = 0.0
        inits.append(line + wiggle * np.sin(math.pi * t))
    return inits[:restarts]


def minimize(
    bc: BoundaryConditions,
    n_points: int = 200,
    restarts: int = 8,
    seed: int = 0,
) -> tuple[DiscreteCurve, float]:
    """Descend the discretized cost from several initializations.

    Direction locks tighten along PENALTY_SCHEDULE with re-optimization at
    each stage. Returns the best curve and its (unpenalized) cost value.
    """
    if n_points < 16:
        raise ValueError("need at least 16 discretization points")
    rng = np.random.default_rng(seed)
    angles = (bc.start_angle, bc.end_angle)
    best_pts = None
    best_cost = math.inf
    stage_iters = (50, 50, 70, 90, 130)
    for init in _initializers(bc, n_points, restarts, rng):
        pts = init.copy()
        for weight, iters in zip(PENALTY_SCHEDULE, stage_iters):
            pts, _ = _descend(pts, angles, bc.mode, weight, max_iter=iters)
        final = _cost_values(pts)
        # reject runs that failed to satisfy the direction locks
        if _direction_penalties(pts, angles, bc.mode, 1.0) > 1e-8:
            continue
        if final < best_cost:
            best_cost = final
            best_pts = pts
    if best_pts is None or not math.isfinite(best_cost):
        raise NoDescent("no restart produced a lock-satisfying descent")
    curve = DiscreteCurve(
        points=best_pts, mode=bc.mode, start_angle=angles[0], end_angle=angles[1]
    )
    return curve, float(best_cost)
