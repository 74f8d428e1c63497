"""Boundary-value solver: multi-start shooting over initial covectors.

The projective (reversible) problem always admits a minimizer; the solver
scans a grid of unit-level covectors and durations, refines promising starts
by damped least-squares iterations on the endpoint mismatch, deduplicates,
and prunes candidates whose planar projection would stop three or more
times. The oriented analyzer additionally enumerates the zero-Hamiltonian
line/rotation concatenations and classifies whether the best trajectory
projects to an admissible curve (no in-place rotation of positive duration).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .costs import cost_C
from .errors import DegenerateBoundary, NoConvergence
from .extremals import (
    Covector,
    ExtremalSpec,
    abnormal_extremals,
    integrate_oriented,
    integrate_projective,
    normalize_covector,
    oriented_endpoint,
    pendulum_flow_batch,
    projective_endpoint,
)
from .se2 import (
    IDENTITY,
    P_IDENTITY,
    BoundaryConditions,
    PSE2Element,
    SE2Element,
    canonicalize,
    wrap_signed,
)
from .trajectory import (
    ARC_ABNORMAL_ROTATION,
    ARC_PURE_ROTATION,
    ControlTrajectory,
    concatenate,
)


@dataclass(frozen=True)
class GridSpec:
    """Multi-start grid: covector angles, vertical components, durations."""

    n_alpha: int = 48
    n_lambda_theta: int = 17
    t_factors: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)
    refine_top: int = 48
    max_iterations: int = 60

    def doubled(self) -> "GridSpec":
        factors = sorted(set(self.t_factors) | {
            0.5 * (a + b) for a, b in zip(self.t_factors, self.t_factors[1:])
        })
        return GridSpec(
            n_alpha=2 * self.n_alpha,
            n_lambda_theta=2 * self.n_lambda_theta - 1,
            t_factors=tuple(factors),
            refine_top=2 * self.refine_top,
            max_iterations=self.max_iterations,
        )


@dataclass(frozen=True)
class ShootingResult:
    lambda0: Covector
    duration: float
    mismatch: tuple[float, float, float]
    cost: float
    cusp_times: tuple[float, ...]
    converged: bool
    trajectory: ControlTrajectory

    @property
    def n_cusps(self) -> int:
        return len(self.cusp_times)

    def to_dict(self, max_samples: int = 400) -> dict:
        n = self.trajectory.times.size
        stride = max(1, n // max_samples)
        idx = list(range(0, n, stride))
        if idx[-1] != n - 1:
            idx.append(n - 1)
        samples = [
            [
                float(self.trajectory.times[i]),
                float(self.trajectory.states[i, 0]),
                float(self.trajectory.states[i, 1]),
                float(self.trajectory.states[i, 2]),
                float(self.trajectory.controls[i, 0]),
                float(self.trajectory.controls[i, 1]),
            ]
            for i in idx
        ]
        return {
            "cost": float(self.cost),
            "duration": float(self.duration),
            "lambda0": [
                float(self.lambda0.lambda_x),
                float(self.lambda0.lambda_y),
                float(self.lambda0.lambda_theta),
            ],
            "cusps": [float(t) for t in self.cusp_times],
            "converged": bool(self.converged),
            "mismatch": [float(v) for v in self.mismatch],
            "samples": samples,
        }


@dataclass(frozen=True)
class RotationWitness:
    kind: str  # initial_rotation_arc | final_rotation_arc | interior_rotation_arc
    t0: float
    duration: float


@dataclass(frozen=True)
class OrientedAnalysis:
    minimizer: ControlTrajectory
    projection_admissible: bool
    witness: Optional[RotationWitness]
    cost: float
    mismatch: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def to_dict(self, max_samples: int = 400) -> dict:
        n = self.minimizer.times.size
        stride = max(1, n // max_samples)
        idx = list(range(0, n, stride))
        if idx[-1] != n - 1:
            idx.append(n - 1)
        d = {
            "cost": float(self.cost),
            "projection_admissible": bool(self.projection_admissible),
            "witness": None,
            "mismatch": [float(v) for v in self.mismatch],
            "arcs": [
                {"kind": m.kind, "t0": float(m.t0), "t1": float(m.t1)}
                for m in self.minimizer.arc_marks
            ],
            "samples": [
                [
                    float(self.minimizer.times[i]),
                    float(self.minimizer.states[i, 0]),
                    float(self.minimizer.states[i, 1]),
                    float(self.minimizer.states[i, 2]),
                ]
                for i in idx
            ],
        }
        if self.witness is not None:
            d["witness"] = {
                "kind": self.witness.kind,
                "t0": float(self.witness.t0),
                "duration": float(self.witness.duration),
            }
        return d


def mismatch(endpoint, target) -> tuple[float, float, float]:
    """Componentwise residual (target minus endpoint); the angle residual is
    the shortest signed distance in the element's quotient."""
    if isinstance(endpoint, PSE2Element) != isinstance(target, PSE2Element):
        raise ValueError("endpoint and target live in different spaces")
    period = endpoint.angle_period
    return (
        target.x - endpoint.x,
        target.y - endpoint.y,
        wrap_signed(target.theta - endpoint.theta, period),
    )


def _mismatch_raw(state: np.ndarray, target: np.ndarray, period: float) -> np.ndarray:
    return np.array([
        target[0] - state[0],
        target[1] - state[1],
        wrap_signed(target[2] - state[2], period),
    ])


def _grid_covectors(grid: GridSpec, theta0: float = 0.0) -> np.ndarray:
    """Unit-level covectors lambda = (rho cos a, rho sin a, lth) with
    rho^2 cos^2(theta0 - a) + lth^2 = 1. Near-degenerate cos(theta0 - a)
    starts (unbounded rho) are skipped; the rotation branch is reached from
    neighboring angles."""
    out = []
    alphas = np.linspace(0.0, 2.0 * math.pi, grid.n_alpha, endpoint=False)
    lths = np.linspace(-1.0, 1.0, grid.n_lambda_theta)
    for a in alphas:
        ca = math.cos(theta0 - a)
        if abs(ca) < 1e-8:
            continue
        for lth in lths:
            r2 = 1.0 - lth * lth
            if r2 < 1e-20:
                continue  # rho = 0 rotates in place; cannot reach a distinct endpoint
            rho = math.sqrt(r2) / abs(ca)
            out.append((rho * math.cos(a), rho * math.sin(a), lth))
    # supplementary family parametrized by the unit vector (h1, h2)(0) and
    # rho directly; the constrained grid above thins out near |h2| -> 1 at
    # moderate rho, which is exactly where rotation-first solutions start
    psis = np.linspace(0.0, 2.0 * math.pi, 2 * grid.n_alpha, endpoint=False)
    for psi in psis:
        h1 = math.cos(psi)
        lth = math.sin(psi)
        for rho in (0.25, 0.5, 1.0, 2.0, 4.0):
            perp2 = rho * rho - h1 * h1
            if perp2 < 1e-16:
                continue
            perp = math.sqrt(perp2)
            c0, s0 = math.cos(theta0), math.sin(theta0)
            for sgn in (1.0, -1.0):
                # (lx, ly) with component h1 along (cos theta0, sin theta0)
                lx = h1 * c0 - sgn * perp * s0
                ly = h1 * s0 + sgn * perp * c0
                out.append((lx, ly, lth))
    arr = np.array(out)
    # deduplicate identical covectors produced by symmetric angles, then
    # re-normalize exactly onto the unit level at theta0
    arr = np.unique(np.round(arr, 12), axis=0)
    h1 = arr[:, 0] * math.cos(theta0) + arr[:, 1] * math.sin(theta0)
    nrm = np.hypot(h1, arr[:, 2])
    return arr / nrm[:, None]


def _fd_jacobian(residual_fn, w: np.ndarray, r: np.ndarray, central: bool):
    """Finite-difference Jacobian; central steps balance integrator noise
    (~1e-12) against truncation, forward steps favor speed early on."""
    m = w.size
    J = np.empty((r.size, m))
    for j in range(m):
        h = (1e-4 if central else 1e-6) * max(1.0, abs(w[j]))
        wp = w.copy()
        wp[j] += h
        rp = residual_fn(wp)
        if rp is None:
            return None
        if central:
            wm = w.copy()
            wm[j] -= h
            rm = residual_fn(wm)
            if rm is None:
                return None
            J[:, j] = (rp - rm) / (2.0 * h)
        else:
            J[:, j] = (rp - r) / h
    return J


def _converged(r: np.ndarray, tol: Tolerances) -> bool:
    return (
        math.hypot(r[0], r[1]) <= 0.1 * tol.mismatch_pos
        and abs(r[2]) <= 0.1 * tol.mismatch_ang
        and abs(r[3]) <= 1e-13
    )


def _lm_refine(residual_fn, w0: np.ndarray, max_iter: int, tol: Tolerances):
    """Damped least-squares iteration followed by an undamped Newton polish.

    The damped phase is robust far from a solution but crawls in the curved,
    badly scaled valleys these endpoint maps produce; plain Newton steps on
    the square system finish the job there (the Jacobian is ill-conditioned
    but not singular, and transiently uphill steps are allowed).
    """
    w = np.asarray(w0, dtype=float)
    r = residual_fn(w)
    if r is None:
        return None
    best_w, best_r = w.copy(), r.copy()
    mu = 1e-4
    for _ in range(max_iter):
        if _converged(r, tol):
            break
        J = _fd_jacobian(residual_fn, w, r, central=np.linalg.norm(r[:3]) < 1e-3)
        if J is None:
            break
        improved = False
        for _ in range(12):
            A = J.T @ J
            A += mu * np.diag(np.maximum(np.diag(A), 1e-12))
            try:
                delta = np.linalg.solve(A, -J.T @ r)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            w_try = w + delta
            r_try = residual_fn(w_try)
            if r_try is not None and np.linalg.norm(r_try) < np.linalg.norm(r):
                w, r = w_try, r_try
                mu = max(mu / 3.0, 1e-12)
                improved = True
                break
            mu *= 10.0
        if np.linalg.norm(r) < np.linalg.norm(best_r):
            best_w, best_r = w.copy(), r.copy()
        if not improved:
            break

    # Newton polish from the best point seen so far
    w, r = best_w.copy(), best_r.copy()
    if not _converged(r, tol) and np.linalg.norm(r[:3]) < 1e-3:
        for _ in range(15):
            J = _fd_jacobian(residual_fn, w, r, central=True)
            if J is None:
                break
            try:
                delta = np.linalg.solve(J, -r)
            except np.linalg.LinAlgError:
                break
            w_try = w + delta
            r_try = residual_fn(w_try)
            if r_try is None:
                break
            w, r = w_try, r_try
            if np.linalg.norm(r) < np.linalg.norm(best_r):
                best_w, best_r = w.copy(), r.copy()
            if _converged(r, tol):
                break
            if np.linalg.norm(r) > 1e4 * max(np.linalg.norm(best_r), 1e-12):
                break
    return best_w, best_r


def _endpoint_cusps(traj: ControlTrajectory, zeros: np.ndarray, eps: float = 1e-9):
    """Merge interior h1 zeros with endpoint stops into one sorted tuple."""
    h = traj.h_components()
    times = list(np.asarray(zeros, dtype=float))
    if abs(h[0, 0]) < eps:
        times.append(float(traj.times[0]))
    if abs(h[-1, 0]) < eps:
        times.append(float(traj.times[-1]))
    times.sort()
    merged: list[float] = []
    for t in times:
        if not merged or t - merged[-1] > 1e-9:
            merged.append(t)
    return tuple(merged)


def solve_projective(
    bc: BoundaryConditions,
    grid: GridSpec = GridSpec(),
    tol: Tolerances = DEFAULT_TOL,
    return_pruned: bool = False,
):
    """Solve the reversible completion problem by multi-start shooting.

    Returns converged, deduplicated results sorted by (cost, number of
    stops, covector angle); candidates whose projection stops three or more
    times are pruned. Raises NoConvergence when no start converges.
    """
    if bc.mode != "projective":
        raise ValueError("solve_projective expects projective boundary conditions")
    _, target_el = canonicalize(bc)
    target = np.array([target_el.x, target_el.y, target_el.theta])
    period = math.pi

    dist = math.hypot(target[0], target[1])
    if dist <= 1e-12:
        raise DegenerateBoundary("endpoints coincide after canonicalization")
    ang_gap = abs(wrap_signed(target[2], period))
    t_base = dist + ang_gap
    horizons = np.array(sorted({f * t_base for f in grid.t_factors}))

    lams = _grid_covectors(grid)
    states = pendulum_flow_batch(lams, 0.0, horizons)

    pos_scale = max(dist, 1e-9)
    ang_scale = max(ang_gap, 0.3)
    starts = []
    for k, T in enumerate(horizons):
        for i in range(lams.shape[0]):
            r = _mismatch_raw(states[k, i], target, period)
            norm = math.hypot(r[0], r[1]) / pos_scale + abs(r[2]) / ang_scale
            starts.append((norm, lams[i], float(T)))
    starts.sort(key=lambda s: s[0])

    def residual(w):
        lam = Covector(w[0], w[1], w[2])
        T = w[3]
        if T <= 1e-9 * t_base:
            return None
        h1, h2 = lam.h_at(0.0)
        nrm = math.hypot(h1, h2)
        if nrm < 1e-8:
            return None
        lam_n = Covector(w[0] / nrm, w[1] / nrm, w[2] / nrm)
        end = projective_endpoint(IDENTITY, lam_n, T, tol)
        r = _mismatch_raw(end, target, period)
        return np.array([r[0], r[1], r[2], nrm * nrm - 1.0])

    kept: list[ShootingResult] = []
    pruned: list[ShootingResult] = []
    best_attempt = None
    n_refine = min(grid.refine_top, len(starts))
    for norm0, lam0, T0 in starts[:n_refine]:
        out = _lm_refine(residual, np.array([lam0[0], lam0[1], lam0[2], T0]), grid.max_iterations, tol)
        if out is None:
            continue
        w, r = out
        if best_attempt is None or np.linalg.norm(r[:3]) < np.linalg.norm(best_attempt[:3]):
            best_attempt = r
        if math.hypot(r[0], r[1]) > tol.mismatch_pos or abs(r[2]) > tol.mismatch_ang:
            continue
        lam = normalize_covector(IDENTITY, Covector(w[0], w[1], w[2]))
        T = float(w[3])
        if any(
            max(
                abs(lam.lambda_x - s.lambda0.lambda_x),
                abs(lam.lambda_y - s.lambda0.lambda_y),
                abs(lam.lambda_theta - s.lambda0.lambda_theta),
            ) < tol.dedupe_lambda and abs(T - s.duration) < tol.dedupe_cost
            for s in kept + pruned
        ):
            continue
        spec = ExtremalSpec(q0=P_IDENTITY, lambda0=lam, duration=T, problem="projective")
        traj, zeros = integrate_projective(spec, tol, sample_step=T / 1024.0)
        end = traj.end_state()
        mm = mismatch(end, target_el)
        converged = math.hypot(mm[0], mm[1]) <= tol.mismatch_pos and abs(mm[2]) <= tol.mismatch_ang
        result = ShootingResult(
            lambda0=lam,
            duration=T,
            mismatch=mm,
            cost=cost_C(traj).value,
            cusp_times=_endpoint_cusps(traj, zeros),
            converged=converged,
            trajectory=traj,
        )
        if not converged:
            continue
        if result.n_cusps > 2:
            pruned.append(result)
        else:
            kept.append(result)

    if not kept:
        best = tuple(best_attempt[:3]) if best_attempt is not None else None
        raise NoConvergence("no shooting start converged", best_mismatch=best)
    kept.sort(key=lambda s: (s.cost, s.n_cusps, s.lambda0.alpha))
    if return_pruned:
        return kept, pruned
    return kept


def _abnormal_candidates(target: np.ndarray):
    """Zero-Hamiltonian candidates matching the boundary data exactly:
    lines, in-place rotations, and their concatenations up to three pieces."""
    X, Y, TH = float(target[0]), float(target[1]), float(target[2])
    d = math.hypot(X, Y)
    out: list[ControlTrajectory] = []

    def build(pieces):
        traj = None
        for kind, amount in pieces:
            if abs(amount) <= 1e-14:
                continue
            if kind == "Line":
                piece = abnormal_extremals("Line", IDENTITY, amount)
            else:
                piece = abnormal_extremals(
                    "Rotation", IDENTITY, abs(amount), direction=math.copysign(1.0, amount)
                )
            traj = piece if traj is None else concatenate(traj, piece)
        return traj

    if d <= 1e-14:
        return out
    phi = math.atan2(Y, X)
    # rotate - translate - rotate always matches
    rlr = build([
        ("Rotation", wrap_signed(phi)),
        ("Line", d),
        ("Rotation", wrap_signed(TH - phi)),
    ])
    if rlr is not None:
        out.append(rlr)
    # line - rotate - line when both legs are forward
    sth, cth = math.sin(TH), math.cos(TH)
    if abs(sth) > 1e-12:
        b = Y / sth
        a = X - b * cth
        if a >= -1e-14 and b >= -1e-14:
            lrl = build([
                ("Line", max(a, 0.0)),
                ("Rotation", wrap_signed(TH)),
                ("Line", max(b, 0.0)),
            ])
            if lrl is not None:
                out.append(lrl)
    elif abs(Y) < 1e-12 and X > 0:
        # end direction (anti)parallel to the start direction
        cand = build([("Line", X), ("Rotation", wrap_signed(TH))])
        if cand is not None:
            out.append(cand)
    verified = []
    for traj in out:
        end = traj.end_state()
        mm = mismatch(end, SE2Element(X, Y, TH))
        if math.hypot(mm[0], mm[1]) < 1e-9 and abs(mm[2]) < 1e-9:
            verified.append(traj)
    return verified


def _rotation_witness(traj: ControlTrajectory, tol: Tolerances) -> Optional[RotationWitness]:
    span = traj.duration
    for m in traj.arc_marks:
        if m.kind in (ARC_PURE_ROTATION, ARC_ABNORMAL_ROTATION) and m.duration > tol.rotation_witness:
            if m.t0 - traj.times[0] <= tol.rotation_witness:
                kind = "initial_rotation_arc"
            elif traj.times[-1] - m.t1 <= tol.rotation_witness:
                kind = "final_rotation_arc"
            else:
                kind = "interior_rotation_arc"
            return RotationWitness(kind=kind, t0=float(m.t0), duration=float(m.duration))
    return None


def analyze_oriented(
    bc: BoundaryConditions,
    grid: GridSpec = GridSpec(),
    tol: Tolerances = DEFAULT_TOL,
) -> OrientedAnalysis:
    """Solve the forward-only problem and classify its planar projection.

    The best trajectory over normal shooting plus the zero-Hamiltonian
    line/rotation concatenations is returned. If it contains an in-place
    rotation of positive duration, its projection is not an admissible
    completion and the analysis reports where the rotation sits: that is
    the numerical witness that the infimum is not attained.
    """
    if bc.mode != "oriented":
        raise ValueError("analyze_oriented expects oriented boundary conditions")
    _, target_el = canonicalize(bc)
    target = np.array([target_el.x, target_el.y, target_el.theta])
    period = 2.0 * math.pi

    dist = math.hypot(target[0], target[1])
    if dist <= 1e-12:
        raise DegenerateBoundary("endpoints coincide after canonicalization")
    ang_gap = abs(wrap_signed(target[2], period))
    t_base = dist + ang_gap
    horizons = sorted({f * t_base for f in grid.t_factors})
    T_max = horizons[-1]

    lams = _grid_covectors(grid)
    scan_tol = tol.with_overrides(integrator_rtol=1e-7, integrator_atol=1e-9)
    pos_scale = max(dist, 1e-9)
    ang_scale = max(ang_gap, 0.3)
    starts = []
    for i in range(lams.shape[0]):
        lam = Covector(*lams[i])
        spec = ExtremalSpec(q0=IDENTITY, lambda0=lam, duration=T_max, problem="oriented")
        try:
            traj = integrate_oriented(spec, scan_tol, sample_step=T_max / 128.0)
        except Exception:
            continue
        for T in horizons:
            state = np.array([
                np.interp(T, traj.times, traj.states[:, 0]),
                np.interp(T, traj.times, traj.states[:, 1]),
                np.interp(T, traj.times, traj.states[:, 2]),
            ])
            r = _mismatch_raw(state, target, period)
            norm = math.hypot(r[0], r[1]) / pos_scale + abs(r[2]) / ang_scale
            starts.append((norm, lams[i], float(T)))
    starts.sort(key=lambda s: s[0])

    def residual(w):
        lam = Covector(w[0], w[1], w[2])
        T = w[3]
        if T <= 1e-9 * t_base:
            return None
        h1, h2 = lam.h_at(0.0)
        nrm = math.hypot(h1, h2)
        if nrm < 1e-8:
            return None
        lam_n = Covector(w[0] / nrm, w[1] / nrm, w[2] / nrm)
        try:
            end = oriented_endpoint(IDENTITY, lam_n, T, tol)
        except Exception:
            return None
        r = _mismatch_raw(end, target, period)
        return np.array([r[0], r[1], r[2], nrm * nrm - 1.0])

    candidates: list[tuple[float, ControlTrajectory, tuple[float, float, float]]] = []
    best_attempt = None
    n_refine = min(grid.refine_top, len(starts))
    seen: list[tuple[Covector, float]] = []
    for norm0, lam0, T0 in starts[:n_refine]:
        out = _lm_refine(residual, np.array([lam0[0], lam0[1], lam0[2], T0]), grid.max_iterations, tol)
        if out is None:
            continue
        w, r = out
        if best_attempt is None or np.linalg.norm(r[:3]) < np.linalg.norm(best_attempt[:3]):
            best_attempt = r
        if math.hypot(r[0], r[1]) > tol.mismatch_pos or abs(r[2]) > tol.mismatch_ang:
            continue
        lam = normalize_covector(IDENTITY, Covector(w[0], w[1], w[2]))
        T = float(w[3])
        if any(
            max(
                abs(lam.lambda_x - s[0].lambda_x),
                abs(lam.lambda_y - s[0].lambda_y),
                abs(lam.lambda_theta - s[0].lambda_theta),
            ) < tol.dedupe_lambda and abs(T - s[1]) < tol.dedupe_cost
            for s in seen
        ):
            continue
        seen.append((lam, T))
        spec = ExtremalSpec(q0=IDENTITY, lambda0=lam, duration=T, problem="oriented")
        traj = integrate_oriented(spec, tol, sample_step=T / 1024.0)
        end = traj.end_state()
        mm = mismatch(end, target_el)
        if math.hypot(mm[0], mm[1]) > tol.mismatch_pos or abs(mm[2]) > tol.mismatch_ang:
            continue
        candidates.append((cost_C(traj).value, traj, mm))

    for traj in _abnormal_candidates(target):
        end = traj.end_state()
        mm = mismatch(end, target_el)
        candidates.append((cost_C(traj).value, traj, mm))

    if not candidates:
        best = tuple(best_attempt[:3]) if best_attempt is not None else None
        raise NoConvergence("no oriented candidate matched the boundary data", best_mismatch=best)

    def sort_key(c):
        cost, traj, _ = c
        witness = _rotation_witness(traj, tol)
        # among (numerically) equal costs prefer the admissible projection
        return (cost, 0 if witness is None else 1)

    candidates.sort(key=sort_key)
    cost, traj, mm = candidates[0]
    witness = _rotation_witness(traj, tol)
    return OrientedAnalysis(
        minimizer=traj,
        projection_admissible=witness is None,
        witness=witness,
        cost=cost,
        mismatch=mm,
    )
