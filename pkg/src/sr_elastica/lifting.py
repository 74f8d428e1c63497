"""Lift planar curves to group trajectories and project back.

The lift of a curve with nonvanishing velocity is (x, y, theta) with theta
the continuous tangent angle; the controls are u1 = speed and u2 = speed
times curvature. Projection drops theta and keeps the time stamps.
"""

from __future__ import annotations

import math

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .costs import segment_kinematics
from .curves import ArcSegment, LineSegment, PlanarCurve, SampledSegment
from .errors import VanishingVelocity
from .se2 import wrap_signed
from .trajectory import ControlTrajectory


def _segment_lift(seg) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(times, xy, theta, controls) for one segment; theta continuous."""
    times, v, w, _ = segment_kinematics(seg)
    if isinstance(seg, LineSegment):
        th = math.atan2(seg.p1[1] - seg.p0[1], seg.p1[0] - seg.p0[0])
        xy = np.array([seg.point(t) for t in times])
        theta = np.full(times.size, th)
    elif isinstance(seg, ArcSegment):
        rate = seg.sweep / (seg.t1 - seg.t0)
        phi = seg.phi0 + (times - seg.t0) * rate
        theta = phi + math.copysign(0.5 * math.pi, rate)
        xy = seg.center + seg.radius * np.column_stack([np.cos(phi), np.sin(phi)])
    else:
        d1, _ = seg.derivatives()
        theta = np.unwrap(np.arctan2(d1[:, 1], d1[:, 0]))
        xy = seg.points
    return times, np.asarray(xy, dtype=float), theta, np.column_stack([v, w])


def lift(curve: PlanarCurve, tol: Tolerances = DEFAULT_TOL) -> ControlTrajectory:
    """Lift a positive-speed curve to a trajectory of the control system."""
    all_t: list[np.ndarray] = []
    all_xy: list[np.ndarray] = []
    all_th: list[np.ndarray] = []
    all_u: list[np.ndarray] = []
    for seg in curve.segments:
        times, xy, theta, u = _segment_lift(seg)
        if np.min(u[:, 0]) <= tol.min_speed:
            raise VanishingVelocity(
                "curve speed underflows the lift threshold; curvature undefined"
            )
        if all_th:
            # keep theta continuous across the junction (2-pi branch only)
            prev = all_th[-1][-1]
            theta = theta + 2.0 * math.pi * round((prev - theta[0]) / (2.0 * math.pi))
            # drop the duplicated junction sample
            times, xy, theta, u = times[1:], xy[1:], theta[1:], u[1:]
        all_t.append(times)
        all_xy.append(xy)
        all_th.append(theta)
        all_u.append(u)
    t = np.concatenate(all_t)
    states = np.column_stack([np.vstack(all_xy), np.concatenate(all_th)])
    return ControlTrajectory(
        times=t,
        states=states,
        controls=np.vstack(all_u),
        covectors=None,
        arc_marks=(),
        space="se2",
    )


def project(traj: ControlTrajectory) -> PlanarCurve:
    """Planar projection (x, y) of a trajectory, retaining time stamps.

    The result may be degenerate (a single point) when the trajectory only
    rotates in place; `PlanarCurve.is_degenerate()` flags that case.
    """
    segments = []
    for idx in traj.uniform_blocks():
        t = traj.times[idx]
        xy = traj.states[idx, :2]
        if idx.size < 4:
            # resample short runs so the segment stays representable
            tt = np.linspace(t[0], t[-1], 4)
            xy = np.column_stack([np.interp(tt, t, xy[:, 0]), np.interp(tt, t, xy[:, 1])])
            t = tt
        segments.append(SampledSegment(t, xy.copy()))
    return PlanarCurve(tuple(segments))


def lifted_angle_max_jump(traj: ControlTrajectory) -> float:
    """Largest per-step angle increment; small values certify branch continuity."""
    return float(np.max(np.abs(np.diff(traj.states[:, 2])))) if traj.times.size > 1 else 0.0


def direction_matches(
    dir_vec: tuple[float, float], theta: float, mode: str, tol: float = 1e-8
) -> bool:
    """Does the direction vector match the angle under the given identification?"""
    ang = math.atan2(dir_vec[1], dir_vec[0])
    period = math.pi if mode == "projective" else 2.0 * math.pi
    return abs(wrap_signed(ang - theta, period)) <= tol
