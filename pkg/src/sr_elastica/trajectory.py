"""Time-sampled trajectories of the planar-motion control system.

States are stored as raw (x, y, theta) samples with a *continuous* theta
(no branch reduction), plus a `space` tag saying whether endpoints should be
compared in the full group or in the mod-pi quotient. Controls are (u1, u2);
covectors (lambda_x, lambda_y, lambda_theta) are optional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import numdiff
from .se2 import PSE2Element, SE2Element

ARC_PENDULUM = "Pendulum"
ARC_PURE_ROTATION = "PureRotation"
ARC_ABNORMAL_LINE = "AbnormalLine"
ARC_ABNORMAL_ROTATION = "AbnormalRotation"
ARC_LIFTED = "Lifted"


@dataclass(frozen=True)
class ArcMark:
    t0: float
    t1: float
    kind: str

    @property
    def duration(self) -> float:
        return self.t1 - self.t0


@dataclass(frozen=True)
class ControlTrajectory:
    times: np.ndarray          # (n,)
    states: np.ndarray         # (n, 3): x, y, theta (theta continuous)
    controls: np.ndarray       # (n, 2): u1, u2
    covectors: Optional[np.ndarray] = None  # (n, 3) or None
    arc_marks: tuple[ArcMark, ...] = field(default_factory=tuple)
    space: str = "se2"         # "se2" | "pse2"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.states, dtype=float)
        u = np.asarray(self.controls, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "controls", u)
        if self.covectors is not None:
            object.__setattr__(self, "covectors", np.asarray(self.covectors, dtype=float))
        object.__setattr__(self, "arc_marks", tuple(self.arc_marks))
        if t.ndim != 1 or s.shape != (t.size, 3) or u.shape != (t.size, 2):
            raise ValueError("incongruent trajectory arrays")
        if self.covectors is not None and self.covectors.shape != (t.size, 3):
            raise ValueError("covector array length mismatch")
        if np.any(np.diff(t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if self.space not in ("se2", "pse2"):
            raise ValueError(f"unknown state space {self.space!r}")

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def start_state(self):
        return self._as_element(self.states[0])

    def end_state(self):
        return self._as_element(self.states[-1])

    def _as_element(self, row):
        if self.space == "pse2":
            return PSE2Element(float(row[0]), float(row[1]), float(row[2]))
        return SE2Element(float(row[0]), float(row[1]), float(row[2]))

    def h_components(self) -> np.ndarray:
        """(h1, h2) along the trajectory; requires covectors."""
        if self.covectors is None:
            raise ValueError("trajectory has no covector samples")
        lx, ly, lth = self.covectors.T
        th = self.states[:, 2]
        h1 = lx * np.cos(th) + ly * np.sin(th)
        return np.column_stack([h1, lth])

    def uniform_blocks(self) -> list[np.ndarray]:
        """Index arrays of maximal uniformly-sampled runs (for quadrature/FD)."""
        t = self.times
        if t.size < 2:
            return [np.arange(t.size)]
        dt = np.diff(t)
        scale = max(float(t[-1] - t[0]), 1e-300)
        blocks: list[np.ndarray] = []
        start = 0
        for i in range(1, dt.size):
            if abs(dt[i] - dt[i - 1]) > 1e-9 * scale:
                blocks.append(np.arange(start, i + 1))
                start = i
        blocks.append(np.arange(start, t.size))
        return blocks

    def slice_indices(self, mark: ArcMark) -> np.ndarray:
        return np.where((self.times >= mark.t0 - 1e-14) & (self.times <= mark.t1 + 1e-14))[0]


def dynamics_residual(traj: ControlTrajectory) -> float:
    """Max finite-difference defect of (xdot, ydot, thetadot) vs the control
    vector fields, over interior samples of each uniformly sampled block.

    The defect is limited by the sampling step (O(h^2) per block), not by the
    integrator tolerance.
    """
    worst = 0.0
    for idx in traj.uniform_blocks():
        if idx.size < 5:
            continue
        t = traj.times[idx]
        h = float(t[1] - t[0])
        s = traj.states[idx]
        u = traj.controls[idx]
        d1 = numdiff.first_derivative(s, h)
        pred = np.column_stack([
            u[:, 0] * np.cos(s[:, 2]),
            u[:, 0] * np.sin(s[:, 2]),
            u[:, 1],
        ])
        inner = slice(2, -2)
        worst = max(worst, float(np.max(np.abs(d1[inner] - pred[inner]))))
    return worst


def concatenate(first: ControlTrajectory, second: ControlTrajectory) -> ControlTrajectory:
    """Chain two trajectories; the second is time-shifted and left-translated
    so that it starts where the first ends."""
    if first.space != second.space:
        raise ValueError("cannot concatenate trajectories in different spaces")
    shift = first.times[-1] - second.times[0]
    # state chaining: second runs from first's endpoint
    end = first.states[-1]
    base = second.states[0]
    dth = end[2] - base[2]
    c, s = math.cos(dth), math.sin(dth)
    rel = second.states[:, :2] - base[:2]
    xy = rel @ np.array([[c, s], [-s, c]]) + end[:2]
    th = second.states[:, 2] + dth
    states2 = np.column_stack([xy, th])
    cov = None
    if first.covectors is not None and second.covectors is not None:
        lam2 = second.covectors.copy()
        lxy = lam2[:, :2] @ np.array([[c, s], [-s, c]])
        cov = np.vstack([first.covectors, np.column_stack([lxy, lam2[:, 2]])[1:]])
    marks = list(first.arc_marks)
    for m in second.arc_marks:
        marks.append(ArcMark(m.t0 + shift, m.t1 + shift, m.kind))
    return ControlTrajectory(
        times=np.concatenate([first.times, second.times[1:] + shift]),
        states=np.vstack([first.states, states2[1:]]),
        controls=np.vstack([first.controls, second.controls[1:]]),
        covectors=cov,
        arc_marks=tuple(marks),
        space=first.space,
    )


def left_translate(traj: ControlTrajectory, g: SE2Element) -> ControlTrajectory:
    """Left-translate every state by g; covectors rotate with the frame."""
    c, s = math.cos(g.theta), math.sin(g.theta)
    xy = traj.states[:, :2] @ np.array([[c, s], [-s, c]]) + np.array([g.x, g.y])
    th = traj.states[:, 2] + g.theta
    cov = None
    if traj.covectors is not None:
        lxy = traj.covectors[:, :2] @ np.array([[c, s], [-s, c]])
        cov = np.column_stack([lxy, traj.covectors[:, 2]])
    return ControlTrajectory(
        times=traj.times.copy(),
        states=np.column_stack([xy, th]),
        controls=traj.controls.copy(),
        covectors=cov,
        arc_marks=traj.arc_marks,
        space=traj.space,
    )


def shift_time(traj: ControlTrajectory, offset: float) -> ControlTrajectory:
    return ControlTrajectory(
        times=traj.times + offset,
        states=traj.states,
        controls=traj.controls,
        covectors=traj.covectors,
        arc_marks=tuple(ArcMark(m.t0 + offset, m.t1 + offset, m.kind) for m in traj.arc_marks),
        space=traj.space,
    )


def write_trajectory_csv(path: str | Path, traj: ControlTrajectory) -> None:
    """Dump as CSV: t,x,y,theta,u1,u2,lx,ly,lth,arc_kind."""

    def kind_at(t: float) -> str:
        for m in traj.arc_marks:
            if m.t0 - 1e-14 <= t <= m.t1 + 1e-14:
                return m.kind
        return ""

    with open(path, "w") as fh:
        fh.write("t,x,y,theta,u1,u2,lx,ly,lth,arc_kind\n")
        for i, t in enumerate(traj.times):
            x, y, th = traj.states[i]
            u1, u2 = traj.controls[i]
            if traj.covectors is not None:
                lx, ly, lth = traj.covectors[i]
            else:
                lx = ly = lth = float("nan")
            fh.write(
                f"{t!r},{x!r},{y!r},{th!r},{u1!r},{u2!r},{lx!r},{ly!r},{lth!r},{kind_at(float(t))}\n"
            )
