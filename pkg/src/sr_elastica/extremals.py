"""Adjoint-equation dynamics of the planar-motion control problem.

Normal extremals split into two regimes. Where the drive component h1 is
positive (or the problem allows reversing), the tangent angle obeys a
pendulum equation; where the forward-only problem forces the carrier to
stop, the state rotates in place with the covector frozen. The integrators
below chain these regimes with event-localized switches.

Conventions:
  h1 = lx*cos(theta) + ly*sin(theta),  h2 = ltheta.
  Pendulum regime (forward-only problem): controls are the unit vector
  (h1, h2)/|(h1, h2)|, so trajectories run at unit cost rate and the control
  u2 is continuous across switches.
  Reversible problem: controls are (h1, h2) on the unit level |(h1,h2)| = 1,
  which the flow conserves; the two choices coincide there.
  Rotation regime: u = (0, sign(h2)), covector constant (closed form).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .config import DEFAULT_TOL, Tolerances
from .errors import EventDetectionFailure, InsufficientSamples, InvalidSpec
from .se2 import PSE2Element, SE2Element
from .trajectory import (
    ARC_ABNORMAL_LINE,
    ARC_ABNORMAL_ROTATION,
    ARC_PENDULUM,
    ARC_PURE_ROTATION,
    ArcMark,
    ControlTrajectory,
)

RHO_DEGENERATE = 1e-13


@dataclass(frozen=True)
class Covector:
    lambda_x: float
    lambda_y: float
    lambda_theta: float

    @property
    def rho(self) -> float:
        return math.hypot(self.lambda_x, self.lambda_y)

    @property
    def alpha(self) -> float:
        return math.atan2(self.lambda_y, self.lambda_x)

    def as_array(self) -> np.ndarray:
        return np.array([self.lambda_x, self.lambda_y, self.lambda_theta])

    def h_at(self, theta: float) -> tuple[float, float]:
        h1 = self.lambda_x * math.cos(theta) + self.lambda_y * math.sin(theta)
        return (h1, self.lambda_theta)


def hamiltonian(q, lam: Covector) -> tuple[float, float]:
    """Components (h1, h2) of the control Hamiltonian u1*h1 + u2*h2 at q."""
    return lam.h_at(q.theta)


def normalize_covector(q, lam: Covector) -> Covector:
    """Rescale so that h1^2 + h2^2 = 1 at the state q."""
    h1, h2 = lam.h_at(q.theta)
    n = math.hypot(h1, h2)
    if n < RHO_DEGENERATE:
        raise InvalidSpec("covector is annihilated by both control fields at q0")
    return Covector(lam.lambda_x / n, lam.lambda_y / n, lam.lambda_theta / n)


@dataclass(frozen=True)
class ExtremalSpec:
    """Initial data for a normal extremal on the unit Hamiltonian level."""

    q0: SE2Element | PSE2Element
    lambda0: Covector
    duration: float
    problem: str  # "oriented" | "projective"

    def __post_init__(self):
        if self.problem not in ("oriented", "projective"):
            raise InvalidSpec(f"unknown problem kind {self.problem!r}")
        if self.duration < 0:
            raise InvalidSpec("duration must be nonnegative")
        h1, h2 = self.lambda0.h_at(self.q0.theta)
        if abs(h1 * h1 + h2 * h2 - 1.0) > 1e-12:
            raise InvalidSpec("normal spec must start on the unit Hamiltonian level")

    @property
    def constraint(self) -> str:
        # the forward-only problem carries the half-plane control constraint
        return "HalfPlane_u1_nonneg" if self.problem == "oriented" else "Free"


# --- right-hand sides -------------------------------------------------------


def _pendulum_rhs(t, y, lx, ly):
    x, yy, th, lth = y
    c, s = math.cos(th), math.sin(th)
    h1 = lx * c + ly * s
    return (h1 * c, h1 * s, lth, h1 * (lx * s - ly * c))


def _pendulum_rhs_normalized(t, y, lx, ly):
    x, yy, th, lth = y
    c, s = math.cos(th), math.sin(th)
    h1 = lx * c + ly * s
    n = math.hypot(h1, lth)
    return (h1 * c / n, h1 * s / n, lth / n, h1 * (lx * s - ly * c) / n)


def _h1_event(t, y, lx, ly):
    return lx * math.cos(y[2]) + ly * math.sin(y[2])


# --- reversible problem (quotient space) ------------------------------------


def integrate_projective(
    spec: ExtremalSpec,
    tol: Tolerances = DEFAULT_TOL,
    sample_step: Optional[float] = None,
) -> tuple[ControlTrajectory, np.ndarray]:
    """Integrate the reversible-problem extremal for the full duration.

    No switching: u1 = h1 may change sign. Returns the trajectory and the
    times where h1 vanishes (cusp candidates of the planar projection).
    """
    if spec.problem != "projective":
        raise InvalidSpec("integrate_projective expects a projective spec")
    lam = spec.lambda0
    lx, ly = lam.lambda_x, lam.lambda_y
    T = spec.duration
    q0 = spec.q0
    y0 = np.array([q0.x, q0.y, q0.theta, lam.lambda_theta])

    if T == 0.0:
        times = np.array([0.0])
        h1 = lx * math.cos(q0.theta) + ly * math.sin(q0.theta)
        return (
            ControlTrajectory(
                times=times,
                states=np.array([[q0.x, q0.y, q0.theta]]),
                controls=np.array([[h1, lam.lambda_theta]]),
                covectors=np.array([[lx, ly, lam.lambda_theta]]),
                arc_marks=(),
                space="pse2",
            ),
            np.array([]),
        )

    step = sample_step if sample_step is not None else max(T / 400.0, 1e-6)
    n = max(9, int(math.ceil(T / step)) + 1)
    t_eval = np.linspace(0.0, T, n)

    event = _h1_event
    event.direction = 0
    event.terminal = False
    sol = solve_ivp(
        _pendulum_rhs,
        (0.0, T),
        y0,
        method="DOP853",
        t_eval=t_eval,
        events=[event],
        args=(lx, ly),
        rtol=tol.integrator_rtol,
        atol=tol.integrator_atol,
    )
    if not sol.success:
        raise EventDetectionFailure(f"integration failed: {sol.message}")
    states = sol.y[:3].T
    lth = sol.y[3]
    h1 = lx * np.cos(states[:, 2]) + ly * np.sin(states[:, 2])
    controls = np.column_stack([h1, lth])
    cov = np.column_stack([np.full(n, lx), np.full(n, ly), lth])
    kind = ARC_PURE_ROTATION if lam.rho < RHO_DEGENERATE else ARC_PENDULUM
    traj = ControlTrajectory(
        times=sol.t,
        states=states,
        controls=controls,
        covectors=cov,
        arc_marks=(ArcMark(0.0, T, kind),),
        space="pse2",
    )
    zeros = np.asarray(sol.t_events[0]) if sol.t_events else np.array([])
    return traj, zeros


def projective_endpoint(
    q0,
    lam: Covector,
    T: float,
    tol: Tolerances = DEFAULT_TOL,
) -> np.ndarray:
    """Fast endpoint-only integration of the reversible flow."""
    y0 = np.array([q0.x, q0.y, q0.theta, lam.lambda_theta])
    if T == 0.0:
        return y0[:3]
    sol = solve_ivp(
        _pendulum_rhs,
        (0.0, T),
        y0,
        method="DOP853",
        args=(lam.lambda_x, lam.lambda_y),
        rtol=tol.integrator_rtol,
        atol=tol.integrator_atol,
    )
    if not sol.success:
        raise EventDetectionFailure(f"integration failed: {sol.message}")
    return sol.y[:3, -1]


def pendulum_flow_batch(
    lams: np.ndarray,
    theta0: float,
    horizons: np.ndarray,
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> np.ndarray:
    """Integrate many reversible-flow extremals from (0, 0, theta0) at once.

    lams: (m, 3) covectors; horizons: increasing times at which states are
    wanted. Returns (len(horizons), m, 3) states. Used for coarse scans, so
    the batch shares one adaptive step sequence.
    """
    lams = np.asarray(lams, dtype=float)
    m = lams.shape[0]
    lx = lams[:, 0]
    ly = lams[:, 1]
    y0 = np.zeros((m, 4))
    y0[:, 2] = theta0
    y0[:, 3] = lams[:, 2]

    def rhs(t, yflat):
        y = yflat.reshape(m, 4)
        th = y[:, 2]
        c, s = np.cos(th), np.sin(th)
        h1 = lx * c + ly * s
        out = np.empty_like(y)
        out[:, 0] = h1 * c
        out[:, 1] = h1 * s
        out[:, 2] = y[:, 3]
        out[:, 3] = h1 * (lx * s - ly * c)
        return out.ravel()

    horizons = np.asarray(horizons, dtype=float)
    sol = solve_ivp(
        rhs,
        (0.0, float(horizons[-1])),
        y0.ravel(),
        method="DOP853",
        t_eval=horizons,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise EventDetectionFailure(f"batch integration failed: {sol.message}")
    return sol.y.T.reshape(len(horizons), m, 4)[:, :, :3]


# --- forward-only problem (full group) --------------------------------------


def _rotation_exit_time(theta0: float, lam: Covector, s: float) -> float:
    """Time for the in-place rotation at rate s to reach the h1 = 0 crossing
    into h1 > 0, i.e. theta - alpha = -s*pi/2 (mod 2 pi)."""
    delta0 = theta0 - lam.alpha
    target = -s * 0.5 * math.pi
    dt = math.fmod((target - delta0) * s, 2.0 * math.pi)
    if dt <= 1e-13:
        dt += 2.0 * math.pi
    return dt


def integrate_oriented(
    spec: ExtremalSpec,
    tol: Tolerances = DEFAULT_TOL,
    sample_step: Optional[float] = None,
) -> ControlTrajectory:
    """Integrate the forward-only extremal with switching.

    Pendulum arcs end where h1 crosses zero from above (event-localized);
    rotation arcs are exact and end where h1 re-enters the positive branch.
    State and covector are continuous across switches.
    """
    if spec.problem != "oriented":
        raise InvalidSpec("integrate_oriented expects an oriented spec")
    lam = spec.lambda0
    lx, ly = lam.lambda_x, lam.lambda_y
    rho = lam.rho
    T = spec.duration
    q0 = spec.q0

    step = sample_step if sample_step is not None else max(T / 400.0, 1e-7)

    times = [0.0]
    states = [np.array([q0.x, q0.y, q0.theta])]
    lths = [lam.lambda_theta]
    controls = [None]  # filled per arc
    marks: list[ArcMark] = []

    t = 0.0
    x, yy, th = q0.x, q0.y, q0.theta
    lth = lam.lambda_theta
    guard = 0
    while t < T - 1e-14:
        guard += 1
        if guard > 10000:
            raise EventDetectionFailure("switching did not terminate")
        h1 = lx * math.cos(th) + ly * math.sin(th)
        if rho < RHO_DEGENERATE:
            h1 = 0.0
        # branch decision; at h1 = 0 use the crossing direction
        if abs(h1) <= 1e-12:
            h1dot_sign = -math.copysign(1.0, lth) * rho * math.sin(th - lam.alpha)
            pendulum = rho >= RHO_DEGENERATE and lth != 0.0 and h1dot_sign > 0
        else:
            pendulum = h1 > 0
        if pendulum:
            t_next, seg = _oriented_pendulum_arc(
                (x, yy, th, lth), lx, ly, t, T, step, tol
            )
            kind = ARC_PENDULUM
        else:
            t_next, seg = _oriented_rotation_arc(
                (x, yy, th, lth), lam, t, T, step
            )
            kind = ARC_PURE_ROTATION
        seg_t, seg_y, seg_u = seg
        times.extend(seg_t[1:].tolist())
        states.extend(list(seg_y[1:, :3]))
        lths.extend(seg_y[1:, 3].tolist())
        # controls are continuous across switches (normalized on pendulum
        # arcs), so the shared boundary sample keeps the earlier arc's value
        if controls[-1] is None:
            controls[-1] = seg_u[0]
        controls.extend(list(seg_u[1:]))
        marks.append(ArcMark(t, t_next, kind))
        x, yy, th, lth = seg_y[-1]
        t = t_next

    if controls[-1] is None:
        # zero-duration trajectory: report the branch controls at t=0
        h1 = lx * math.cos(th) + ly * math.sin(th)
        if h1 > 0:
            n = math.hypot(h1, lth)
            controls[-1] = np.array([h1 / n, lth / n])
        else:
            controls[-1] = np.array([0.0, math.copysign(1.0, lth) if lth else 0.0])

    tarr = np.asarray(times)
    yarr = np.vstack(states)
    uarr = np.vstack(controls)
    ltharr = np.asarray(lths)
    cov = np.column_stack([np.full(tarr.size, lx), np.full(tarr.size, ly), ltharr])
    return ControlTrajectory(
        times=tarr,
        states=yarr,
        controls=uarr,
        covectors=cov,
        arc_marks=tuple(marks),
        space="se2",
    )


def _oriented_pendulum_arc(y0, lx, ly, t0, T, step, tol):
    """One normalized pendulum arc from t0 until h1 crosses zero or T."""
    event = lambda t, y, a, b: a * math.cos(y[2]) + b * math.sin(y[2])  # noqa: E731
    event.terminal = True
    event.direction = -1
    sol = solve_ivp(
        _pendulum_rhs_normalized,
        (t0, T),
        np.asarray(y0),
        method="DOP853",
        dense_output=True,
        events=[event],
        args=(lx, ly),
        rtol=tol.integrator_rtol,
        atol=tol.integrator_atol,
    )
    if not sol.success:
        raise EventDetectionFailure(f"pendulum arc failed: {sol.message}")
    t_end = float(sol.t_events[0][0]) if sol.t_events[0].size else T
    n = max(5, int(math.ceil((t_end - t0) / step)) + 1)
    grid = np.linspace(t0, t_end, n)
    Y = sol.sol(grid).T
    th = Y[:, 2]
    h1 = lx * np.cos(th) + ly * np.sin(th)
    nrm = np.hypot(h1, Y[:, 3])
    U = np.column_stack([h1 / nrm, Y[:, 3] / nrm])
    return t_end, (grid, Y, U)


def _oriented_rotation_arc(y0, lam: Covector, t0, T, step):
    """Exact in-place rotation with frozen covector."""
    x, yy, th, lth = y0
    if lth == 0.0:
        # control maximization is indifferent; the carrier stalls
        t_end = T
        grid = np.linspace(t0, t_end, 5)
        Y = np.tile(np.array([x, yy, th, lth]), (5, 1))
        U = np.zeros((5, 2))
        return t_end, (grid, Y, U)
    s = math.copysign(1.0, lth)
    if lam.rho < RHO_DEGENERATE:
        t_exit = T
    else:
        t_exit = min(T, t0 + _rotation_exit_time(th, lam, s))
    n = max(5, int(math.ceil((t_exit - t0) / step)) + 1)
    grid = np.linspace(t0, t_exit, n)
    Y = np.empty((n, 4))
    Y[:, 0] = x
    Y[:, 1] = yy
    Y[:, 2] = th + s * (grid - t0)
    Y[:, 3] = lth
    U = np.tile(np.array([0.0, s]), (n, 1))
    return t_exit, (grid, Y, U)


def oriented_endpoint(
    q0,
    lam: Covector,
    T: float,
    tol: Tolerances = DEFAULT_TOL,
) -> np.ndarray:
    """Fast endpoint of the forward-only extremal (coarse recording)."""
    spec = ExtremalSpec(
        q0=q0, lambda0=lam, duration=T, problem="oriented"
    )
    traj = integrate_oriented(spec, tol=tol, sample_step=max(T, 1e-9))
    return traj.states[-1]


# --- abnormal extremals ------------------------------------------------------


def abnormal_extremals(
    kind: str,
    q0: SE2Element,
    duration: float,
    direction: float = 1.0,
    n: int = 33,
) -> ControlTrajectory:
    """Zero-Hamiltonian trajectories: straight lines and in-place rotations."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    grid = np.linspace(0.0, duration, n)
    if kind == "Line":
        c, s = math.cos(q0.theta), math.sin(q0.theta)
        states = np.column_stack([
            q0.x + grid * c,
            q0.y + grid * s,
            np.full(n, q0.theta),
        ])
        controls = np.tile([1.0, 0.0], (n, 1))
        mark = ARC_ABNORMAL_LINE
    elif kind == "Rotation":
        states = np.column_stack([
            np.full(n, q0.x),
            np.full(n, q0.y),
            q0.theta + direction * grid,
        ])
        controls = np.tile([0.0, direction], (n, 1))
        mark = ARC_ABNORMAL_ROTATION
    else:
        raise ValueError(f"unknown abnormal kind {kind!r}")
    return ControlTrajectory(
        times=grid,
        states=states,
        controls=controls,
        covectors=None,
        arc_marks=(ArcMark(0.0, duration, mark),),
        space="se2",
    )


# --- residual check -----------------------------------------------------------


def pendulum_residual(traj: ControlTrajectory) -> float:
    """Defect of the tangent-angle pendulum equation on pendulum arcs.

    Checks 2*thetaddot = (rho/c)^2 sin(2(theta - alpha)) with thetaddot from
    central second differences; c is the conserved norm |(h1, h2)| on the arc
    (c = 1 on the unit level, where this is the textbook form).
    """
    if traj.covectors is None:
        raise InsufficientSamples("trajectory has no covector samples")
    pendulum_marks = [m for m in traj.arc_marks if m.kind == ARC_PENDULUM]
    if not pendulum_marks:
        raise InsufficientSamples("trajectory has no pendulum arc")
    worst = 0.0
    checked = False
    for mark in pendulum_marks:
        idx = traj.slice_indices(mark)
        if idx.size < 5:
            continue
        checked = True
        t = traj.times[idx]
        h = float(t[1] - t[0])
        th = traj.states[idx, 2]
        lx, ly, lth0 = traj.covectors[idx[0]]
        rho = math.hypot(lx, ly)
        alpha = math.atan2(ly, lx)
        h1_0 = lx * math.cos(th[0]) + ly * math.sin(th[0])
        c = math.hypot(h1_0, lth0)
        thdd = (th[2:] - 2.0 * th[1:-1] + th[:-2]) / (h * h)
        rhs = (rho / c) ** 2 * np.sin(2.0 * (th[1:-1] - alpha))
        worst = max(worst, float(np.max(np.abs(2.0 * thdd - rhs))))
    if not checked:
        raise InsufficientSamples("pendulum arcs have fewer than 5 samples")
    return worst
