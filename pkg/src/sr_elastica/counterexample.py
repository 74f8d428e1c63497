"""Witness machinery for non-attainment under oriented boundary data.

`build_qbar` constructs the two-arc reference minimizer: an in-place
rotation over [0, xi] followed by a pendulum arc over [xi, 2 xi], normalized
so the switch state is the identity. Its planar projection stands still on
the first half, so it is not an admissible completion; `build_pn` builds the
sequence of admissible curves (tangent circular arc + straight piece + the
unchanged tail) whose costs approach the trajectory's cost from above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .config import DEFAULT_TOL, Tolerances
from .costs import cost_C, cost_J, segment_kinematics
from .curves import ArcSegment, LineSegment, PlanarCurve, SampledSegment
from .errors import DegenerateIntersection, XiTooLarge
from .extremals import Covector, ExtremalSpec, _pendulum_rhs_normalized, integrate_oriented
from .se2 import IDENTITY, BoundaryConditions
from .trajectory import ARC_PENDULUM, ARC_PURE_ROTATION, ArcMark, ControlTrajectory

SQRT2_INV = 1.0 / math.sqrt(2.0)

# covector that drives the rotation-then-pendulum extremal from the identity
SEED_COVECTOR = Covector(-SQRT2_INV, 0.0, SQRT2_INV)
SWITCH_TIME = 0.5 * math.pi


@dataclass(frozen=True)
class QBarSpec:
    """Two-arc reference trajectory on [0, 2 xi] with the switch at the identity."""

    xi: float
    trajectory: ControlTrajectory
    covector: Covector
    # dense pendulum solution in the normalized frame; argument measured from xi
    pendulum_dense: Callable = field(repr=False, compare=False, default=None)

    @property
    def theta_start(self) -> float:
        return float(self.trajectory.states[0, 2])

    def tail_state(self, t: float) -> np.ndarray:
        """(x, y, theta, lambda_theta) on the pendulum half, t in [xi, 2 xi]."""
        return np.asarray(self.pendulum_dense(t - self.xi), dtype=float)

    def tail_point(self, t: float) -> tuple[float, float]:
        s = self.tail_state(t)
        return (float(s[0]), float(s[1]))

    def tail_angle(self, t: float) -> float:
        return float(self.tail_state(t)[2])

    def boundary_conditions(self) -> BoundaryConditions:
        th0 = self.theta_start
        thT = float(self.trajectory.states[-1, 2])
        end = self.trajectory.states[-1]
        return BoundaryConditions(
            start_point=(0.0, 0.0),
            end_point=(float(end[0]), float(end[1])),
            start_dir=(math.cos(th0), math.sin(th0)),
            end_dir=(math.cos(thT), math.sin(thT)),
            mode="oriented",
        )


def build_qbar(
    xi: float,
    xi_max: float = 0.05,
    tol: Tolerances = DEFAULT_TOL,
    samples_per_arc: int = 1025,
) -> QBarSpec:
    """Integrate and normalize the two-arc reference minimizer.

    Runs the forward-only integrator from the identity with the seed
    covector, checks that the switch happens at t = pi/2, then rebuilds the
    window [pi/2 - xi, pi/2 + xi] in the frame where the switch state is the
    identity (rotate by -pi/2, shift time).
    """
    if not (0.0 < xi <= xi_max):
        raise XiTooLarge(f"xi must lie in (0, {xi_max}]")

    # verification pass: seed covector produces rotation until pi/2, then pendulum
    spec = ExtremalSpec(
        q0=IDENTITY, lambda0=SEED_COVECTOR, duration=SWITCH_TIME + xi, problem="oriented"
    )
    check = integrate_oriented(spec, tol, sample_step=(SWITCH_TIME + xi) / 64.0)
    marks = check.arc_marks
    if len(marks) != 2 or marks[0].kind != ARC_PURE_ROTATION or marks[1].kind != ARC_PENDULUM:
        raise XiTooLarge("two-arc structure not realized for this xi")
    if abs(marks[0].t1 - SWITCH_TIME) > 1e-10:
        raise XiTooLarge(f"switch time {marks[0].t1} is not pi/2")
    h1_0 = SEED_COVECTOR.h_at(check.states[0, 2])[0]
    if h1_0 >= 0:
        raise XiTooLarge("seed covector does not start on the rotation branch")

    # covector in the normalized frame: rotate (lx, ly) by -pi/2
    lam = Covector(SEED_COVECTOR.lambda_y, -SEED_COVECTOR.lambda_x, SEED_COVECTOR.lambda_theta)

    n = samples_per_arc
    # rotation half: state fixed at the origin, angle climbs from -xi to 0
    t_rot = np.linspace(0.0, xi, n)
    rot_states = np.column_stack([np.zeros(n), np.zeros(n), -xi + t_rot])
    rot_controls = np.tile([0.0, 1.0], (n, 1))
    rot_cov = np.tile([lam.lambda_x, lam.lambda_y, lam.lambda_theta], (n, 1))

    # pendulum half: normalized flow from the identity
    sol = solve_ivp(
        _pendulum_rhs_normalized,
        (0.0, xi),
        np.array([0.0, 0.0, 0.0, lam.lambda_theta]),
        method="DOP853",
        dense_output=True,
        args=(lam.lambda_x, lam.lambda_y),
        rtol=tol.integrator_rtol,
        atol=tol.integrator_atol,
    )
    if not sol.success:
        raise XiTooLarge(f"pendulum half failed to integrate: {sol.message}")
    t_pen = np.linspace(0.0, xi, n)
    Y = sol.sol(t_pen).T
    h1 = lam.lambda_x * np.cos(Y[:, 2]) + lam.lambda_y * np.sin(Y[:, 2])
    if np.any(h1[1:] <= 0.0):
        raise XiTooLarge("pendulum half leaves the forward branch before xi")
    nrm = np.hypot(h1, Y[:, 3])
    pen_controls = np.column_stack([h1 / nrm, Y[:, 3] / nrm])
    pen_cov = np.column_stack([
        np.full(n, lam.lambda_x), np.full(n, lam.lambda_y), Y[:, 3],
    ])

    traj = ControlTrajectory(
        times=np.concatenate([t_rot, xi + t_pen[1:]]),
        states=np.vstack([rot_states, Y[1:, :3]]),
        controls=np.vstack([rot_controls, pen_controls[1:]]),
        covectors=np.vstack([rot_cov, pen_cov[1:]]),
        arc_marks=(
            ArcMark(0.0, xi, ARC_PURE_ROTATION),
            ArcMark(xi, 2.0 * xi, ARC_PENDULUM),
        ),
        space="se2",
    )

    qbar = QBarSpec(xi=xi, trajectory=traj, covector=lam, pendulum_dense=sol.sol)

    # cross-check against the verification pass, mapped into the same frame
    t_check = SWITCH_TIME + xi
    k = int(np.searchsorted(check.times, t_check - 1e-15))
    k = min(k, check.times.size - 1)
    end_check = check.states[-1]
    # rotate the raw endpoint by -pi/2 about the origin (switch state is (0,0,pi/2))
    mapped = np.array([end_check[1], -end_check[0], end_check[2] - SWITCH_TIME])
    own = traj.states[-1]
    if np.max(np.abs(mapped - own)) > 1e-8:
        raise XiTooLarge("normalized window disagrees with the verification pass")
    if abs(traj.states[0, 2] + xi) > 1e-12:
        raise XiTooLarge("start angle is not -xi")
    mid = sol.sol(0.0)
    if max(abs(mid[0]), abs(mid[1]), abs(mid[2])) > 1e-12:
        raise XiTooLarge("switch state is not the identity")
    return qbar


@dataclass(frozen=True)
class PnCurve:
    """Admissible curve of the approximating sequence."""

    n: int
    curve: PlanarCurve
    construction_case: str  # "OB_le_BC" | "OB_ge_BC"
    point_b: tuple[float, float]
    point_c: tuple[float, float]
    point_d: tuple[float, float]
    arc_segment: ArcSegment
    tail_start_time: float


def _tangent_arc(p_from, e_from, p_to, e_to):
    """Circle tangent to direction e_from at p_from and e_to at p_to.

    Returns (center, radius, phi_from, phi_to) with the sweep following the
    rotation from e_from to e_to.
    """
    turn = math.atan2(
        e_from[0] * e_to[1] - e_from[1] * e_to[0],
        e_from[0] * e_to[0] + e_from[1] * e_to[1],
    )
    if abs(turn) < 1e-15:
        raise DegenerateIntersection("tangent directions coincide; no arc needed")
    side = math.copysign(1.0, turn)
    # unit normals toward the center (left of travel for a CCW turn)
    n_from = (side * -e_from[1], side * e_from[0])
    n_to = (side * -e_to[1], side * e_to[0])
    # center = p_from + R n_from = p_to + R n_to
    dn = np.array([n_from[0] - n_to[0], n_from[1] - n_to[1]])
    dp = np.array([p_to[0] - p_from[0], p_to[1] - p_from[1]])
    denom = float(dn @ dn)
    if denom < 1e-28:
        raise DegenerateIntersection("tangency normals coincide")
    radius = float(dn @ dp) / denom
    if radius <= 0.0:
        raise DegenerateIntersection("tangent circle has nonpositive radius")
    center = (p_from[0] + radius * n_from[0], p_from[1] + radius * n_from[1])
    resid = math.dist(center, (p_to[0] + radius * n_to[0], p_to[1] + radius * n_to[1]))
    if resid > 1e-9 * max(1.0, radius):
        raise DegenerateIntersection("tangent circle is inconsistent")
    phi_from = math.atan2(p_from[1] - center[1], p_from[0] - center[0])
    phi_to = phi_from + turn
    return center, radius, phi_from, phi_to


def build_pn(
    qbar: QBarSpec,
    n: int,
    tail_samples: int = 2049,
    tol: Tolerances = DEFAULT_TOL,
) -> PnCurve:
    """Geometric construction of the n-th approximating curve.

    The tail copies the projection of the reference trajectory on
    [xi + xi/n, 2 xi]. Ahead of it, the tangent line at the cut point and the
    start-direction line through the origin meet at B; a circular arc tangent
    to both lines plus a straight piece join the origin to the cut point.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    xi = qbar.xi
    t_cut = xi + xi / n
    th0 = qbar.theta_start
    e0 = (math.cos(th0), math.sin(th0))
    C = qbar.tail_point(t_cut)
    thC = qbar.tail_angle(t_cut)
    eC = (math.cos(thC), math.sin(thC))

    det = e0[0] * eC[1] - e0[1] * eC[0]  # sin of the angle between the lines
    if abs(det) < 1e-12:
        raise DegenerateIntersection("tangent lines are parallel")
    # O + a e0 = C - b eC
    a = (C[0] * eC[1] - C[1] * eC[0]) / det
    b = (e0[0] * C[1] - e0[1] * C[0]) / det
    if a <= 0.0 or b <= 0.0:
        raise DegenerateIntersection("intersection lies behind an endpoint")
    B = (a * e0[0], a * e0[1])

    if a <= b:
        case = "OB_le_BC"
        D = (B[0] + a * eC[0], B[1] + a * eC[1])
        center, radius, phi0, phi1 = _tangent_arc((0.0, 0.0), e0, D, eC)
        head: list = [("arc", center, radius, phi0, phi1)]
        if math.dist(D, C) > 1e-14:
            head.append(("line", D, C))
    else:
        case = "OB_ge_BC"
        D = (B[0] - b * e0[0], B[1] - b * e0[1])
        center, radius, phi0, phi1 = _tangent_arc(D, e0, C, eC)
        head = [("line", (0.0, 0.0), D)] if math.dist((0.0, 0.0), D) > 1e-14 else []
        head.append(("arc", center, radius, phi0, phi1))

    # time layout: head pieces share [0, t_cut] proportionally to length,
    # the tail keeps the reference clock
    lengths = []
    for piece in head:
        if piece[0] == "arc":
            lengths.append(piece[2] * abs(piece[4] - piece[3]))
        else:
            lengths.append(math.dist(piece[1], piece[2]))
    total = sum(lengths)
    segments = []
    t0 = 0.0
    arc_seg: Optional[ArcSegment] = None
    for piece, ell in zip(head, lengths):
        t1 = t0 + t_cut * (ell / total)
        if piece[0] == "arc":
            arc_seg = ArcSegment(t0, t1, piece[1], piece[2], piece[3], piece[4])
            segments.append(arc_seg)
        else:
            segments.append(LineSegment(t0, t1, piece[1], piece[2]))
        t0 = t1

    if 2.0 * xi - t_cut > 1e-14:
        ts = np.linspace(t_cut, 2.0 * xi, tail_samples)
        tail_xy = np.array([qbar.tail_point(t) for t in ts])
        segments.append(SampledSegment(ts, tail_xy))
    curve = PlanarCurve(tuple(segments))
    return PnCurve(
        n=n,
        curve=curve,
        construction_case=case,
        point_b=B,
        point_c=C,
        point_d=D,
        arc_segment=arc_seg,
        tail_start_time=t_cut,
    )


def tail_costs(qbar: QBarSpec, n: int, tail_samples: int = 2049) -> tuple[float, float]:
    """(curve cost of the tail, control cost of the trajectory there).

    The tail of the n-th curve copies the reference projection, so the two
    numbers must agree to quadrature accuracy.
    """
    xi = qbar.xi
    t_cut = xi + xi / n
    ts = np.linspace(t_cut, 2.0 * xi, tail_samples)
    tail_xy = np.array([qbar.tail_point(t) for t in ts])
    j_tail = cost_J(PlanarCurve((SampledSegment(ts, tail_xy),))).value

    Y = np.array([qbar.tail_state(t) for t in ts])
    lam = qbar.covector
    h1 = lam.lambda_x * np.cos(Y[:, 2]) + lam.lambda_y * np.sin(Y[:, 2])
    nrm = np.hypot(h1, Y[:, 3])
    controls = np.column_stack([h1 / nrm, Y[:, 3] / nrm])
    sliced = ControlTrajectory(
        times=ts,
        states=Y[:, :3],
        controls=controls,
        covectors=None,
        arc_marks=(),
        space="se2",
    )
    c_tail = cost_C(sliced).value
    return j_tail, c_tail


def convergence_table(
    qbar: QBarSpec, ns: list[int], tol: Tolerances = DEFAULT_TOL
) -> list[dict]:
    """Rows (n, J[p^n], C of the reference, gap)."""
    c_ref = cost_C(qbar.trajectory).value
    rows = []
    for n in ns:
        pn = build_pn(qbar, n, tol=tol)
        j_pn = cost_J(pn.curve, tol=tol).value
        rows.append({
            "n": int(n),
            "J_pn": float(j_pn),
            "C_qbar": float(c_ref),
            "gap": float(j_pn - c_ref),
        })
    return rows


def write_convergence_csv(path, rows: list[dict]) -> None:
    with open(path, "w") as fh:
        fh.write("n,J_pn,C_qbar,gap\n")
        for r in rows:
            fh.write(f"{r['n']},{r['J_pn']!r},{r['C_qbar']!r},{r['gap']!r}\n")


@dataclass(frozen=True)
class AdmissibilityReport:
    """Numerically checkable membership conditions for the oriented class."""

    tangent_continuous: bool
    speed_positive: bool
    matches_boundary: bool
    finite_cost: bool

    @property
    def admissible(self) -> bool:
        return (
            self.tangent_continuous
            and self.speed_positive
            and self.matches_boundary
            and self.finite_cost
        )


def admissibility_report(
    curve: PlanarCurve,
    bc: BoundaryConditions,
    tol: Tolerances = DEFAULT_TOL,
    angle_tol: float = 1e-8,
) -> AdmissibilityReport:
    """Check a curve against oriented boundary data.

    Verifies tangent-direction continuity at segment junctions, positive
    sampled speed, endpoint/direction match with orientation, and a finite
    cost value. Junction curvature may jump; the cost only needs the
    curvature to stay integrable.
    """
    tangent_ok = True
    prev_dir = None
    speeds = []
    for seg in curve.segments:
        times, v, w, _ = segment_kinematics(seg)
        speeds.append(np.min(v))
        d_start = seg.velocity(times[0])
        if prev_dir is not None:
            ang_prev = math.atan2(prev_dir[1], prev_dir[0])
            ang_here = math.atan2(d_start[1], d_start[0])
            if abs(math.remainder(ang_prev - ang_here, 2.0 * math.pi)) > angle_tol:
                tangent_ok = False
        prev_dir = seg.velocity(times[-1])
    speed_ok = bool(min(speeds) > tol.min_speed)

    p_start = curve.segments[0].start_point()
    p_end = curve.segments[-1].end_point()
    d_start = curve.start_direction()
    d_end = curve.end_direction()
    pos_ok = (
        math.dist(p_start, bc.start_point) <= 1e-9
        and math.dist(p_end, bc.end_point) <= 1e-9
    )

    def same_oriented_dir(d, ref):
        ang_d = math.atan2(d[1], d[0])
        ang_r = math.atan2(ref[1], ref[0])
        return abs(math.remainder(ang_d - ang_r, 2.0 * math.pi)) <= angle_tol

    dir_ok = same_oriented_dir(d_start, bc.start_dir) and same_oriented_dir(d_end, bc.end_dir)
    try:
        value = cost_J(curve, tol=tol).value
        finite = bool(np.isfinite(value))
    except Exception:
        finite = False
    return AdmissibilityReport(
        tangent_continuous=tangent_ok,
        speed_positive=speed_ok,
        matches_boundary=bool(pos_ok and dir_ok),
        finite_cost=finite,
    )
