"""Cost functionals over planar curves and control trajectories.

The central cost J integrates sqrt(v^2 + v^2 K^2) dt = v sqrt(1 + K^2) dt
over a curve; on a lifted trajectory the same number is the control cost
C = integral of |(u1, u2)|. Exact closed forms are used on line and arc
primitives; sampled segments use finite differences plus composite Simpson.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, simpson

from .config import DEFAULT_TOL, Tolerances
from .curves import ArcSegment, LineSegment, PlanarCurve, SampledSegment
from .curves import homothety  # noqa: F401  (re-exported: scaling lives with costs)
from .errors import NonIntegrable, VanishingVelocity, ZeroCost
from .trajectory import ControlTrajectory

E_FAMILY = ("E1", "E2", "E3", "E4")


@dataclass(frozen=True)
class CostReport:
    functional: str
    value: float
    breakdown: tuple[float, ...] = field(default_factory=tuple)
    eta: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "breakdown", tuple(float(b) for b in self.breakdown))

    def to_dict(self) -> dict:
        d = {
            "functional": self.functional,
            "value": self.value,
            "breakdown": list(self.breakdown),
        }
        if self.eta is not None:
            d["eta"] = self.eta
        return d


def segment_kinematics(seg) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Sample times, speed v, angular rate v*K, and signed curvature numerator.

    Returns (times, v, w, cross) where w = v*K = cross / v^2. Primitives are
    sampled exactly; sampled segments use the uniform-grid stencils.
    """
    if isinstance(seg, LineSegment):
        n = 33
        t = np.linspace(seg.t0, seg.t1, n)
        v = np.full(n, seg.length / (seg.t1 - seg.t0))
        return t, v, np.zeros(n), np.zeros(n)
    if isinstance(seg, ArcSegment):
        n = 65
        t = np.linspace(seg.t0, seg.t1, n)
        rate = seg.sweep / (seg.t1 - seg.t0)
        v = np.full(n, seg.radius * abs(rate))
        w = np.full(n, rate)  # v*K = R|rate| * sign(sweep)/R = rate
        return t, v, w, w * v * v
    if isinstance(seg, SampledSegment):
        d1, d2 = seg.derivatives()
        v = np.hypot(d1[:, 0], d1[:, 1])
        cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        v2 = v * v
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(v2 > 0.0, cross / v2, 0.0)
        return seg.times, v, w, cross
    raise TypeError(f"unknown segment type {type(seg)!r}")


def curvature(curve: PlanarCurve, t: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """Signed curvature (xdot*yddot - ydot*xddot) / v^3 at time t."""
    seg = curve._segment_at(t)
    if isinstance(seg, LineSegment):
        return 0.0
    if isinstance(seg, ArcSegment):
        return seg.curvature
    times, v, w, _ = segment_kinematics(seg)
    vt = float(np.interp(t, times, v))
    if vt < tol.min_speed:
        raise VanishingVelocity(f"speed {vt:.2e} below threshold at t={t}")
    kappa = w / np.where(v > 0, v, 1.0)
    return float(np.interp(t, times, kappa))


def _simpson_blocks(times: np.ndarray, values: np.ndarray) -> float:
    """Composite Simpson over maximal uniform runs of the time grid."""
    if times.size < 2:
        return 0.0
    dt = np.diff(times)
    scale = max(float(times[-1] - times[0]), 1e-300)
    total = 0.0
    start = 0
    for i in range(1, dt.size):
        if abs(dt[i] - dt[i - 1]) > 1e-9 * scale:
            total += float(simpson(values[start:i + 1], x=times[start:i + 1]))
            start = i
    total += float(simpson(values[start:], x=times[start:]))
    return total


def cost_J(
    curve: PlanarCurve, beta: float = 1.0, tol: Tolerances = DEFAULT_TOL
) -> CostReport:
    """Length-curvature cost: integral of sqrt(v^2 + beta^2 v^2 K^2) dt.

    beta weighs the curvature term (1.0 gives the plain cost). At isolated
    speed zeros the integrand is evaluated through the lifted controls
    (v, vK), which stay finite where the curvature alone blows up.
    """
    breakdown = []
    for seg in curve.segments:
        if isinstance(seg, LineSegment):
            breakdown.append(seg.length)
        elif isinstance(seg, ArcSegment):
            # arclength parametrization: v = 1, K = 1/R over length R*|sweep|
            breakdown.append(abs(seg.sweep) * math.sqrt(seg.radius**2 + beta**2))
        else:
            times, v, w, _ = segment_kinematics(seg)
            integrand = np.hypot(v, beta * w)
            if not np.all(np.isfinite(integrand)):
                raise NonIntegrable("cost integrand is not finite")
            breakdown.append(_simpson_blocks(times, integrand))
    return CostReport("J", float(sum(breakdown)), tuple(breakdown))


def cost_C(traj: ControlTrajectory) -> CostReport:
    """Control cost: integral of |(u1, u2)| dt over the trajectory."""
    speed = np.hypot(traj.controls[:, 0], traj.controls[:, 1])
    blocks = traj.uniform_blocks()
    breakdown = [
        float(simpson(speed[idx], x=traj.times[idx])) if idx.size > 1 else 0.0
        for idx in blocks
    ]
    return CostReport("C", float(sum(breakdown)), tuple(breakdown))


def cost_E(
    curve: PlanarCurve,
    which: str,
    eta: Optional[float] = None,
    tol: Tolerances = DEFAULT_TOL,
) -> CostReport:
    """Arclength-based curvature energies E1..E4.

    E1 = int K^2 ds, E2 = int (1 + K^2) ds, E3 = int (eta + K^2) ds,
    E4 = int sqrt(1 + K^2) ds. Internally integrates against ds = v dt,
    which is the arclength reparametrization in integral form; requires the
    speed to be bounded away from zero.
    """
    if which not in E_FAMILY:
        raise ValueError(f"unknown functional {which!r}")
    if which == "E3":
        if eta is None:
            raise ValueError("E3 requires the eta parameter")
    else:
        eta = None

    def line_val(length: float) -> float:
        return {"E1": 0.0, "E2": length, "E3": (eta or 0.0) * length, "E4": length}[which]

    def arc_val(radius: float, length: float) -> float:
        k2 = 1.0 / (radius * radius)
        if which == "E1":
            return length * k2
        if which == "E2":
            return length * (1.0 + k2)
        if which == "E3":
            return length * (eta + k2)
        return length * math.sqrt(1.0 + k2)

    breakdown = []
    for seg in curve.segments:
        if isinstance(seg, LineSegment):
            breakdown.append(line_val(seg.length))
        elif isinstance(seg, ArcSegment):
            breakdown.append(arc_val(seg.radius, seg.length))
        else:
            times, v, w, _ = segment_kinematics(seg)
            if np.min(v) < tol.min_speed:
                raise VanishingVelocity(
                    "arclength parametrization impossible: speed vanishes"
                )
            kappa = w / v
            if which == "E1":
                integrand = kappa * kappa * v
            elif which == "E2":
                integrand = (1.0 + kappa * kappa) * v
            elif which == "E3":
                integrand = (eta + kappa * kappa) * v
            else:
                integrand = np.sqrt(1.0 + kappa * kappa) * v
            breakdown.append(_simpson_blocks(times, integrand))
    return CostReport(which, float(sum(breakdown)), tuple(breakdown), eta=eta)


def arclength_reparam(
    traj: ControlTrajectory, tol: Tolerances = DEFAULT_TOL
) -> ControlTrajectory:
    """Rescale a trajectory to constant control norm on the same interval.

    Builds the running cost f(t), its left-continuous pseudo-inverse g (idle
    plateaus collapse to their first time), normalizes the controls along
    g, and linearly rescales back to [0, T] with control norm L/T. Endpoint
    states are preserved exactly; the total cost is preserved to roundoff.
    """
    speed = np.hypot(traj.controls[:, 0], traj.controls[:, 1])
    T = traj.duration
    L = cost_C(traj).value
    if L <= 1e-15 * max(1.0, T):
        raise ZeroCost("trajectory has zero control cost")

    t = traj.times
    f = cumulative_trapezoid(speed, t, initial=0.0)
    L_warp = float(f[-1])  # trapezoid total; used only for the time warp

    m = t.size
    s_grid = np.linspace(0.0, L_warp, m)
    # left-continuous pseudo-inverse of the piecewise-linear f
    idx = np.searchsorted(f, s_grid, side="left")
    idx = np.clip(idx, 0, m - 1)
    g = np.empty(m)
    for j, (s, i) in enumerate(zip(s_grid, idx)):
        if i == 0:
            g[j] = t[0]
        else:
            df = f[i] - f[i - 1]
            g[j] = t[i] if df <= 0.0 else t[i - 1] + (s - f[i - 1]) / df * (t[i] - t[i - 1])

    states = np.column_stack([np.interp(g, t, traj.states[:, k]) for k in range(3)])
    u_raw = np.column_stack([np.interp(g, t, traj.controls[:, k]) for k in range(2)])
    norms = np.hypot(u_raw[:, 0], u_raw[:, 1])
    # direction is ill-defined where the input idled; borrow the nearest
    # moving sample's direction (the state does not move there anyway)
    bad = norms < 1e-13
    if np.any(bad):
        good = np.where(~bad)[0]
        if good.size == 0:
            raise ZeroCost("controls vanish identically")
        nearest = good[np.argmin(np.abs(good[None, :] - np.where(bad)[0][:, None]), axis=1)]
        u_raw[bad] = u_raw[nearest]
        norms[bad] = np.hypot(u_raw[bad, 0], u_raw[bad, 1])
    u_unit = u_raw / norms[:, None]
    controls = u_unit * (L / T)

    # snap the endpoints: the state is frozen on any leading/trailing plateau
    states[0] = traj.states[0]
    states[-1] = traj.states[-1]

    times_out = t[0] + s_grid * (T / L_warp)
    times_out[-1] = t[-1]
    return ControlTrajectory(
        times=times_out,
        states=states,
        controls=controls,
        covectors=None,
        arc_marks=(),
        space=traj.space,
    )
