"""Planar curve model: exact primitives plus uniformly sampled segments.

A curve is an ordered, C0-contiguous list of segments over a closed time
interval. Lines and circular arcs are kept exact so their costs admit closed
forms; everything else is represented by dense uniform samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from . import numdiff
from .errors import DegenerateSegment, ZeroScale


@dataclass(frozen=True)
class LineSegment:
    t0: float
    t1: float
    p0: tuple[float, float]
    p1: tuple[float, float]

    def __post_init__(self):
        if self.t1 <= self.t0:
            raise ValueError("segment time interval must be increasing")

    @property
    def length(self) -> float:
        return math.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1])

    def point(self, t: float) -> tuple[float, float]:
        s = (t - self.t0) / (self.t1 - self.t0)
        return (
            self.p0[0] + s * (self.p1[0] - self.p0[0]),
            self.p0[1] + s * (self.p1[1] - self.p0[1]),
        )

    def start_point(self) -> tuple[float, float]:
        return self.p0

    def end_point(self) -> tuple[float, float]:
        return self.p1

    def velocity(self, t: float) -> tuple[float, float]:
        dt = self.t1 - self.t0
        return ((self.p1[0] - self.p0[0]) / dt, (self.p1[1] - self.p0[1]) / dt)

    def scaled(self, beta: float) -> "LineSegment":
        b = beta
        return LineSegment(
            self.t0, self.t1,
            (b * self.p0[0], b * self.p0[1]),
            (b * self.p1[0], b * self.p1[1]),
        )


@dataclass(frozen=True)
class ArcSegment:
    """Circular arc traversed with uniform angular rate.

    The signed sweep (phi1 - phi0) fixes the orientation: positive is
    counterclockwise (curvature +1/radius).
    """

    t0: float
    t1: float
    center: tuple[float, float]
    radius: float
    phi0: float
    phi1: float

    def __post_init__(self):
        if self.t1 <= self.t0:
            raise ValueError("segment time interval must be increasing")
        if self.radius <= 0.0:
            raise ValueError("arc radius must be positive")
        if self.phi1 == self.phi0:
            raise ValueError("arc sweep must be nonzero")

    @property
    def sweep(self) -> float:
        return self.phi1 - self.phi0

    @property
    def length(self) -> float:
        return self.radius * abs(self.sweep)

    @property
    def curvature(self) -> float:
        return math.copysign(1.0 / self.radius, self.sweep)

    def _phi(self, t: float) -> float:
        s = (t - self.t0) / (self.t1 - self.t0)
        return self.phi0 + s * self.sweep

    def point(self, t: float) -> tuple[float, float]:
        phi = self._phi(t)
        return (
            self.center[0] + self.radius * math.cos(phi),
            self.center[1] + self.radius * math.sin(phi),
        )

    def start_point(self) -> tuple[float, float]:
        return self.point(self.t0)

    def end_point(self) -> tuple[float, float]:
        return self.point(self.t1)

    def velocity(self, t: float) -> tuple[float, float]:
        phi = self._phi(t)
        rate = self.sweep / (self.t1 - self.t0)
        return (
            -self.radius * rate * math.sin(phi),
            self.radius * rate * math.cos(phi),
        )

    def scaled(self, beta: float) -> "ArcSegment":
        b = beta
        return ArcSegment(
            self.t0, self.t1,
            (b * self.center[0], b * self.center[1]),
            abs(b) * self.radius,
            self.phi0, self.phi1,
        )


class SampledSegment:
    """Uniformly sampled C2 curve piece; derivatives by finite differences."""

    def __init__(self, times: Sequence[float], points: np.ndarray):
        t = np.asarray(times, dtype=float)
        p = np.asarray(points, dtype=float)
        if t.ndim != 1 or p.shape != (t.size, 2):
            raise ValueError("times must be (n,), points (n, 2)")
        if t.size < 4:
            raise ValueError("sampled segments need at least 4 points")
        if not numdiff.is_uniform(t):
            raise ValueError("sampled segments must use a uniform time step")
        self.times = t
        self.points = p

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t1(self) -> float:
        return float(self.times[-1])

    @property
    def step(self) -> float:
        return float((self.times[-1] - self.times[0]) / (self.times.size - 1))

    def start_point(self) -> tuple[float, float]:
        return (float(self.points[0, 0]), float(self.points[0, 1]))

    def end_point(self) -> tuple[float, float]:
        return (float(self.points[-1, 0]), float(self.points[-1, 1]))

    def point(self, t: float) -> tuple[float, float]:
        x = np.interp(t, self.times, self.points[:, 0])
        y = np.interp(t, self.times, self.points[:, 1])
        return (float(x), float(y))

    def derivatives(self) -> tuple[np.ndarray, np.ndarray]:
        """First and second time-derivative arrays at the sample times."""
        d1 = numdiff.first_derivative(self.points, self.step)
        d2 = numdiff.second_derivative(self.points, self.step)
        return d1, d2

    def velocity(self, t: float) -> tuple[float, float]:
        d1, _ = self.derivatives()
        vx = np.interp(t, self.times, d1[:, 0])
        vy = np.interp(t, self.times, d1[:, 1])
        return (float(vx), float(vy))

    def scaled(self, beta: float) -> "SampledSegment":
        return SampledSegment(self.times.copy(), beta * self.points)

    def __repr__(self):
        return f"SampledSegment(n={self.times.size}, t=[{self.t0}, {self.t1}])"


Segment = Union[LineSegment, ArcSegment, SampledSegment]


@dataclass(frozen=True)
class PlanarCurve:
    """Ordered list of C0-contiguous segments on a closed time interval."""

    segments: tuple[Segment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError("curve needs at least one segment")
        self.validate()

    def validate(self, tol: float = 1e-10) -> None:
        prev = None
        for seg in self.segments:
            if prev is not None:
                if seg.t0 < prev.t1 - 1e-12:
                    raise ValueError("segment time intervals must be ordered")
                gap = math.dist(prev.end_point(), seg.start_point())
                if gap > tol:
                    raise ValueError(f"segments are not contiguous (gap {gap:.2e})")
            prev = seg

    @property
    def t_start(self) -> float:
        return self.segments[0].t0

    @property
    def t_end(self) -> float:
        return self.segments[-1].t1

    def point(self, t: float) -> tuple[float, float]:
        return self._segment_at(t).point(t)

    def _segment_at(self, t: float) -> Segment:
        for seg in self.segments:
            if t <= seg.t1 or seg is self.segments[-1]:
                if t >= seg.t0 - 1e-12:
                    return seg
        raise ValueError(f"time {t} outside curve domain")

    def start_direction(self) -> tuple[float, float]:
        return self.segments[0].velocity(self.segments[0].t0)

    def end_direction(self) -> tuple[float, float]:
        return self.segments[-1].velocity(self.segments[-1].t1)

    def length(self) -> float:
        total = 0.0
        for seg in self.segments:
            if isinstance(seg, (LineSegment, ArcSegment)):
                total += seg.length
            else:
                total += float(
                    np.sum(np.linalg.norm(np.diff(seg.points, axis=0), axis=1))
                )
        return total

    def is_degenerate(self, tol: float = 1e-12) -> bool:
        """True when the whole curve collapses to a single point."""
        pts = self.dense_points(8)
        span = pts.max(axis=0) - pts.min(axis=0)
        return bool(np.all(span <= tol))

    def dense_points(self, per_segment: int = 64) -> np.ndarray:
        chunks = []
        for seg in self.segments:
            if isinstance(seg, SampledSegment):
                chunks.append(seg.points)
            else:
                ts = np.linspace(seg.t0, seg.t1, per_segment)
                chunks.append(np.array([seg.point(t) for t in ts]))
        return np.vstack(chunks)

    def bounding_box(self) -> tuple[float, float, float, float]:
        pts = self.dense_points()
        return (
            float(pts[:, 0].min()),
            float(pts[:, 1].min()),
            float(pts[:, 0].max()),
            float(pts[:, 1].max()),
        )


def homothety(curve: PlanarCurve, beta: float) -> PlanarCurve:
    """Scale a curve about the origin: (x, y) -> (beta x, beta y)."""
    if beta == 0.0:
        raise ZeroScale("homothety scale must be nonzero")
    return PlanarCurve(tuple(seg.scaled(beta) for seg in curve.segments))


def translate(curve: PlanarCurve, g) -> PlanarCurve:
    """Apply a rigid motion (SE2Element) to the whole curve."""
    c, s = math.cos(g.theta), math.sin(g.theta)

    def move(p):
        return (c * p[0] - s * p[1] + g.x, s * p[0] + c * p[1] + g.y)

    out = []
    for seg in curve.segments:
        if isinstance(seg, LineSegment):
            out.append(LineSegment(seg.t0, seg.t1, move(seg.p0), move(seg.p1)))
        elif isinstance(seg, ArcSegment):
            out.append(
                ArcSegment(
                    seg.t0, seg.t1, move(seg.center), seg.radius,
                    seg.phi0 + g.theta, seg.phi1 + g.theta,
                )
            )
        else:
            pts = seg.points @ np.array([[c, s], [-s, c]]) + np.array([g.x, g.y])
            out.append(SampledSegment(seg.times, pts))
    return PlanarCurve(tuple(out))


# --- constructors -----------------------------------------------------------


def line_between(p0, p1, t0: float = 0.0, t1: float | None = None) -> PlanarCurve:
    if t1 is None:
        t1 = t0 + math.dist(p0, p1)  # unit-speed by default
    return PlanarCurve((LineSegment(t0, t1, tuple(p0), tuple(p1)),))


def circle_arc(
    center, radius: float, phi0: float, phi1: float,
    t0: float = 0.0, t1: float | None = None,
) -> PlanarCurve:
    if t1 is None:
        t1 = t0 + radius * abs(phi1 - phi0)  # unit-speed by default
    return PlanarCurve((ArcSegment(t0, t1, tuple(center), radius, phi0, phi1),))


def sampled_from_function(
    f: Callable[[np.ndarray], np.ndarray], t0: float, t1: float, n: int
) -> PlanarCurve:
    """Sample a parametric function t -> (x, y) on a uniform grid."""
    ts = np.linspace(t0, t1, n)
    pts = np.asarray(f(ts), dtype=float)
    if pts.shape == (2, n):
        pts = pts.T
    return PlanarCurve((SampledSegment(ts, pts),))


# --- CSV interchange --------------------------------------------------------


def write_curve_csv(path: str | Path, curve: PlanarCurve, per_segment: int = 256) -> None:
    """Write samples as CSV with header t,x,y and strictly increasing t."""
    rows: list[tuple[float, float, float]] = []
    last_t = None
    for seg in curve.segments:
        if isinstance(seg, SampledSegment):
            ts, pts = seg.times, seg.points
        else:
            ts = np.linspace(seg.t0, seg.t1, per_segment)
            pts = np.array([seg.point(t) for t in ts])
        for t, (x, y) in zip(ts, pts):
            if last_t is not None and t <= last_t:
                continue  # drop duplicated junction sample
            rows.append((float(t), float(x), float(y)))
            last_t = float(t)
    with open(path, "w") as fh:
        fh.write("t,x,y\n")
        for t, x, y in rows:
            fh.write(f"{t!r},{x!r},{y!r}\n")


def read_curve_csv(path: str | Path) -> PlanarCurve:
    """Read a t,x,y CSV into a single sampled-segment curve.

    The file must be strictly increasing in t and uniformly stepped.
    """
    data = np.genfromtxt(path, delimiter=",", names=True)
    for col in ("t", "x", "y"):
        if col not in (data.dtype.names or ()):
            raise ValueError(f"curve CSV must have header t,x,y; missing {col!r}")
    t = np.atleast_1d(data["t"]).astype(float)
    pts = np.column_stack([np.atleast_1d(data["x"]), np.atleast_1d(data["y"])]).astype(float)
    if np.any(np.diff(t) <= 0):
        raise ValueError("curve CSV times must be strictly increasing")
    if not numdiff.is_uniform(t):
        raise ValueError("curve CSV times must be uniformly stepped")
    if np.any(np.linalg.norm(np.diff(pts, axis=0), axis=1) <= 0.0):
        raise DegenerateSegment("curve CSV contains coincident consecutive samples")
    return PlanarCurve((SampledSegment(t, pts),))
