"""Group of planar motions, its projective quotient, and boundary conditions.

Elements are stored as (x, y, theta) with theta reduced to [0, 2*pi) for the
full group and [0, pi) for the quotient that identifies (x, y, theta) with
(x, y, theta + pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DegenerateBoundary

TWO_PI = 2.0 * math.pi


def reduce_angle(theta: float, period: float = TWO_PI) -> float:
    """Reduce an angle to [0, period)."""
    r = math.fmod(theta, period)
    if r < 0.0:
        r += period
    # guard against fmod returning exactly `period` after the correction
    if r >= period:
        r -= period
    return r


def wrap_signed(delta: float, period: float = TWO_PI) -> float:
    """Shortest signed representative of `delta` in (-period/2, period/2]."""
    r = math.fmod(delta, period)
    half = 0.5 * period
    if r > half:
        r -= period
    elif r <= -half:
        r += period
    return r


def angle_dist(a: float, b: float, period: float = TWO_PI) -> float:
    """Shortest angular distance between a and b on a circle of given period."""
    return abs(wrap_signed(a - b, period))


@dataclass(frozen=True)
class SE2Element:
    """Planar rigid motion: rotation by theta followed by translation (x, y)."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", reduce_angle(self.theta))

    @property
    def angle_period(self) -> float:
        return TWO_PI

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s, self.x], [s, c, self.y], [0.0, 0.0, 1.0]])

    def apply(self, px: float, py: float) -> tuple[float, float]:
        """Act on a planar point."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (c * px - s * py + self.x, s * px + c * py + self.y)

    def isclose(self, other: "SE2Element", tol: float = 1e-12) -> bool:
        return (
            abs(self.x - other.x) <= tol
            and abs(self.y - other.y) <= tol
            and angle_dist(self.theta, other.theta, self.angle_period) <= tol
        )


@dataclass(frozen=True)
class PSE2Element:
    """Quotient element: (x, y, theta) identified with (x, y, theta + pi)."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", reduce_angle(self.theta, math.pi))

    @property
    def angle_period(self) -> float:
        return math.pi

    def representative(self) -> SE2Element:
        """The representative with theta in [0, pi)."""
        return SE2Element(self.x, self.y, self.theta)

    def isclose(self, other: "PSE2Element", tol: float = 1e-12) -> bool:
        return (
            abs(self.x - other.x) <= tol
            and abs(self.y - other.y) <= tol
            and angle_dist(self.theta, other.theta, self.angle_period) <= tol
        )


GroupElement = Union[SE2Element, PSE2Element]

IDENTITY = SE2Element(0.0, 0.0, 0.0)
P_IDENTITY = PSE2Element(0.0, 0.0, 0.0)


def compose(g: SE2Element, h: SE2Element) -> SE2Element:
    """Group product g*h (matrix product of the homogeneous representations)."""
    c, s = math.cos(g.theta), math.sin(g.theta)
    return SE2Element(
        g.x + c * h.x - s * h.y,
        g.y + s * h.x + c * h.y,
        g.theta + h.theta,
    )


def inverse(g: SE2Element) -> SE2Element:
    c, s = math.cos(g.theta), math.sin(g.theta)
    return SE2Element(-(c * g.x + s * g.y), -(-s * g.x + c * g.y), -g.theta)


@dataclass(frozen=True)
class BoundaryConditions:
    """Endpoints and tangent directions for a completion problem.

    mode "oriented" matches directions up to positive scalar multiples,
    mode "projective" up to nonzero scalar multiples.
    """

    start_point: tuple[float, float]
    end_point: tuple[float, float]
    start_dir: tuple[float, float]
    end_dir: tuple[float, float]
    mode: str  # "oriented" | "projective"

    def __post_init__(self):
        if self.mode not in ("oriented", "projective"):
            raise ValueError(f"unknown boundary mode {self.mode!r}")
        self.validate()

    def validate(self, tol: float = 1e-12) -> None:
        dx = self.end_point[0] - self.start_point[0]
        dy = self.end_point[1] - self.start_point[1]
        if math.hypot(dx, dy) <= tol:
            raise DegenerateBoundary("start and end points coincide")
        if math.hypot(*self.start_dir) <= tol:
            raise DegenerateBoundary("start direction vanishes")
        if math.hypot(*self.end_dir) <= tol:
            raise DegenerateBoundary("end direction vanishes")

    @property
    def start_angle(self) -> float:
        return math.atan2(self.start_dir[1], self.start_dir[0])

    @property
    def end_angle(self) -> float:
        return math.atan2(self.end_dir[1], self.end_dir[0])

    @property
    def distance(self) -> float:
        return math.hypot(
            self.end_point[0] - self.start_point[0],
            self.end_point[1] - self.start_point[1],
        )

    def left_translate(self, g: SE2Element) -> "BoundaryConditions":
        """Apply a rigid motion to both endpoints and directions."""
        c, s = math.cos(g.theta), math.sin(g.theta)

        def rot(v):
            return (c * v[0] - s * v[1], s * v[0] + c * v[1])

        return BoundaryConditions(
            start_point=g.apply(*self.start_point),
            end_point=g.apply(*self.end_point),
            start_dir=rot(self.start_dir),
            end_dir=rot(self.end_dir),
            mode=self.mode,
        )


def canonicalize(bc: BoundaryConditions) -> tuple[GroupElement, GroupElement]:
    """Translate a boundary problem to one starting from the identity.

    Returns (identity, q0^{-1} q1) where q0, q1 are the group elements built
    from the endpoints and direction angles. In projective mode both elements
    are quotient elements (angles reduced mod pi) and the target is computed
    from the canonical representatives.
    """
    bc.validate()
    th0, th1 = bc.start_angle, bc.end_angle
    if bc.mode == "projective":
        th0 = reduce_angle(th0, math.pi)
        th1 = reduce_angle(th1, math.pi)
    q0 = SE2Element(bc.start_point[0], bc.start_point[1], th0)
    q1 = SE2Element(bc.end_point[0], bc.end_point[1], th1)
    target = compose(inverse(q0), q1)
    if bc.mode == "projective":
        return P_IDENTITY, PSE2Element(target.x, target.y, target.theta)
    return IDENTITY, target
