"""Planar curve completion by minimizing a combined length-curvature cost.

The solver lifts completion problems to the group of planar motions, follows
the first-order extremal dynamics (pendulum-type tangent angle), and matches
boundary data by multi-start shooting. Oriented boundary data may admit no
minimizing curve; the package also builds the classical two-arc witness and
its approximating curve sequence.
"""

from .config import DEFAULT_TOL, Tolerances, tolerances_from_env
from .costs import CostReport, arclength_reparam, cost_C, cost_E, cost_J, curvature
from .curves import (
    ArcSegment,
    LineSegment,
    PlanarCurve,
    SampledSegment,
    circle_arc,
    homothety,
    line_between,
    read_curve_csv,
    sampled_from_function,
    write_curve_csv,
)
from .errors import (
    DegenerateBoundary,
    DegenerateIntersection,
    DegenerateSegment,
    EventDetectionFailure,
    InsufficientSamples,
    InvalidSpec,
    NoConvergence,
    NoDescent,
    NonIntegrable,
    SrElasticaError,
    VanishingVelocity,
    XiTooLarge,
    ZeroCost,
    ZeroScale,
)
from .extremals import (
    Covector,
    ExtremalSpec,
    abnormal_extremals,
    hamiltonian,
    integrate_oriented,
    integrate_projective,
    normalize_covector,
    pendulum_residual,
)
from .lifting import lift, project
from .se2 import (
    IDENTITY,
    BoundaryConditions,
    PSE2Element,
    SE2Element,
    canonicalize,
    compose,
    inverse,
)
from .trajectory import ArcMark, ControlTrajectory, dynamics_residual, write_trajectory_csv

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
