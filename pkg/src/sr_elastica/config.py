"""Centralized tolerance configuration.

All numerical thresholds used across the package live in one record so that
tests and the CLI can override them coherently.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # group algebra / angle comparisons
    angle_eq: float = 1e-12
    # C0-contiguity of curve segments
    contiguity: float = 1e-10
    # minimum admissible curve speed for lift / curvature
    min_speed: float = 1e-9
    # quadrature refinement target
    quadrature_refine: float = 1e-9
    # ODE integrator (embedded Runge-Kutta) tolerances
    integrator_rtol: float = 1e-12
    integrator_atol: float = 1e-12
    # switching-event localization
    event_tol: float = 1e-12
    # shooting convergence: planar and angular mismatch
    mismatch_pos: float = 1e-8
    mismatch_ang: float = 1e-8
    # solution deduplication
    dedupe_lambda: float = 1e-6
    dedupe_cost: float = 1e-8
    # positive-duration threshold for rotation-arc witnesses
    rotation_witness: float = 1e-9

    def with_overrides(self, **kwargs: float) -> "Tolerances":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


DEFAULT_TOL = Tolerances()

ENV_TOL_VAR = "SR_ELASTICA_TOL"


def tolerances_from_env(base: Tolerances = DEFAULT_TOL) -> Tolerances:
    """Apply the SR_ELASTICA_TOL environment override.

    The variable holds either a single float (rescales the shooting mismatch
    tolerances) or comma-separated `name=value` pairs for individual fields.
    """
    raw = os.environ.get(ENV_TOL_VAR)
    if not raw:
        return base
    raw = raw.strip()
    if "=" not in raw:
        v = float(raw)
        return base.with_overrides(mismatch_pos=v, mismatch_ang=v)
    overrides: dict[str, float] = {}
    for part in raw.split(","):
        name, _, value = part.partition("=")
        name = name.strip()
        if name not in Tolerances.__dataclass_fields__:
            raise ValueError(f"unknown tolerance field {name!r} in {ENV_TOL_VAR}")
        overrides[name] = float(value)
    return base.with_overrides(**overrides)
