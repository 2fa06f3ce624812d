"""Poincaré section through the heavy primary and L4, with exact crossings.

The section is the configuration-space line ``sqrt(3)*x - y + sqrt(3)/2 = 0``.
Section coordinates are the canonical pair along the line,

    a = 2x + 1,      p_a = p_x/2 + (sqrt(3)/2) p_y,

(the tangential momentum; {a, p_a} = 1).  The transverse momentum is
recovered from the energy when lifting.  Crossing localization integrates
the regularized flow, then applies one Runge-Kutta step with the section
function as independent variable (step exactly -g) followed by a bounded
Newton polish; the residual contract is |g| < 1e-10.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dynamics import (
    RegularizedState,
    RotatingState,
    s_constant,
    to_regularized,
    validate_mu,
)
from .errors import (
    BranchPoint,
    DriftExceeded,
    ForbiddenRegion,
    MaxStepsExceeded,
    NotOnSection,
    StepFailure,
)
from .integrate import IntegratorConfig, default_config

__all__ = [
    "SectionPoint",
    "section_value",
    "section_project",
    "section_lift",
    "poincare_return",
    "crossing_stream",
    "write_crossings_csv",
]

SQRT3 = math.sqrt(3.0)

#: on-section tolerance for accepting a rotating state as a crossing
ON_SECTION_TOL = 1e-9

#: default steps allowed per requested crossing before declaring escape
MAX_STEPS_PER_CROSSING = 200_000

# tangent and inward normal of the section line
_ET = np.array([0.5, SQRT3 / 2.0])
_EN = np.array([-SQRT3 / 2.0, 0.5])


@dataclass(frozen=True)
class SectionPoint:
    """A section crossing in the canonical line chart.

    direction is the sign of dg/dt at the crossing; t_cross the physical
    time of the crossing along its generating trajectory.
    """

    a: float
    pa: float
    E: float
    direction: int
    t_cross: float = 0.0


def section_value(state: RotatingState) -> float:
    """Signed section function g = sqrt(3)*x - y + sqrt(3)/2."""
    return SQRT3 * state.x - state.y + SQRT3 / 2.0


def _gdot(state: RotatingState, mu: float) -> float:
    # g follows the configuration only; dg/dt = sqrt(3)*dx - dy
    return SQRT3 * (state.px + state.y) - (state.py - (state.x + 0.5 - mu))


def section_project(
    state: RotatingState, E: float, mu: float, t_cross: float = 0.0
) -> SectionPoint:
    """Project an on-section state to (a, p_a); direction from the transverse velocity.

    Raises
    ------
    NotOnSection
        If |g(state)| exceeds the section tolerance.
    """
    g = section_value(state)
    if abs(g) > ON_SECTION_TOL:
        raise NotOnSection(f"|g| = {abs(g):.2e} too large to project")
    a = 2.0 * state.x + 1.0
    pa = 0.5 * state.px + (SQRT3 / 2.0) * state.py
    direction = 1 if _gdot(state, mu) > 0.0 else -1
    return SectionPoint(a, pa, float(E), direction, t_cross)


def section_lift(point: SectionPoint, mu: float) -> RotatingState:
    """Reconstruct the unique full state on the section with H = E.

    Positions follow from ``a``; the momentum along the line is ``p_a``
    and the transverse momentum is the root of the energy equation
    selected by ``direction``.

    Raises
    ------
    ForbiddenRegion
        If the energy equation has no real transverse-momentum root
        (the point lies outside the Hill region at this energy).
    """
    validate_mu(mu)
    x = 0.5 * (point.a - 1.0)
    y = SQRT3 * (x + 0.5)
    r1 = math.hypot(x + 0.5, y)
    r2 = math.hypot(x - 0.5, y)
    if r1 < 1e-12 or r2 < 1e-12:
        raise BranchPoint("section point sits on a primary")
    # H = pn^2/2 + b*pn + c with pn the momentum along the inward normal
    b = -(SQRT3 / 2.0) * y - 0.5 * (x + 0.5 - mu)
    c = (
        0.5 * point.pa**2
        + 0.5 * y * point.pa
        - (x + 0.5 - mu) * (SQRT3 / 2.0) * point.pa
        - (1.0 - mu) / r1
        - mu / r2
        + s_constant(mu)
    )
    disc = b * b - 2.0 * (c - point.E)
    if disc < 0.0:
        if disc < -1e-12:
            raise ForbiddenRegion(
                f"no real transverse momentum at a = {point.a:.6f}, E = {point.E:.6f}"
            )
        disc = 0.0  # zero-velocity boundary up to roundoff
    # dg/dt = -2*(pn + b): positive crossings take the lower root
    pn = -b - point.direction * math.sqrt(disc)
    px = point.pa * _ET[0] + pn * _EN[0]
    py = point.pa * _ET[1] + pn * _EN[1]
    return RotatingState(x, y, px, py)


_STATUS_ERRORS = {
    _kernels.STATUS_MAX_STEPS: (MaxStepsExceeded, "no section crossing within the step budget"),
    _kernels.STATUS_DRIFT: (DriftExceeded, "energy drift exceeded tolerance"),
    _kernels.STATUS_NONFINITE: (StepFailure, "trajectory left the finite domain"),
    _kernels.STATUS_PRIMARY: (BranchPoint, "crossing within 1e-6 of the heavy primary"),
    _kernels.STATUS_WINDOW: (MaxStepsExceeded, "trajectory escaped the tracking window"),
}

_NO_WINDOW = (-np.inf, np.inf, np.inf)


def _collect(
    reg: RegularizedState,
    mu: float,
    n: int,
    direction: int,
    config: IntegratorConfig,
    max_steps: int | None = None,
    window: tuple[float, float, float] = _NO_WINDOW,
):
    """Run the compiled collector; returns (states (n,5), dirs, max|K|)."""
    out_states = np.empty((n, 5))
    out_dirs = np.empty(n, dtype=np.int8)
    budget = max_steps if max_steps is not None else min(
        config.max_steps, n * MAX_STEPS_PER_CROSSING
    )
    n_found, status, max_k, _ = _kernels.collect_crossings(
        reg.as_array(),
        config.step,
        1.0 - 2.0 * mu,
        reg.E - s_constant(mu),
        n,
        direction,
        budget,
        config.drift_tolerance,
        out_states,
        out_dirs,
        window[0],
        window[1],
        window[2],
    )
    if n_found < n:
        err, msg = _STATUS_ERRORS[status]
        raise err(f"{msg} (found {n_found}/{n} crossings)")
    return out_states, out_dirs, max_k


def _states_to_points(states: np.ndarray, dirs, E: float, t_offset: float):
    """Vectorized conversion of crossing rows (u, v, pu, pv, t) to SectionPoints."""
    w = states[:, 0] + 1j * states[:, 1]
    cw = np.cos(w)
    sw = np.sin(w)
    pw = states[:, 2] - 1j * states[:, 3]
    pz = -2.0 * pw / sw
    a = cw.real + 1.0
    pa = 0.5 * pz.real + (SQRT3 / 2.0) * (-pz.imag)
    t = states[:, 4] + t_offset
    return [
        SectionPoint(float(a[i]), float(pa[i]), E, int(dirs[i]), float(t[i]))
        for i in range(states.shape[0])
    ]


def poincare_return(
    point: SectionPoint, mu: float, config: IntegratorConfig | None = None
) -> SectionPoint:
    """First return of the section map (same crossing direction).

    Raises
    ------
    ForbiddenRegion
        If the point cannot be lifted at its energy.
    MaxStepsExceeded
        If the trajectory escapes the region without returning.
    """
    if config is None:
        config = default_config(mu)
    reg = to_regularized(section_lift(point, mu), point.E)
    states, dirs, _ = _collect(reg, mu, 1, point.direction, config)
    return _states_to_points(states, dirs, point.E, point.t_cross)[0]


def crossing_stream(
    point: SectionPoint,
    mu: float,
    n: int,
    config: IntegratorConfig | None = None,
    direction: int | None = None,
    window: tuple[float, float, float] = _NO_WINDOW,
) -> list[SectionPoint]:
    """The next n crossings of the trajectory seeded at `point`.

    direction defaults to the seed's own direction (the return-map orbit);
    pass 0 to record both directions.  `window` is an (a_min, a_max,
    |p_a|_max) escape detector: any crossing outside it aborts the stream
    with MaxStepsExceeded instead of burning the whole step budget.
    """
    if config is None:
        config = default_config(mu)
    if direction is None:
        direction = point.direction
    reg = to_regularized(section_lift(point, mu), point.E)
    states, dirs, _ = _collect(reg, mu, n, direction, config, window=window)
    return _states_to_points(states, dirs, point.E, point.t_cross)


def crossing_stream_max_drift(
    point: SectionPoint,
    mu: float,
    n: int,
    config: IntegratorConfig | None = None,
    direction: int | None = None,
    window: tuple[float, float, float] = _NO_WINDOW,
) -> tuple[list[SectionPoint], float]:
    """crossing_stream plus the largest |K| observed along the trajectory."""
    if config is None:
        config = default_config(mu)
    if direction is None:
        direction = point.direction
    reg = to_regularized(section_lift(point, mu), point.E)
    states, dirs, max_k = _collect(reg, mu, n, direction, config, window=window)
    return _states_to_points(states, dirs, point.E, point.t_cross), float(max_k)


def orbit_trace(
    point: SectionPoint,
    mu: float,
    n_steps: int,
    sample_every: int = 20,
    config: IntegratorConfig | None = None,
) -> np.ndarray:
    """Configuration-space trace from a section seed.

    Returns rows (t, x, y, px, py) sampled every `sample_every` steps of
    the regularized integration, mapped back to the rotating frame.
    """
    if config is None:
        config = default_config(mu)
    reg = to_regularized(section_lift(point, mu), point.E)
    y = reg.as_array()
    m = 1.0 - 2.0 * mu
    ems = point.E - s_constant(mu)
    rows = []
    for _ in range(n_steps // sample_every):
        _kernels.rk4_path(y, config.step, sample_every, m, ems)
        w = complex(y[0], y[1])
        z = np.cos(w) / 2.0
        sw = np.sin(w)
        pz = -2.0 * complex(y[2], -y[3]) / sw
        rows.append([y[4], z.real, z.imag, pz.real, -pz.imag])
    return np.array(rows)


def write_crossings_csv(path, points: list[SectionPoint], mu: float) -> None:
    """Export a crossing stream as CSV rows a, pa, E, mu, direction, t_cross."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["a", "pa", "E", "mu", "direction", "t_cross"])
        for p in points:
            writer.writerow(
                [
                    f"{p.a:.16e}",
                    f"{p.pa:.16e}",
                    f"{p.E:.16e}",
                    f"{mu:.16e}",
                    p.direction,
                    f"{p.t_cross:.16e}",
                ]
            )
