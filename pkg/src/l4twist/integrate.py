"""Fixed-step RK4 propagation with drift accounting.

The production path integrates the regularized field in fictitious time
through compiled kernels; a generic pure-Python `rk4_step` is exposed for
arbitrary fields (and is what the convergence tests exercise).  Step size
is fixed for reproducibility of crossing sequences; a step-doubling local
error estimate is available as a diagnostic, not as step control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .dynamics import RegularizedState, frequencies, s_constant, validate_mu
from .errors import DriftExceeded, MaxStepsExceeded, StepFailure

__all__ = [
    "IntegratorConfig",
    "default_config",
    "rk4_step",
    "step_doubling_error",
    "PropagationResult",
    "propagate",
]

#: Step at which the drift contract (|K| < 1e-9 over 1e4 crossings) is calibrated.
DEFAULT_STEP = 1e-3
DEFAULT_DRIFT_TOL = 1e-9
DEFAULT_MAX_STEPS = 200_000_000
#: Required resolution of the fastest linear oscillation, steps per period.
MIN_STEPS_PER_PERIOD = 200


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration budget and drift tolerance."""

    step: float = DEFAULT_STEP
    max_steps: int = DEFAULT_MAX_STEPS
    drift_tolerance: float = DEFAULT_DRIFT_TOL

    def __post_init__(self):
        if not (self.step > 0 and self.max_steps > 0 and self.drift_tolerance > 0):
            raise ValueError("step, max_steps and drift_tolerance must be positive")


def default_config(mu: float) -> IntegratorConfig:
    """Default configuration for a given mass ratio.

    The default step must resolve the shortest linear period 2*pi/omega_s
    by at least MIN_STEPS_PER_PERIOD steps; for the mass ratios of
    interest the drift-calibrated DEFAULT_STEP is far below that bound.
    """
    period = 2.0 * math.pi / frequencies(mu).omega_s
    step = min(DEFAULT_STEP, period / MIN_STEPS_PER_PERIOD)
    return IntegratorConfig(step=step)


def rk4_step(state: np.ndarray, field: Callable[[np.ndarray], np.ndarray], h: float) -> np.ndarray:
    """One classical 4-stage Runge-Kutta step for an arbitrary field.

    Parameters
    ----------
    state : array
        Current state.
    field : callable
        Maps a state array to its derivative.
    h : float
        Step size.

    Raises
    ------
    StepFailure
        If any stage evaluates to a non-finite value.
    """
    y = np.asarray(state, dtype=float)
    k1 = np.asarray(field(y))
    k2 = np.asarray(field(y + 0.5 * h * k1))
    k3 = np.asarray(field(y + 0.5 * h * k2))
    k4 = np.asarray(field(y + h * k3))
    out = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise StepFailure("non-finite Runge-Kutta stage")
    return out


def step_doubling_error(state: np.ndarray, field, h: float) -> float:
    """Local error estimate: one h step versus two h/2 steps (max-norm)."""
    full = rk4_step(state, field, h)
    half = rk4_step(rk4_step(state, field, 0.5 * h), field, 0.5 * h)
    return float(np.max(np.abs(full - half)))


@dataclass(frozen=True)
class PropagationResult:
    """Terminus and diagnostics of a regularized propagation."""

    state: RegularizedState
    steps: int
    max_abs_k: float
    stopped: bool  # True if the stop predicate fired (else returned by budget)


def propagate(
    reg: RegularizedState,
    mu: float,
    config: IntegratorConfig | None = None,
    stop: Callable[[RegularizedState], bool] | None = None,
) -> PropagationResult:
    """Integrate the regularized field in fictitious time until `stop` fires.

    Physical time accumulates in the state's ``t`` component.  The run
    aborts loudly if |K| exceeds the drift tolerance or the step budget
    runs out before the predicate fires.

    Raises
    ------
    DriftExceeded, MaxStepsExceeded, StepFailure
    """
    validate_mu(mu)
    if config is None:
        config = default_config(mu)
    m = 1.0 - 2.0 * mu
    ems = reg.E - s_constant(mu)
    y = reg.as_array()
    max_k = abs(_kernels.k_value(y, m, ems))
    if stop is not None and stop(reg):
        return PropagationResult(reg, 0, max_k, True)
    for n in range(1, config.max_steps + 1):
        _kernels.rk4_step(y, config.step, m, ems)
        if not np.all(np.isfinite(y)):
            raise StepFailure(f"non-finite state after {n} steps")
        ak = abs(_kernels.k_value(y, m, ems))
        if ak > max_k:
            max_k = ak
        if max_k > config.drift_tolerance:
            raise DriftExceeded(
                f"|K| = {max_k:.3e} exceeded {config.drift_tolerance:.1e} after {n} steps"
            )
        if stop is not None:
            current = RegularizedState.from_array(y, reg.E)
            if stop(current):
                return PropagationResult(current, n, max_k, True)
    if stop is None:
        return PropagationResult(RegularizedState.from_array(y, reg.E), config.max_steps, max_k, False)
    raise MaxStepsExceeded(f"no stop within {config.max_steps} steps")


def propagate_steps(
    reg: RegularizedState, mu: float, n_steps: int, step: float = DEFAULT_STEP
) -> tuple[RegularizedState, float]:
    """Advance exactly n_steps fixed steps (compiled path); returns (state, max |K|)."""
    validate_mu(mu)
    y = reg.as_array()
    max_k = _kernels.rk4_path(y, step, n_steps, 1.0 - 2.0 * mu, reg.E - s_constant(mu))
    return RegularizedState.from_array(y, reg.E), float(max_k)
