"""Fixed points, rotation numbers and actions of the section map.

The short-period periodic orbit appears as an elliptic fixed point of the
(same-direction) return map for E > 0; invariant curves around it carry a
rotation number W and an action I = (enclosed area)/(2 pi).  W for a curve
is computed from unwound polar angles about the fixed point, averaged with
a smooth bump weight; the weighting makes the estimate converge faster
than any power of 1/n on Diophantine curves, and a split-half comparison
provides the error estimate used to flag resonant or chaotic seeds.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import RotatingState, lagrange_point, validate_mu, vector_field_rotating
from .errors import (
    BranchPoint,
    CurveNotEncircling,
    DriftExceeded,
    ForbiddenRegion,
    HyperbolicFixedPoint,
    InsufficientIterates,
    L4TwistError,
    MaxStepsExceeded,
    NewtonDiverged,
    StepFailure,
)

#: failures that mean "this probe point is unusable", not "give up"
_BAD_PROBE = (ForbiddenRegion, BranchPoint, MaxStepsExceeded, DriftExceeded, StepFailure)
from .integrate import IntegratorConfig, default_config
from .section import SectionPoint, crossing_stream, poincare_return, section_project

__all__ = [
    "DEFAULT_DIRECTION",
    "FixedPointResult",
    "find_fixed_point",
    "fixed_point_rotation_number",
    "InvariantCurveSample",
    "sample_curve",
    "rotation_number_of_curve",
    "action_of_curve",
    "ProfilePoint",
    "rotation_profile",
    "island_radius",
    "find_periodic_orbit",
]

#: Crossing direction whose chart contains the stability island of the
#: short-period family in the windows used throughout (set empirically;
#: the opposite-direction chart holds the mirror island elsewhere).
DEFAULT_DIRECTION = -1

#: Escape window passed to the collector when iterating island curves.
ISLAND_WINDOW = (-0.5, 2.5, 1.5)


def _return_map(mu, E, direction, config):
    def pmap(x):
        pt = SectionPoint(x[0], x[1], E, direction, 0.0)
        r = poincare_return(pt, mu, config)
        return np.array([r.a, r.pa])

    return pmap


def _fd_jacobian(pmap, x, delta):
    for _ in range(6):
        try:
            j = np.empty((2, 2))
            for k in range(2):
                e = np.zeros(2)
                e[k] = delta
                j[:, k] = (pmap(x + e) - pmap(x - e)) / (2.0 * delta)
            return j
        except _BAD_PROBE:
            # probe fell outside the usable region; shrink the differencing step
            delta *= 0.3
    raise NewtonDiverged("could not difference the return map inside the Hill oval")


def _fd_delta(E: float) -> float:
    # differencing scale tied to the island size ~ sqrt(E)
    return min(1e-4, max(1e-6, 3e-3 * math.sqrt(max(E, 1e-12))))


@dataclass(frozen=True)
class FixedPointResult:
    """Converged fixed point of the return map with its linearization."""

    point: SectionPoint
    jacobian: np.ndarray
    residual: float
    multipliers: tuple[complex, complex]

    @property
    def elliptic(self) -> bool:
        return abs(self.jacobian[0, 0] + self.jacobian[1, 1]) < 2.0

    @property
    def rotation_number(self) -> float:
        """W0 = arg(lambda)/(2 pi) in (0, 1/2) from the elliptic multiplier."""
        if not self.elliptic:
            raise HyperbolicFixedPoint(
                f"|trace| = {abs(self.jacobian[0, 0] + self.jacobian[1, 1]):.6f} >= 2"
            )
        lam = max(self.multipliers, key=lambda z: z.imag)
        return math.atan2(lam.imag, lam.real) / (2.0 * math.pi)


def _newton_fixed_point(pmap, x0, delta, tol, max_iter):
    """Damped Newton on P(x) - x; returns the converged x."""
    x = np.array(x0, dtype=float)
    for _ in range(max_iter):
        fx = pmap(x) - x
        res = float(np.max(np.abs(fx)))
        if res < tol:
            return x
        jac = _fd_jacobian(pmap, x, delta)
        try:
            dx = np.linalg.solve(jac - np.eye(2), -fx)
        except np.linalg.LinAlgError as exc:
            raise NewtonDiverged("singular Newton system") from exc
        # damped update: Newton may overshoot the Hill oval at small E
        for _ in range(10):
            try:
                pmap(x + dx)
            except _BAD_PROBE:
                dx = 0.5 * dx
            else:
                break
        x = x + dx
    raise NewtonDiverged(f"fixed-point Newton stalled at residual {res:.3e}")


#: largest credible jump of the fixed point between continuation levels;
#: larger moves mean the solve hopped to a different periodic orbit
_CONTINUATION_JUMP = 0.25


def _linear_seed(mu: float, E: float, direction: int) -> np.ndarray:
    """Section image of the linearized short-period orbit at energy E.

    O(E)-accurate prediction of the fixed point, versus the O(sqrt(E))
    error of the bare equilibrium image; keeps small-energy Newton solves
    inside the island basin for every mass ratio of interest.
    """
    l4 = lagrange_point(mu)
    x0 = l4.as_array()
    eps = 1e-6
    A = np.empty((4, 4))
    for k in range(4):
        e = np.zeros(4)
        e[k] = eps
        A[:, k] = (
            vector_field_rotating(RotatingState.from_array(x0 + e), mu)
            - vector_field_rotating(RotatingState.from_array(x0 - e), mu)
        ) / (2.0 * eps)
    vals, vecs = np.linalg.eig(A)
    idx = int(np.argmax(vals.imag))  # +i omega_s, the faster mode
    v = vecs[:, idx]
    J4 = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])
    S = -J4 @ A
    re, im = v.real, v.imag

    def h2(xi):
        return 0.5 * float(xi @ S @ xi)

    # orbit xi(theta) = c*(Re v cos - Im v sin); H2 is constant along it
    e_unit = h2(re)
    c = math.sqrt(E / e_unit)
    g_row = np.array([math.sqrt(3.0), -1.0, 0.0, 0.0])
    ca = c * float(g_row @ re)
    cb = -c * float(g_row @ im)
    theta0 = math.atan2(-ca, cb)  # g(theta) = ca*cos + cb*sin = 0
    for theta in (theta0, theta0 + math.pi):
        xi = c * (re * math.cos(theta) - im * math.sin(theta))
        gdot = c * (-ca * math.sin(theta) + cb * math.cos(theta))
        if (gdot > 0.0) == (direction > 0):
            st = x0 + xi
            return np.array(
                [2.0 * st[0] + 1.0, 0.5 * st[2] + 0.5 * math.sqrt(3.0) * st[3]]
            )
    raise NewtonDiverged("no section crossing of the linearized orbit")


def find_fixed_point(
    mu: float,
    E: float,
    guess: SectionPoint | None = None,
    config: IntegratorConfig | None = None,
    direction: int = DEFAULT_DIRECTION,
    tol: float = 1e-10,
    max_iter: int = 30,
) -> FixedPointResult:
    """Newton solve for the short-period fixed point of the return map.

    Without an explicit guess the solve continues in energy from the
    equilibrium image (a, p_a) = (1, -sqrt(3) mu / 2), where the family
    terminates as E -> 0; the energy step is refined adaptively whenever
    Newton diverges or lands implausibly far from the previous point.

    Raises
    ------
    NewtonDiverged
        If the continuation cannot reach the requested energy.
    """
    validate_mu(mu, elliptic=True)
    if config is None:
        config = default_config(mu)
    E = float(E)
    if guess is not None:
        pmap = _return_map(mu, E, direction, config)
        x = _newton_fixed_point(
            pmap, np.array([guess.a, guess.pa]), _fd_delta(E), tol, max_iter
        )
    else:
        e_now = min(E, 1e-3)
        x = _linear_seed(mu, e_now, direction)
        pmap = _return_map(mu, e_now, direction, config)
        x = _newton_fixed_point(pmap, x, _fd_delta(e_now), tol, max_iter)
        while e_now < E:
            e_try = min(2.5 * e_now, E)
            while True:
                pmap = _return_map(mu, e_try, direction, config)
                try:
                    x_new = _newton_fixed_point(pmap, x, _fd_delta(e_try), tol, max_iter)
                    if float(np.max(np.abs(x_new - x))) > _CONTINUATION_JUMP:
                        raise NewtonDiverged("continuation jumped basins")
                    break
                except NewtonDiverged:
                    e_refined = math.sqrt(e_now * e_try)
                    if e_refined / e_now < 1.0 + 1e-4:
                        raise
                    e_try = e_refined
            x, e_now = x_new, e_try
        pmap = _return_map(mu, E, direction, config)
    res = float(np.max(np.abs(pmap(x) - x)))
    jac = _fd_jacobian(pmap, x, _fd_delta(E))
    mults = np.linalg.eigvals(jac)
    return FixedPointResult(
        SectionPoint(float(x[0]), float(x[1]), float(E), direction, 0.0),
        jac,
        res,
        (complex(mults[0]), complex(mults[1])),
    )


def fixed_point_rotation_number(
    mu: float,
    E: float,
    guess: SectionPoint | None = None,
    config: IntegratorConfig | None = None,
    direction: int = DEFAULT_DIRECTION,
) -> float:
    """Rotation number of the elliptic fixed point from its multipliers."""
    return find_fixed_point(mu, E, guess, config, direction).rotation_number


def return_map_jacobian(
    point: SectionPoint,
    mu: float,
    config: IntegratorConfig | None = None,
    delta: float = 2e-4,
) -> np.ndarray:
    """High-accuracy return-map Jacobian (5-point central differences).

    Used where area preservation is checked to 1e-6; the plain 2-point
    stencil of the Newton solves carries O(delta^2) truncation that the
    determinant test would see.
    """
    if config is None:
        config = default_config(mu)
    pmap = _return_map(mu, point.E, point.direction, config)
    x = np.array([point.a, point.pa])
    j = np.empty((2, 2))
    for k in range(2):
        e = np.zeros(2)
        e[k] = delta
        j[:, k] = (
            -pmap(x + 2.0 * e) + 8.0 * pmap(x + e) - 8.0 * pmap(x - e) + pmap(x - 2.0 * e)
        ) / (12.0 * delta)
    return j


@dataclass(frozen=True)
class InvariantCurveSample:
    """Ordered crossings of one section orbit around a center point."""

    seed: SectionPoint
    center: SectionPoint
    a: np.ndarray
    pa: np.ndarray
    t: np.ndarray

    @property
    def n(self) -> int:
        return len(self.a)


def sample_curve(
    seed: SectionPoint,
    mu: float,
    n: int,
    center: SectionPoint,
    config: IntegratorConfig | None = None,
    window=ISLAND_WINDOW,
) -> InvariantCurveSample:
    """Collect n same-direction crossings of the orbit through `seed`."""
    pts = crossing_stream(seed, mu, n, config, window=window)
    return InvariantCurveSample(
        seed,
        center,
        np.array([p.a for p in pts]),
        np.array([p.pa for p in pts]),
        np.array([p.t_cross for p in pts]),
    )


def _angles(sample: InvariantCurveSample) -> np.ndarray:
    """Polar angles about the center, axes rescaled by the curve's extent."""
    da = sample.a - sample.center.a
    dp = sample.pa - sample.center.pa
    sa = 0.5 * (np.max(sample.a) - np.min(sample.a))
    sp = 0.5 * (np.max(sample.pa) - np.min(sample.pa))
    if sa <= 0.0 or sp <= 0.0:
        raise CurveNotEncircling("degenerate curve extent")
    return np.arctan2(dp / sp, da / sa)


def _increments(sample: InvariantCurveSample) -> np.ndarray:
    """Angle increments folded to [0, 2 pi), oriented along the winding.

    Raises CurveNotEncircling when the principal-value increments are not
    sign-definite (the iterates do not wind around the center).
    """
    theta = _angles(sample)
    d = np.diff(theta)
    d = np.mod(d + np.pi, 2.0 * np.pi) - np.pi  # principal value
    sign = 1.0 if np.median(d) >= 0.0 else -1.0
    d = sign * d
    if np.any(d <= 0.0):
        raise CurveNotEncircling(
            f"{int(np.sum(d <= 0.0))}/{len(d)} angle increments oppose the winding"
        )
    return d


def _bump_weights(n: int) -> np.ndarray:
    x = (np.arange(1, n + 1)) / (n + 1.0)
    return np.exp(-1.0 / (x * (1.0 - x)))


def _weighted_rotation(increments: np.ndarray) -> float:
    w = _bump_weights(len(increments))
    frac = float(np.sum(w * increments) / np.sum(w)) / (2.0 * math.pi)
    return min(frac, 1.0 - frac)


@dataclass(frozen=True)
class RotationEstimate:
    W: float
    error: float


def rotation_number_of_curve(
    sample: InvariantCurveSample, min_crossings: int = 1000
) -> RotationEstimate:
    """Weighted-average rotation number of an invariant curve, with error estimate.

    The estimate is the bump-weighted mean of the unwound angle increments
    about the center, reduced to (0, 1/2); the error is a split-half
    comparison (first versus second half of the orbit).

    Raises
    ------
    InsufficientIterates
        With fewer than `min_crossings` crossings.
    CurveNotEncircling
        When the crossings do not wind monotonically about the center.
    """
    if sample.n < min_crossings:
        raise InsufficientIterates(f"{sample.n} < {min_crossings} crossings")
    d = _increments(sample)
    half = len(d) // 2
    w_full = _weighted_rotation(d)
    w_first = _weighted_rotation(d[:half])
    w_second = _weighted_rotation(d[half:])
    err = max(abs(w_full - w_first), abs(w_full - w_second))
    return RotationEstimate(w_full, err)


def action_of_curve(sample: InvariantCurveSample, min_crossings: int = 100) -> float:
    """Enclosed area of the curve divided by 2 pi (shoelace on angle-sorted crossings)."""
    if sample.n < min_crossings:
        raise InsufficientIterates(f"{sample.n} < {min_crossings} crossings")
    _increments(sample)  # encircling check
    theta = np.mod(_angles(sample), 2.0 * math.pi)
    order = np.argsort(theta)
    x = sample.a[order]
    y = sample.pa[order]
    area = 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))
    return area / (2.0 * math.pi)


@dataclass(frozen=True)
class ProfilePoint:
    """One seed of a rotation profile; `flag` is 'ok', 'resonant' or 'failed:<error>'."""

    index: int
    seed: SectionPoint
    I: float
    W: float
    error: float
    flag: str


#: split-half error beyond which a seed is flagged resonant/chaotic
RESONANT_ERROR_TOL = 1e-4


def _profile_one(args):
    index, seed, mu, n, center, config = args
    try:
        sample = sample_curve(seed, mu, n, center, config)
        action = action_of_curve(sample)
        est = rotation_number_of_curve(sample, min_crossings=min(n, 1000))
    except CurveNotEncircling:
        return ProfilePoint(index, seed, math.nan, math.nan, math.nan, "resonant")
    except L4TwistError as exc:
        return ProfilePoint(
            index, seed, math.nan, math.nan, math.nan, f"failed:{type(exc).__name__}"
        )
    flag = "ok" if est.error <= RESONANT_ERROR_TOL else "resonant"
    return ProfilePoint(index, seed, action, est.W, est.error, flag)


def rotation_profile(
    mu: float,
    E: float,
    seeds: list[SectionPoint] | None = None,
    n_crossings: int = 1024,
    center: SectionPoint | None = None,
    config: IntegratorConfig | None = None,
    workers: int = 4,
    n_seeds: int = 24,
    radial_range: tuple[float, float] = (0.08, 0.95),
) -> list[ProfilePoint]:
    """Per-seed (action, rotation number) profile along a ray in the island.

    Without explicit seeds, the ray runs from the fixed point toward +a,
    with `n_seeds` seeds at fractions `radial_range` of the island radius.
    Seeds are processed in parallel; output order is by seed index.
    """
    if config is None:
        config = default_config(mu)
    if center is None:
        center = find_fixed_point(mu, E, config=config).point
    if seeds is None:
        radius = island_radius(mu, E, center, config=config)
        fracs = np.linspace(radial_range[0], radial_range[1], n_seeds)
        seeds = [replace(center, a=center.a + f * radius) for f in fracs]
    tasks = [(i, s, mu, n_crossings, center, config) for i, s in enumerate(seeds)]
    if workers <= 1:
        return [_profile_one(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_profile_one, tasks))


def island_radius(
    mu: float,
    E: float,
    center: SectionPoint | None = None,
    config: IntegratorConfig | None = None,
    direction_probe: int = 48,
    r0: float = 5e-3,
) -> float:
    """Half-width of the island along +a from the fixed point.

    Grows the probe radius geometrically until an orbit stops encircling
    (or escapes), then bisects the boundary.  A coarse estimate is enough:
    it only anchors seed placement.
    """
    if config is None:
        config = default_config(mu)
    if center is None:
        center = find_fixed_point(mu, E, config=config).point

    def encircles(r: float) -> bool:
        seed = replace(center, a=center.a + r)
        try:
            sample = sample_curve(seed, mu, direction_probe, center, config)
            _increments(sample)
        except L4TwistError:
            return False
        return True

    r_good = None
    r = r0
    for _ in range(40):
        if not encircles(r):
            break
        r_good = r
        r *= 1.3
    else:
        return r_good
    if r_good is None:
        raise CurveNotEncircling(f"no encircling orbit found near radius {r0}")
    r_bad = r
    for _ in range(6):
        mid = 0.5 * (r_good + r_bad)
        if encircles(mid):
            r_good = mid
        else:
            r_bad = mid
    return r_good


def find_periodic_orbit(
    mu: float,
    E: float,
    q: int,
    seed: SectionPoint,
    config: IntegratorConfig | None = None,
    tol: float = 1e-9,
    max_iter: int = 25,
) -> SectionPoint:
    """Newton solve for a period-q point of the return map near `seed`.

    Raises
    ------
    NewtonDiverged
        If the iteration stalls or leaves the island.
    """
    if config is None:
        config = default_config(mu)

    def pq(x):
        pt = SectionPoint(x[0], x[1], E, seed.direction, 0.0)
        for _ in range(q):
            pt = poincare_return(pt, mu, config)
        return np.array([pt.a, pt.pa])

    x = np.array([seed.a, seed.pa])
    delta = _fd_delta(E) / max(1.0, 0.5 * q)
    for _ in range(max_iter):
        fx = pq(x) - x
        res = float(np.max(np.abs(fx)))
        if res < tol:
            return SectionPoint(float(x[0]), float(x[1]), float(E), seed.direction, 0.0)
        jac = _fd_jacobian(pq, x, delta)
        try:
            dx = np.linalg.solve(jac - np.eye(2), -fx)
        except np.linalg.LinAlgError as exc:
            raise NewtonDiverged("singular Newton system for periodic point") from exc
        # DP^q - I is nearly singular next to the chain; clamp the step to
        # the island-chain scale instead of letting Newton fly off
        step = float(np.max(np.abs(dx)))
        if step > 5e-3:
            dx *= 5e-3 / step
        x = x + dx
    raise NewtonDiverged(f"period-{q} Newton stalled at residual {res:.3e}")
