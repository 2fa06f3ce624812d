"""Action-space twist analysis: twistless curves, charts and reconnection loci.

Works on the degree-truncated normal form, which is integrable: energy
levels and rotation-number levels are families of curves in the action
quadrant, and the twistless locus C = 0 is exactly where the two families
are tangent.  Crossing of the twistless curve through a rational rotation
number at some energy marks a reconnection bifurcation; the corresponding
(mu, E) loci are computed both from the normal form (fast, analytic) and
from the section numerics (slow, independent).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    L4TwistError,
    NoPositiveRoot,
    NoSignChange,
    NoSolution,
    NoTwistlessCurve,
    ResonanceTooClose,
)
from .normalform import (
    NormalForm,
    nf_rotation_number,
    nf_twist,
    normal_form,
    short_period_W_of_E,
)

__all__ = [
    "critical_mass_ratio",
    "TwistCurve",
    "twistless_curve",
    "EnergyLineScan",
    "energy_line_scan",
    "ChartDataset",
    "action_action_chart",
    "farey_levels",
    "ReconnectionLocus",
    "reconnection_locus_nf",
    "reconnection_mu_at_energy_nf",
    "reconnection_search_numeric",
]

#: energy cap of the trusted normal-form region (slightly beyond E <= 0.1)
DEFAULT_ENERGY_CAP = 0.12


def critical_mass_ratio(
    bracket: tuple[float, float] = (0.0095, 0.0125),
    tol: float = 1e-7,
    order: int = 4,
) -> float:
    """Mass ratio where the twist at the equilibrium vanishes, by bisection.

    The twist at the origin depends only on the quartic normal form, so
    order 4 suffices (higher orders give the same root to roundoff).

    Raises
    ------
    NoSignChange
        If C(0, 0; mu) has equal signs at the bracket ends.
    """

    def c00(mu: float) -> float:
        return nf_twist(normal_form(mu, order).normal_form, 0.0, 0.0)

    lo, hi = bracket
    f_lo, f_hi = c00(lo), c00(hi)
    if f_lo * f_hi > 0.0:
        raise NoSignChange(f"C(0,0) has the same sign at {lo} and {hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = c00(mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0.0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# implicit-curve tracing in the action quadrant


def _newton_on_curve(f, grad, x, tangent=None, tol=1e-11, max_iter=30):
    """Project x onto {f = 0}, optionally constrained to a hyperplane."""
    x = np.array(x, dtype=float)
    for _ in range(max_iter):
        fx = f(x)
        g = np.asarray(grad(x))
        if tangent is None:
            if abs(fx) < tol:
                return x
            x = x - fx * g / float(g @ g)
        else:
            r = np.array([fx, 0.0])
            if abs(fx) < tol:
                return x
            jac = np.array([g, tangent])
            try:
                x = x - np.linalg.solve(jac, r)
            except np.linalg.LinAlgError:
                return None
    return None


def _trace_implicit(f, grad, seed, box, step, max_vertices=4000):
    """Pseudo-arclength trace of {f = 0} through `seed`, clipped to `box`.

    Returns an (n, 2) polyline.  Both directions from the seed are
    followed; closed curves stop on returning near the start.
    """
    x0 = _newton_on_curve(f, grad, seed)
    if x0 is None:
        return None

    def inside(x):
        return box[0] <= x[0] <= box[1] and box[2] <= x[1] <= box[3]

    if not inside(x0):
        return None
    halves = []
    for orientation in (+1.0, -1.0):
        pts = []
        x = x0.copy()
        t_prev = None
        for _ in range(max_vertices // 2):
            g = np.asarray(grad(x))
            norm = float(np.hypot(g[0], g[1]))
            if norm < 1e-14:
                break
            t = np.array([-g[1], g[0]]) / norm
            if t_prev is None:
                t = orientation * t
            elif float(t @ t_prev) < 0.0:
                t = -t
            x_pred = x + step * t
            x_new = _newton_on_curve(f, grad, x_pred, tangent=t)
            if x_new is None or not inside(x_new):
                break
            closed = (
                len(pts) > 3
                and float(np.hypot(*(x_new - x0))) < 0.6 * step
            )
            pts.append(x_new)
            x = x_new
            t_prev = t
            if closed:
                break
        halves.append(pts)
    back = halves[1][::-1]
    return np.array(back + [x0] + halves[0])


def _scan_segment(f, a, b, n):
    """Sign changes of f on the segment a-b; returns refined root points."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ts = np.linspace(0.0, 1.0, n)
    vals = [f(a + t * (b - a)) for t in ts]
    roots = []
    for i in range(n - 1):
        if vals[i] == 0.0 or vals[i] * vals[i + 1] < 0.0:
            lo, hi = ts[i], ts[i + 1]
            flo = vals[i]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                fm = f(a + mid * (b - a))
                if flo * fm <= 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            roots.append(a + 0.5 * (lo + hi) * (b - a))
    return roots


def _action_box(nf: NormalForm, energy_cap: float) -> tuple[float, float, float, float]:
    """Quadrant box [0, Is_max] x [0, Il_max] bounded by |H| <= energy_cap."""

    def is_cap() -> float:
        x = energy_cap / nf.omega_s
        for _ in range(200):
            val = nf.value(x, 0.0) - energy_cap
            if abs(val) < 1e-14:
                break
            d = nf.partial(1, 0, x, 0.0)
            if d <= 0.0 or x <= 0.0:
                return x if x > 0 else energy_cap / nf.omega_s
            x -= val / d
        return x

    def il_cap() -> float:
        x = energy_cap / nf.omega_l
        for _ in range(200):
            val = nf.value(0.0, x) + energy_cap
            if abs(val) < 1e-14:
                break
            d = nf.partial(0, 1, 0.0, x)
            if d >= 0.0 or x <= 0.0:
                return x if x > 0 else energy_cap / nf.omega_l
            x -= val / d
        return x

    return (0.0, is_cap(), 0.0, il_cap())


@dataclass(frozen=True)
class TwistCurve:
    """Polyline(s) of vanishing twist in the action quadrant at one mass ratio."""

    mu: float
    segments: tuple[np.ndarray, ...]  # each (n, 2) of (I_s, I_l)
    W: tuple[np.ndarray, ...]
    H: tuple[np.ndarray, ...]

    @property
    def n_vertices(self) -> int:
        return sum(len(s) for s in self.segments)

    def min_action_norm(self) -> float:
        """Distance of the closest vertex to the origin (a near-origin segment marker)."""
        return min(float(np.min(np.hypot(s[:, 0], s[:, 1]))) for s in self.segments)


def twistless_curve(
    mu_or_nf,
    energy_cap: float = DEFAULT_ENERGY_CAP,
    order: int = 8,
    step: float | None = None,
    n_scan: int = 160,
) -> TwistCurve:
    """Trace the twistless locus C(I_s, I_l) = 0 inside the trusted action box.

    Seeds come from sign scans along rays from the origin; each seed not
    already covered spawns a pseudo-arclength trace.  Along the returned
    vertices the energy and rotation-number level sets are tangent.

    Raises
    ------
    NoTwistlessCurve
        If the twist has no zero inside the box.
    """
    nf = mu_or_nf if isinstance(mu_or_nf, NormalForm) else normal_form(
        float(mu_or_nf), order
    ).normal_form

    def f(x):
        return nf_twist(nf, x[0], x[1])

    def grad(x):
        return np.array(
            [
                _twist_partial(nf, x[0], x[1], 1, 0),
                _twist_partial(nf, x[0], x[1], 0, 1),
            ]
        )

    box = _action_box(nf, energy_cap)
    if step is None:
        step = 0.004 * max(box[1], box[3])
    origin = np.array([1e-9, 1e-9])
    seeds = []
    n_rays = 24
    for k in range(n_rays + 1):
        ang = 0.5 * math.pi * k / n_rays
        end = np.array(
            [box[1] * math.cos(ang), box[3] * math.sin(ang)]
        )
        seeds.extend(_scan_segment(f, origin, end, n_scan))
    segments = []
    for seed in seeds:
        covered = False
        for seg in segments:
            if np.min(np.hypot(seg[:, 0] - seed[0], seg[:, 1] - seed[1])) < 2.0 * step:
                covered = True
                break
        if covered:
            continue
        poly = _trace_implicit(f, grad, seed, box, step)
        if poly is not None and len(poly) >= 3:
            segments.append(poly)
    if not segments:
        raise NoTwistlessCurve(
            f"C has no zeros in the action box at mu = {nf.mu:.6f}"
        )
    w_vals = tuple(
        np.array([nf_rotation_number(nf, p[0], p[1]) for p in seg]) for seg in segments
    )
    h_vals = tuple(
        np.array([nf.value(p[0], p[1]) for p in seg]) for seg in segments
    )
    return TwistCurve(nf.mu, tuple(segments), w_vals, h_vals)


def _twist_partial(nf: NormalForm, i_s: float, i_l: float, ds: int, dl: int) -> float:
    """Analytic partial of the twist condition (product rule over H partials)."""
    h1 = nf.partial(1 + ds, 0 + dl, i_s, i_l)
    h2 = nf.partial(0 + ds, 1 + dl, i_s, i_l)
    H1 = nf.partial(1, 0, i_s, i_l)
    H2 = nf.partial(0, 1, i_s, i_l)
    H11 = nf.partial(2, 0, i_s, i_l)
    H12 = nf.partial(1, 1, i_s, i_l)
    H22 = nf.partial(0, 2, i_s, i_l)
    h11 = nf.partial(2 + ds, 0 + dl, i_s, i_l)
    h12 = nf.partial(1 + ds, 1 + dl, i_s, i_l)
    h22 = nf.partial(0 + ds, 2 + dl, i_s, i_l)
    return (
        h11 * H2 * H2
        + 2.0 * H11 * H2 * h2
        + h22 * H1 * H1
        + 2.0 * H22 * H1 * h1
        - 2.0 * (h12 * H1 * H2 + H12 * h1 * H2 + H12 * H1 * h2)
    )


# ---------------------------------------------------------------------------
# energy-line scans (fixed E slice of the action quadrant)


@dataclass(frozen=True)
class EnergyLineScan:
    """Samples along the H = E line, parametrized by I_l from the short-period end."""

    mu: float
    E: float
    i_l: np.ndarray
    i_s: np.ndarray
    W: np.ndarray
    C: np.ndarray

    def rational_crossings(self, p_over_q: float) -> list[float]:
        """I_l values where W crosses the given level."""
        return _sign_change_positions(self.i_l, self.W - p_over_q)

    def twistless_points(self) -> list[float]:
        """I_l values where the twist vanishes on this energy line."""
        return _sign_change_positions(self.i_l, self.C)


def _sign_change_positions(x: np.ndarray, v: np.ndarray) -> list[float]:
    roots = []
    for i in range(len(v) - 1):
        if v[i] == 0.0:
            roots.append(float(x[i]))
        elif v[i] * v[i + 1] < 0.0:
            t = v[i] / (v[i] - v[i + 1])
            roots.append(float(x[i] + t * (x[i + 1] - x[i])))
    return roots


def energy_line_scan(
    nf: NormalForm,
    E: float,
    w_window: tuple[float, float] = (0.25, 1.0 / 3.0),
    n_points: int = 600,
    energy_cap: float = DEFAULT_ENERGY_CAP,
) -> EnergyLineScan:
    """March along H(I_s, I_l) = E from I_l = 0, recording W and C.

    The scan stops when the rotation number leaves `w_window` (the island
    terminates on the bounding resonances) or the actions leave the
    trusted box.

    Raises
    ------
    NoPositiveRoot
        If the line does not enter the quadrant at this energy.
    """
    box = _action_box(nf, energy_cap)
    il_max = box[3]
    di = il_max / n_points
    i_l_list, i_s_list, w_list, c_list = [], [], [], []
    # starting point on the Is axis
    i_s = _solve_is_on_line(nf, E, 0.0, E / nf.omega_s)
    i_l = 0.0
    lo, hi = min(w_window), max(w_window)
    for _ in range(n_points):
        w = nf_rotation_number(nf, i_s, i_l)
        if not (lo - 1e-9 <= w <= hi + 1e-9):
            break
        if i_s > box[1]:
            break
        i_l_list.append(i_l)
        i_s_list.append(i_s)
        w_list.append(w)
        c_list.append(nf_twist(nf, i_s, i_l))
        i_l += di
        try:
            i_s = _solve_is_on_line(nf, E, i_l, i_s)
        except NoPositiveRoot:
            break
    if not i_l_list:
        raise NoPositiveRoot(f"energy line E = {E} does not enter the window")
    return EnergyLineScan(
        nf.mu,
        E,
        np.array(i_l_list),
        np.array(i_s_list),
        np.array(w_list),
        np.array(c_list),
    )


def _solve_is_on_line(nf: NormalForm, E: float, i_l: float, guess: float) -> float:
    """Newton for I_s >= 0 with H(I_s, i_l) = E, seeded by the neighbour point."""
    x = max(guess, 0.0)
    for _ in range(100):
        val = nf.value(x, i_l) - E
        if abs(val) < 1e-15:
            return max(x, 0.0)
        d = nf.partial(1, 0, x, i_l)
        if d <= 0.0:
            raise NoPositiveRoot("dH/dI_s lost positivity on the energy line")
        x_new = x - val / d
        if x_new < 0.0:
            x_new = 0.5 * x
        if abs(x_new - x) < 1e-16 + 1e-13 * abs(x):
            return max(x_new, 0.0)
        x = x_new
    raise NoPositiveRoot("energy-line Newton stalled")


# ---------------------------------------------------------------------------
# Farey levels and the action-action chart


def farey_levels(depth: int = 3) -> list[Fraction]:
    """Mediants between 1/4 and 1/3 down to the given depth, endpoints included."""
    levels = [Fraction(1, 4), Fraction(1, 3)]
    frontier = [(Fraction(1, 4), Fraction(1, 3))]
    for _ in range(depth):
        new_frontier = []
        for a, b in frontier:
            med = Fraction(a.numerator + b.numerator, a.denominator + b.denominator)
            levels.append(med)
            new_frontier.append((a, med))
            new_frontier.append((med, b))
        frontier = new_frontier
    return sorted(set(levels))


@dataclass(frozen=True)
class ChartDataset:
    """Fig.-7-style dataset: value grid plus iso-line polylines."""

    mu: float
    i_s: np.ndarray  # 1-d axis
    i_l: np.ndarray  # 1-d axis
    H: np.ndarray  # (len(i_s), len(i_l))
    W: np.ndarray
    C: np.ndarray
    curves: tuple[dict, ...]  # {"kind": "H"|"W"|"C0", "level": float, "points": ndarray}


def action_action_chart(
    mu_or_nf,
    n_grid: int = 80,
    energy_cap: float = DEFAULT_ENERGY_CAP,
    de: float = 0.01,
    farey_depth: int = 3,
    order: int = 8,
) -> ChartDataset:
    """Grid of (H, W, C) over the action box with iso-lines as polylines.

    Energy iso-lines are spaced `de` apart starting at E = 0; rotation
    iso-lines sit at the Farey mediants between 1/4 and 1/3; the twistless
    polyline is included when present.
    """
    nf = mu_or_nf if isinstance(mu_or_nf, NormalForm) else normal_form(
        float(mu_or_nf), order
    ).normal_form
    box = _action_box(nf, energy_cap)
    i_s = np.linspace(0.0, box[1], n_grid)
    i_l = np.linspace(0.0, box[3], n_grid)
    H = np.empty((n_grid, n_grid))
    W = np.empty((n_grid, n_grid))
    C = np.empty((n_grid, n_grid))
    for i, a in enumerate(i_s):
        for j, b in enumerate(i_l):
            H[i, j] = nf.value(a, b)
            W[i, j] = nf_rotation_number(nf, a, b)
            C[i, j] = nf_twist(nf, a, b)
    curves = []
    step = 0.004 * max(box[1], box[3])

    def trace_level(func, grad, level, kind):
        def fl(x):
            return func(x) - level

        corners = [
            (np.array([box[0], box[2]]), np.array([box[1], box[2]])),
            (np.array([box[1], box[2]]), np.array([box[1], box[3]])),
            (np.array([box[1], box[3]]), np.array([box[0], box[3]])),
            (np.array([box[0], box[3]]), np.array([box[0], box[2]])),
        ]
        found = []
        for a, b in corners:
            found.extend(_scan_segment(fl, a, b, 200))
        for seed in found:
            dup = False
            for c in curves:
                if c["kind"] != kind or c["level"] != level:
                    continue
                pts = c["points"]
                if np.min(np.hypot(pts[:, 0] - seed[0], pts[:, 1] - seed[1])) < 2 * step:
                    dup = True
                    break
            if dup:
                continue
            poly = _trace_implicit(fl, grad, seed, box, step)
            if poly is not None and len(poly) >= 3:
                curves.append({"kind": kind, "level": float(level), "points": poly})

    def grad_h(x):
        return np.array([nf.partial(1, 0, x[0], x[1]), nf.partial(0, 1, x[0], x[1])])

    def grad_w(x):
        return _rotation_gradient(nf, x[0], x[1])

    e_level = de
    while e_level <= nf.value(box[1], 0.0):
        trace_level(lambda x: nf.value(x[0], x[1]), grad_h, e_level, "H")
        e_level += de
    for frac in farey_levels(farey_depth):
        trace_level(
            lambda x: nf_rotation_number(nf, x[0], x[1]), grad_w, float(frac), "W"
        )
    try:
        tc = twistless_curve(nf, energy_cap)
        for seg, w_seg, h_seg in zip(tc.segments, tc.W, tc.H):
            curves.append({"kind": "C0", "level": 0.0, "points": seg})
    except NoTwistlessCurve:
        pass
    return ChartDataset(nf.mu, i_s, i_l, H, W, C, tuple(curves))


def _rotation_gradient(nf: NormalForm, i_s: float, i_l: float) -> np.ndarray:
    h1 = nf.partial(1, 0, i_s, i_l)
    h2 = nf.partial(0, 1, i_s, i_l)
    h11 = nf.partial(2, 0, i_s, i_l)
    h12 = nf.partial(1, 1, i_s, i_l)
    h22 = nf.partial(0, 2, i_s, i_l)
    return np.array(
        [
            -(h12 * h1 - h2 * h11) / (h1 * h1),
            -(h22 * h1 - h2 * h12) / (h1 * h1),
        ]
    )


# ---------------------------------------------------------------------------
# reconnection loci


@dataclass(frozen=True)
class ReconnectionLocus:
    """(mu, E) pairs where the twistless torus carries the given rotation number."""

    rational: Fraction
    method: str  # "normal_form" or "numeric"
    points: tuple[tuple[float, float], ...]  # (mu, E)
    failures: tuple[tuple[float, str], ...] = ()

    def as_json_dict(self) -> dict:
        return {
            "rational": f"{self.rational.numerator}/{self.rational.denominator}",
            "method": self.method,
            "points": [[mu, e] for mu, e in self.points],
            "failures": [[mu, reason] for mu, reason in self.failures],
        }


def _reconnection_point_nf(
    nf: NormalForm, p_over_q: float, energy_cap: float
) -> tuple[float, float]:
    """Actions with C = 0 and W = p/q by a 2-D Newton seeded from the twistless curve."""
    tc = twistless_curve(nf, energy_cap)
    best = None
    best_gap = math.inf
    for seg, w_seg in zip(tc.segments, tc.W):
        k = int(np.argmin(np.abs(w_seg - p_over_q)))
        gap = abs(w_seg[k] - p_over_q)
        if gap < best_gap:
            best_gap = gap
            best = seg[k]
    x = np.array(best, dtype=float)
    for _ in range(60):
        r = np.array(
            [nf_twist(nf, x[0], x[1]), nf_rotation_number(nf, x[0], x[1]) - p_over_q]
        )
        if abs(r[0]) < 1e-9 and abs(r[1]) < 1e-12:
            break
        jac = np.vstack(
            [
                [
                    _twist_partial(nf, x[0], x[1], 1, 0),
                    _twist_partial(nf, x[0], x[1], 0, 1),
                ],
                _rotation_gradient(nf, x[0], x[1]),
            ]
        )
        try:
            dx = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise NoSolution("singular reconnection system") from exc
        x = x + dx
        if x[0] < -1e-6 or x[1] < -1e-6:
            raise NoSolution("reconnection Newton left the action quadrant")
    else:
        raise NoSolution("reconnection Newton did not converge")
    return float(x[0]), float(x[1])


def reconnection_locus_nf(
    p_over_q: Fraction | float,
    mus,
    energy_cap: float = DEFAULT_ENERGY_CAP,
    order: int = 8,
) -> ReconnectionLocus:
    """Normal-form locus of the p/q reconnection over an iterable of mass ratios.

    Per-mu failures (no twistless curve, resonance too close, Newton
    failures) are recorded and skipped.
    """
    frac = Fraction(p_over_q) if not isinstance(p_over_q, Fraction) else p_over_q
    target = float(frac)
    points = []
    failures = []
    for mu in mus:
        try:
            nf = normal_form(float(mu), order).normal_form
            i_s, i_l = _reconnection_point_nf(nf, target, energy_cap)
            points.append((float(mu), nf.value(i_s, i_l)))
        except (NoTwistlessCurve, NoSolution, ResonanceTooClose, NoPositiveRoot) as exc:
            failures.append((float(mu), type(exc).__name__))
    return ReconnectionLocus(frac, "normal_form", tuple(points), tuple(failures))


def reconnection_mu_at_energy_nf(
    p_over_q: Fraction | float,
    E: float,
    bracket: tuple[float, float],
    tol: float = 1e-7,
    energy_cap: float = DEFAULT_ENERGY_CAP,
    order: int = 8,
) -> float:
    """Mass ratio where the normal-form locus of p/q crosses the energy E."""
    target = float(Fraction(p_over_q)) if not isinstance(p_over_q, float) else p_over_q

    def locus_e(mu: float) -> float:
        nf = normal_form(mu, order).normal_form
        i_s, i_l = _reconnection_point_nf(nf, target, energy_cap)
        return nf.value(i_s, i_l) - E

    lo, hi = bracket
    f_lo, f_hi = locus_e(lo), locus_e(hi)
    if f_lo * f_hi > 0.0:
        raise NoSignChange(
            f"locus energy minus E has equal signs at the bracket ends "
            f"({f_lo:+.4e}, {f_hi:+.4e})"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = locus_e(mid)
        if f_lo * f_mid <= 0.0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def profile_maximum(profile) -> float:
    """Peak rotation number of a profile: parabola through the top three clean samples."""
    ok = [p for p in profile if p.flag == "ok" and math.isfinite(p.W)]
    if len(ok) < 3:
        raise NoSolution("fewer than three clean profile points")
    ok.sort(key=lambda p: p.W, reverse=True)
    top = sorted(ok[:3], key=lambda p: p.I)
    xs = np.array([p.I for p in top])
    ys = np.array([p.W for p in top])
    if xs[0] == xs[1] or xs[1] == xs[2]:
        return float(np.max(ys))
    coef = np.polyfit(xs, ys, 2)
    if coef[0] >= 0.0:  # not concave; fall back to the best sample
        return float(np.max(ys))
    x_star = -coef[1] / (2.0 * coef[0])
    if not (xs[0] <= x_star <= xs[2]):
        return float(np.max(ys))
    return float(np.polyval(coef, x_star))


def reconnection_search_numeric(
    p_over_q: Fraction | float,
    E: float,
    mu_bracket: tuple[float, float],
    tol: float = 5e-5,
    n_crossings: int = 1024,
    n_seeds: int = 12,
    workers: int = 4,
) -> float:
    """Bisection on the peak of the numerical rotation profile.

    At the returned mass ratio the maximum of W(I) at fixed energy equals
    the target rational: the twistless torus carries rotation number p/q
    and the two island chains reconnect.

    Raises
    ------
    NoSignChange
        If the bracket does not straddle the bifurcation.
    """
    from dataclasses import replace

    from .rotation import find_fixed_point, island_radius, rotation_profile

    target = float(Fraction(p_over_q)) if not isinstance(p_over_q, float) else p_over_q

    # the fixed point and island radius vary slowly across the bracket;
    # reuse them as warm starts between bisection levels
    state = {"center": None, "radius": None}

    def w_peak(mu: float) -> float:
        fp = find_fixed_point(mu, E, guess=state["center"])
        state["center"] = fp.point
        if state["radius"] is None:
            state["radius"] = island_radius(mu, E, fp.point)
        radius = state["radius"]
        coarse_seeds = [
            replace(fp.point, a=fp.point.a + f * radius)
            for f in np.linspace(0.3, 0.97, n_seeds)
        ]
        coarse = rotation_profile(
            mu,
            E,
            seeds=coarse_seeds,
            center=fp.point,
            n_crossings=max(256, n_crossings // 4),
            workers=workers,
        )
        clean = [p for p in coarse if p.flag == "ok" and math.isfinite(p.W)]
        if len(clean) < 3:
            raise NoSolution(f"profile at mu = {mu} has too few clean points")
        k = int(np.argmax([p.W for p in clean]))
        lo = clean[max(0, k - 1)].seed.a
        hi = clean[min(len(clean) - 1, k + 1)].seed.a
        fine_seeds = [
            replace(fp.point, a=a) for a in np.linspace(lo, hi, n_seeds)
        ]
        fine = rotation_profile(
            mu,
            E,
            seeds=fine_seeds,
            center=fp.point,
            n_crossings=n_crossings,
            workers=workers,
        )
        pool = [p for p in fine + coarse if p.flag == "ok" and math.isfinite(p.W)]
        return profile_maximum(pool)

    lo, hi = mu_bracket
    f_lo = w_peak(lo) - target
    f_hi = w_peak(hi) - target
    if f_lo * f_hi > 0.0:
        raise NoSignChange(
            f"peak W minus {target} has signs ({f_lo:+.2e}, {f_hi:+.2e}) at the bracket"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = w_peak(mid) - target
        if f_lo * f_mid <= 0.0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)
