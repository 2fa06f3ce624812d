"""Compiled inner loops: regularized RK4 stepping and section-crossing capture.

Everything here works on bare float64 arrays ``y = (u, v, pu, pv, t)`` with
the mass ratio passed as ``m = 1 - 2*mu`` and the energy offset as
``ems = E - s``.  The section function is the conformal-chart image of the
configuration line through the heavy primary and L4:

    g(u, v) = sqrt(3)*cos(u)*cosh(v) + sin(u)*sinh(v) + sqrt(3)

Status codes returned by the crossing collector:
0 = requested count reached, 1 = step budget exhausted, 2 = drift breach,
3 = non-finite state, 4 = crossing too close to the heavy primary.
"""

import math

import numpy as np
from numba import njit

SQRT3 = math.sqrt(3.0)

STATUS_OK = 0
STATUS_MAX_STEPS = 1
STATUS_DRIFT = 2
STATUS_NONFINITE = 3
STATUS_PRIMARY = 4
STATUS_WINDOW = 5

# crossings with |a| below this are on top of the heavy primary and unreliable
PRIMARY_A_TOL = 1e-6
# minimal transversality |dg/dtau| for the independent-variable swap
GDOT_TOL = 1e-8


@njit(cache=True, nogil=True, inline="always")
def k_value(y, m, ems):
    """Extended Hamiltonian K at y; zero on physical trajectories."""
    u, v, pu, pv = y[0], y[1], y[2], y[3]
    cu = math.cos(u)
    su = math.sin(u)
    cv = math.cosh(v)
    sv = math.sinh(v)
    return (
        0.5 * (pu * pu + pv * pv)
        + 0.5 * (m * cu - cv)
        + 0.25 * su * (m * cv + cu) * pv
        + 0.25 * sv * (m * cu + cv) * pu
        + 0.125 * ((2.0 * cu * cu - 1.0) - (2.0 * cv * cv - 1.0)) * ems
    )


@njit(cache=True, nogil=True, inline="always")
def rhs(y, out, m, ems):
    """Fictitious-time derivative of (u, v, pu, pv, t)."""
    u, v, pu, pv = y[0], y[1], y[2], y[3]
    cu = math.cos(u)
    su = math.sin(u)
    cv = math.cosh(v)
    sv = math.sinh(v)
    c2u = 2.0 * cu * cu - 1.0
    s2u = 2.0 * su * cu
    c2v = 2.0 * cv * cv - 1.0
    s2v = 2.0 * sv * cv
    k_u = (
        -0.5 * m * su
        + 0.25 * pv * (m * cu * cv + c2u)
        - 0.25 * pu * sv * m * su
        - 0.25 * s2u * ems
    )
    k_v = (
        -0.5 * sv
        + 0.25 * pv * su * m * sv
        + 0.25 * pu * (m * cu * cv + c2v)
        - 0.25 * s2v * ems
    )
    out[0] = pu + 0.25 * sv * (m * cu + cv)
    out[1] = pv + 0.25 * su * (m * cv + cu)
    out[2] = -k_u
    out[3] = -k_v
    out[4] = 0.25 * (su * su + sv * sv)


@njit(cache=True, nogil=True)
def rk4_step(y, h, m, ems):
    """One classical Runge-Kutta step of size h in fictitious time, in place."""
    k1 = np.empty(5)
    k2 = np.empty(5)
    k3 = np.empty(5)
    k4 = np.empty(5)
    tmp = np.empty(5)
    rhs(y, k1, m, ems)
    for i in range(5):
        tmp[i] = y[i] + 0.5 * h * k1[i]
    rhs(tmp, k2, m, ems)
    for i in range(5):
        tmp[i] = y[i] + 0.5 * h * k2[i]
    rhs(tmp, k3, m, ems)
    for i in range(5):
        tmp[i] = y[i] + h * k3[i]
    rhs(tmp, k4, m, ems)
    for i in range(5):
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True, nogil=True)
def rk4_path(y, h, nsteps, m, ems):
    """Advance y by nsteps fixed steps; returns max |K| sampled every step."""
    max_k = 0.0
    for _ in range(nsteps):
        rk4_step(y, h, m, ems)
        ak = abs(k_value(y, m, ems))
        if ak > max_k:
            max_k = ak
    return max_k


@njit(cache=True, nogil=True, inline="always")
def section_g(y):
    u, v = y[0], y[1]
    return SQRT3 * math.cos(u) * math.cosh(v) + math.sin(u) * math.sinh(v) + SQRT3


@njit(cache=True, nogil=True, inline="always")
def section_gdot(y, m, ems):
    """Chain-rule derivative dg/dtau along the flow."""
    u, v = y[0], y[1]
    cu = math.cos(u)
    su = math.sin(u)
    cv = math.cosh(v)
    sv = math.sinh(v)
    g_u = -SQRT3 * su * cv + cu * sv
    g_v = SQRT3 * cu * sv + su * cv
    du = y[2] + 0.25 * sv * (m * cu + cv)
    dv = y[3] + 0.25 * su * (m * cv + cu)
    return g_u * du + g_v * dv


@njit(cache=True, nogil=True)
def _rk4_step_in_g(y, dg, m, ems):
    """One RK4 step using the section function as independent variable.

    Integrates dY/dg = F(Y) / (dg/dtau) over an increment dg; used to land
    exactly on g = 0 from the first overshooting point.
    """
    k1 = np.empty(5)
    k2 = np.empty(5)
    k3 = np.empty(5)
    k4 = np.empty(5)
    tmp = np.empty(5)
    rhs(y, k1, m, ems)
    gd = section_gdot(y, m, ems)
    for i in range(5):
        k1[i] /= gd
        tmp[i] = y[i] + 0.5 * dg * k1[i]
    rhs(tmp, k2, m, ems)
    gd = section_gdot(tmp, m, ems)
    for i in range(5):
        k2[i] /= gd
        tmp[i] = y[i] + 0.5 * dg * k2[i]
    rhs(tmp, k3, m, ems)
    gd = section_gdot(tmp, m, ems)
    for i in range(5):
        k3[i] /= gd
        tmp[i] = y[i] + dg * k3[i]
    rhs(tmp, k4, m, ems)
    gd = section_gdot(tmp, m, ems)
    for i in range(5):
        k4[i] /= gd
        y[i] += dg / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True, nogil=True)
def refine_crossing(y, m, ems, polish_iters=3):
    """Land y on the section: one swap step of size -g, then Newton polish.

    Returns the residual |g| (negative sentinel if transversality failed).
    """
    g = section_g(y)
    if abs(section_gdot(y, m, ems)) < GDOT_TOL:
        return -1.0
    _rk4_step_in_g(y, -g, m, ems)
    for _ in range(polish_iters):
        g = section_g(y)
        if abs(g) < 1e-14:
            break
        gd = section_gdot(y, m, ems)
        if abs(gd) < GDOT_TOL:
            return -1.0
        rk4_step(y, -g / gd, m, ems)
    return abs(section_g(y))


@njit(cache=True, nogil=True, inline="always")
def section_chart(y):
    """Section-chart coordinates (a, p_a) of a state (need not be on the section)."""
    u, v, pu, pv = y[0], y[1], y[2], y[3]
    cu = math.cos(u)
    su = math.sin(u)
    cv = math.cosh(v)
    sv = math.sinh(v)
    a = cu * cv + 1.0
    swr = su * cv
    swi = cu * sv
    norm = swr * swr + swi * swi
    px = -2.0 * (pu * swr - pv * swi) / norm
    py = -2.0 * (pu * swi + pv * swr) / norm
    return a, 0.5 * px + 0.5 * SQRT3 * py


@njit(cache=True, nogil=True)
def collect_crossings(
    y,
    h,
    m,
    ems,
    n_target,
    direction,
    max_steps,
    drift_tol,
    out_states,
    out_dirs,
    a_min=-np.inf,
    a_max=np.inf,
    pa_abs_max=np.inf,
):
    """Integrate until n_target section crossings of the wanted direction.

    direction: +1, -1, or 0 for both.  y is advanced in place (it remains
    on the raw stepped trajectory, not on the section).  Crossing states
    are written to out_states (rows (u, v, pu, pv, t)) with the crossing
    direction in out_dirs.  Crossings of either direction falling outside
    the (a, p_a) window abort with STATUS_WINDOW (escape detector).

    Returns (n_found, status, max_abs_k, steps_used).
    """
    max_k = 0.0
    n_found = 0
    g_prev = section_g(y)
    # arm detection only once |g| clears the launch band, so a seed lying
    # exactly on the section does not re-detect its own start point
    armed = abs(g_prev) > 1e-7
    cross = np.empty(5)
    steps = 0
    while steps < max_steps:
        rk4_step(y, h, m, ems)
        steps += 1
        if not (
            math.isfinite(y[0])
            and math.isfinite(y[1])
            and math.isfinite(y[2])
            and math.isfinite(y[3])
        ):
            return n_found, STATUS_NONFINITE, max_k, steps
        ak = abs(k_value(y, m, ems))
        if ak > max_k:
            max_k = ak
        if max_k > drift_tol:
            return n_found, STATUS_DRIFT, max_k, steps
        g_new = section_g(y)
        if not armed:
            if abs(g_new) > 1e-7:
                armed = True
            g_prev = g_new
            continue
        if (g_prev < 0.0 and g_new >= 0.0) or (g_prev > 0.0 and g_new <= 0.0):
            cross[:] = y
            res = refine_crossing(cross, m, ems)
            if res >= 0.0 and res < 1e-10:
                d = 1 if section_gdot(cross, m, ems) > 0.0 else -1
                # a = Re(cos w) + 1 vanishes on the heavy primary
                a = math.cos(cross[0]) * math.cosh(cross[1]) + 1.0
                if abs(a) < PRIMARY_A_TOL:
                    return n_found, STATUS_PRIMARY, max_k, steps
                ac, pac = section_chart(cross)
                if ac < a_min or ac > a_max or abs(pac) > pa_abs_max:
                    return n_found, STATUS_WINDOW, max_k, steps
                if direction == 0 or d == direction:
                    out_states[n_found] = cross
                    out_dirs[n_found] = d
                    n_found += 1
                    if n_found >= n_target:
                        return n_found, STATUS_OK, max_k, steps
        g_prev = g_new
    return n_found, STATUS_MAX_STEPS, max_k, steps
