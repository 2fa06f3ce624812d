"""Rotating-frame and regularized Hamiltonians of the planar CR3BP.

Conventions (fixed here, relied on everywhere else):

* Unit total mass and unit primary separation.  The heavier primary
  (mass ``1 - mu``) sits at ``(-1/2, 0)``, the lighter (mass ``mu``) at
  ``(+1/2, 0)``.
* The Hamiltonian carries the constant ``s = (3 + mu*(mu - 1))/2`` so
  that a test particle at rest at the triangular point L4 has energy 0.
* Complex aliases ``z = x + i*y`` and ``p_z = p_x - i*p_y``.
* The conformal collision chart is ``z = cos(w)/2`` with
  ``p_z = -2 p_w / sin(w)``, ``w = u + i*v``, ``p_w = p_u - i*p_v``; the
  fictitious time satisfies ``dt/dtau = |sin w|^2 / 4``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BranchPoint,
    HyperbolicEquilibrium,
    InvalidParameter,
    NonFiniteValue,
)

__all__ = [
    "MU1",
    "MU3",
    "MU4",
    "Frequencies",
    "RotatingState",
    "RegularizedState",
    "validate_mu",
    "s_constant",
    "frequencies",
    "mass_ratio_for_resonance",
    "lagrange_point",
    "energy_rotating",
    "jacobi_constant",
    "vector_field_rotating",
    "to_regularized",
    "from_regularized",
    "energy_regularized",
    "vector_field_regularized",
]

#: Linear stability bound of L4/L5: elliptic spectrum iff mu < MU1.
MU1 = 0.5 * (1.0 - math.sqrt(69.0) / 9.0)

_COLLISION_TOL = 1e-12


@dataclass(frozen=True)
class RotatingState:
    """Phase point (x, y, px, py) in the rotating synodic frame."""

    x: float
    y: float
    px: float
    py: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.px, self.py], dtype=float)

    @staticmethod
    def from_array(arr) -> "RotatingState":
        x, y, px, py = (float(c) for c in arr)
        return RotatingState(x, y, px, py)

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @property
    def pz(self) -> complex:
        return complex(self.px, -self.py)


@dataclass(frozen=True)
class RegularizedState:
    """Extended-phase-space point (u, v, pu, pv, t, E) in the collision chart.

    ``t`` is the accumulated physical time, ``E`` the fixed energy
    parameter; both ride along as coordinates of the extended system.
    """

    u: float
    v: float
    pu: float
    pv: float
    t: float = 0.0
    E: float = 0.0

    def as_array(self) -> np.ndarray:
        """Dynamical variables only: (u, v, pu, pv, t)."""
        return np.array([self.u, self.v, self.pu, self.pv, self.t], dtype=float)

    @staticmethod
    def from_array(arr, E: float) -> "RegularizedState":
        u, v, pu, pv, t = (float(c) for c in arr)
        return RegularizedState(u, v, pu, pv, t, float(E))

    @property
    def w(self) -> complex:
        return complex(self.u, self.v)

    @property
    def pw(self) -> complex:
        return complex(self.pu, -self.pv)


@dataclass(frozen=True)
class Frequencies:
    """Linear frequencies at L4, omega_s >= omega_l > 0."""

    omega_s: float
    omega_l: float

    @property
    def ratio(self) -> float:
        """Frequency ratio r = omega_s / omega_l (> 1 below the 1:1 bound)."""
        return self.omega_s / self.omega_l


def validate_mu(mu: float, *, elliptic: bool = False) -> float:
    """Check a mass ratio against its invariants and return it.

    Parameters
    ----------
    mu : float
        Mass fraction m2/(m1 + m2).
    elliptic : bool
        Additionally require ``mu < MU1`` so that L4 is elliptic.

    Raises
    ------
    InvalidParameter
        If mu is outside (0, 1/2].
    HyperbolicEquilibrium
        If ``elliptic`` and ``mu > MU1``.
    """
    mu = float(mu)
    if not math.isfinite(mu) or mu <= 0.0 or mu > 0.5:
        raise InvalidParameter(f"mass ratio must lie in (0, 1/2], got {mu}")
    if elliptic and mu > MU1:
        raise HyperbolicEquilibrium(
            f"mu = {mu} >= {MU1:.6f}: triangular points are not elliptic"
        )
    return mu


def s_constant(mu: float) -> float:
    """Normalization constant s = (3 + mu*(mu - 1))/2 stored with the Hamiltonian."""
    return 0.5 * (3.0 + mu * (mu - 1.0))


def frequencies(mu: float) -> Frequencies:
    """Linear frequencies of the two oscillation families at L4.

    The two positive roots of ``w^4 - w^2 + 27 mu (1 - mu)/4 = 0``,
    ordered ``omega_s >= omega_l``.  They satisfy
    ``omega_s^2 + omega_l^2 = 1`` and
    ``omega_s^2 omega_l^2 = 27 mu (1 - mu)/4``.

    Raises
    ------
    HyperbolicEquilibrium
        For mu above the stability bound MU1 (the quartic then has
        complex roots).  Exactly at MU1 the degenerate double root
        ``1/sqrt(2)`` is returned.
    """
    mu = validate_mu(mu, elliptic=True)
    disc = 1.0 - 27.0 * mu * (1.0 - mu)
    if disc < 0.0:
        # only roundoff can put us here once mu <= MU1
        disc = 0.0
    root = math.sqrt(disc)
    omega_s = math.sqrt(0.5 * (1.0 + root))
    omega_l = math.sqrt(0.5 * (1.0 - root))
    return Frequencies(omega_s, omega_l)


def mass_ratio_for_resonance(r: float) -> float:
    """Mass ratio at which the L4 frequency ratio equals ``r``.

    Solves ``27 mu (1 - mu)/4 = r^2/(1 + r^2)^2`` for the smaller root,
    so that ``frequencies(mu).ratio == r``.

    Parameters
    ----------
    r : float
        Target frequency ratio, must exceed 1.
    """
    r = float(r)
    if not r > 1.0:
        raise InvalidParameter(f"frequency ratio must exceed 1, got {r}")
    q = 4.0 * r * r / (27.0 * (1.0 + r * r) ** 2)
    # mu*(1-mu) = q, smaller root
    return 0.5 * (1.0 - math.sqrt(1.0 - 4.0 * q))


#: Mass ratios of the bounding 1:3 and 1:4 resonances of the study window.
MU3 = mass_ratio_for_resonance(3.0)
MU4 = mass_ratio_for_resonance(4.0)


def lagrange_point(mu: float, which: str = "L4") -> RotatingState:
    """Triangular equilibrium L4 or L5, with momenta of the co-rotating rest state.

    L4 = (0, sqrt(3)/2, -sqrt(3)/2, 1/2 - mu); L5 is its image under the
    reflection (y, px) -> (-y, -px).
    """
    validate_mu(mu, elliptic=True)
    root3half = math.sqrt(3.0) / 2.0
    if which == "L4":
        return RotatingState(0.0, root3half, -root3half, 0.5 - mu)
    if which == "L5":
        return RotatingState(0.0, -root3half, root3half, 0.5 - mu)
    raise InvalidParameter(f"which must be 'L4' or 'L5', got {which!r}")


def _primary_distances(x: float, y: float) -> tuple[float, float]:
    r1 = math.hypot(x + 0.5, y)  # heavy primary
    r2 = math.hypot(x - 0.5, y)  # light primary
    return r1, r2


def energy_rotating(state: RotatingState, mu: float) -> float:
    """Rotating-frame Hamiltonian value; 0 for a particle at rest at L4.

    Raises
    ------
    NonFiniteValue
        At a collision with either primary.
    """
    validate_mu(mu)
    x, y, px, py = state.x, state.y, state.px, state.py
    r1, r2 = _primary_distances(x, y)
    if r1 < _COLLISION_TOL or r2 < _COLLISION_TOL:
        raise NonFiniteValue("state coincides with a primary")
    return (
        0.5 * (px * px + py * py)
        + y * px
        - (x + 0.5 - mu) * py
        - (1.0 - mu) / r1
        - mu / r2
        + s_constant(mu)
    )


def jacobi_constant(E: float, mu: float) -> float:
    """Jacobi integral C = -2 (E - s) corresponding to energy level E."""
    return -2.0 * (E - s_constant(mu))


def vector_field_rotating(state: RotatingState, mu: float) -> np.ndarray:
    """Canonical vector field (dx, dy, dpx, dpy)/dt of the rotating Hamiltonian."""
    validate_mu(mu)
    x, y, px, py = state.x, state.y, state.px, state.py
    r1, r2 = _primary_distances(x, y)
    if r1 < _COLLISION_TOL or r2 < _COLLISION_TOL:
        raise NonFiniteValue("vector field evaluated at a primary")
    f1 = (1.0 - mu) / r1**3
    f2 = mu / r2**3
    return np.array(
        [
            px + y,
            py - (x + 0.5 - mu),
            py - f1 * (x + 0.5) - f2 * (x - 0.5),
            -px - f1 * y - f2 * y,
        ]
    )


_BRANCH_TOL = 1e-8


def to_regularized(state: RotatingState, E: float) -> RegularizedState:
    """Map a rotating-frame state into the collision chart at energy E.

    Uses the principal inverse cosine branch, u in [0, pi].  The physical
    clock of the returned state starts at t = 0.

    Raises
    ------
    BranchPoint
        If the position coincides with a primary (z = +-1/2), where the
        chart's momentum map degenerates.
    """
    zeta = 2.0 * state.z
    w = cmath.acos(zeta)
    sw = cmath.sin(w)
    if abs(sw) < _BRANCH_TOL:
        raise BranchPoint(f"z = {state.z} is a branch point of the chart")
    pw = -state.pz * sw / 2.0
    return RegularizedState(w.real, w.imag, pw.real, -pw.imag, 0.0, float(E))


def from_regularized(reg: RegularizedState) -> RotatingState:
    """Map a regularized state back to the rotating frame.

    Raises
    ------
    BranchPoint
        Where sin(w) = 0 and the momentum map is singular.
    """
    w = reg.w
    z = cmath.cos(w) / 2.0
    sw = cmath.sin(w)
    if abs(sw) < _BRANCH_TOL:
        raise BranchPoint("sin(w) = 0: cannot reconstruct momenta")
    pz = -2.0 * reg.pw / sw
    return RotatingState(z.real, z.imag, pz.real, -pz.imag)


def energy_regularized(reg: RegularizedState, mu: float) -> float:
    """Extended-phase-space Hamiltonian K; identically 0 along physical orbits.

    Globally regular, including at both collisions.  Away from branch
    points, ``K = |sin w|^2 (H - E)/4``.
    """
    validate_mu(mu)
    u, v, pu, pv = reg.u, reg.v, reg.pu, reg.pv
    m = 1.0 - 2.0 * mu
    cu, su = math.cos(u), math.sin(u)
    cv, sv = math.cosh(v), math.sinh(v)
    e_minus_s = reg.E - s_constant(mu)
    return (
        0.5 * (pu * pu + pv * pv)
        + 0.5 * (m * cu - cv)
        + 0.25 * su * (m * cv + cu) * pv
        + 0.25 * sv * (m * cu + cv) * pu
        + 0.125 * (math.cos(2 * u) - math.cosh(2 * v)) * e_minus_s
    )


def vector_field_regularized(reg: RegularizedState, mu: float) -> np.ndarray:
    """Fictitious-time derivative (du, dv, dpu, dpv, dt)/dtau, all finite everywhere."""
    validate_mu(mu)
    u, v, pu, pv = reg.u, reg.v, reg.pu, reg.pv
    m = 1.0 - 2.0 * mu
    cu, su = math.cos(u), math.sin(u)
    cv, sv = math.cosh(v), math.sinh(v)
    c2u, s2u = math.cos(2 * u), math.sin(2 * u)
    c2v, s2v = math.cosh(2 * v), math.sinh(2 * v)
    e_minus_s = reg.E - s_constant(mu)

    k_pu = pu + 0.25 * sv * (m * cu + cv)
    k_pv = pv + 0.25 * su * (m * cv + cu)
    k_u = (
        -0.5 * m * su
        + 0.25 * pv * (m * cu * cv + c2u)
        - 0.25 * pu * sv * m * su
        - 0.25 * s2u * e_minus_s
    )
    k_v = (
        -0.5 * sv
        + 0.25 * pv * su * m * sv
        + 0.25 * pu * (m * cu * cv + c2v)
        - 0.25 * s2v * e_minus_s
    )
    dt_dtau = 0.25 * (su * su + sv * sv)
    return np.array([k_pu, k_pv, -k_u, -k_v, dt_dtau])
