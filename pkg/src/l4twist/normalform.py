"""Birkhoff normal form of the rotating Hamiltonian at L4, to degree 8.

Pipeline: Taylor-expand the Hamiltonian about L4 in canonical displacement
variables; bring the quadratic part to ``omega_s I_s - omega_l I_l`` by a
real linear symplectic map (the indefinite signature is intrinsic to the
triangular point); complexify; then remove non-action terms order by order
with Lie transforms ``exp(ad_W)``.  Monomials ``z^k zbar^m`` are
eigenvectors of the quadratic bracket, so each homological equation is a
diagonal solve with denominators ``omega_s(m1-k1) - omega_l(m2-k2)``;
denominators below ``denom_floor`` abort with ResonanceTooClose rather
than emit an ill-conditioned form.  All coefficients are floating point
throughout.

The output polynomial in the actions,

    H(I_s, I_l) = omega_s I_s - omega_l I_l
                  + (A I_s^2 + 2 B I_s I_l + C I_l^2)/2 + ...

carries the rotation number W = -(dH/dI_l)/(dH/dI_s) of a torus and the
twist condition used by the `twist` module.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import frequencies, lagrange_point, s_constant, validate_mu
from .errors import (
    DefectiveSpectrum,
    DegenerateFrequency,
    InvalidParameter,
    NoPositiveRoot,
    ResonanceTooClose,
)
from .poly import GradedPoly4, complexification_matrix

__all__ = [
    "taylor_at_L4",
    "linear_symplectic_normalize",
    "BirkhoffResult",
    "birkhoff_normalize",
    "normal_form",
    "NormalForm",
    "nf_rotation_number",
    "nf_twist",
    "short_period_W_of_E",
    "nf_verify",
    "NfVerifyReport",
]

_J4 = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])

#: relative pruning threshold per degree (see GradedPoly4.prune)
PRUNE_REL_TOL = 1e-14
DEFAULT_DENOM_FLOOR = 1e-4

#: largest tolerated internal non-action residual; beyond it the form is
#: considered ill-conditioned (near-resonant) and rejected loudly
RESIDUAL_GATE = 1e-8

#: Amplitude scale of the working frame: the normalization runs in
#: variables xi = SIGMA * xi' (a conformal scaling, H' = H/SIGMA^2), which
#: keeps all intermediate coefficients O(1) over the island action scale
#: |I| ~ SIGMA^2 and the elimination residuals at roundoff level, two
#: orders below the 1e-10 verification contract.  Output action
#: coefficients are mapped back to physical units and are insensitive to
#: this choice at the 1e-12 level.
SIGMA2 = 0.02
SIGMA = math.sqrt(SIGMA2)


def _scale_variables(p: GradedPoly4, sigma: float, h_scale: float) -> GradedPoly4:
    """p(sigma * x) / h_scale as a polynomial in x."""
    res = GradedPoly4.zero(p.max_degree)
    res.coeffs = {e: c * sigma ** sum(e) / h_scale for e, c in p.coeffs.items()}
    return res


def _inverse_distance_series(rho: tuple[float, float], max_degree: int) -> GradedPoly4:
    """Series of 1/|rho + delta| in delta = (dx, dy), |rho| = 1, to max_degree.

    Binomial expansion of (1 + t)^(-1/2) with t = 2 rho.delta + |delta|^2.
    """
    dx = GradedPoly4.variable(0, max_degree)
    dy = GradedPoly4.variable(1, max_degree)
    t = 2.0 * rho[0] * dx + 2.0 * rho[1] * dy + dx * dx + dy * dy
    out = GradedPoly4.constant(1.0, max_degree)
    t_pow = GradedPoly4.constant(1.0, max_degree)
    coeff = 1.0
    for n in range(1, max_degree + 1):
        coeff *= -(0.5 + (n - 1)) / n  # binom(-1/2, n) recursion
        t_pow = t_pow * t
        if not t_pow:
            break
        out = out + coeff * t_pow
    return out


def taylor_at_L4(mu: float, max_degree: int = 8) -> GradedPoly4:
    """Taylor polynomial of the rotating Hamiltonian about L4.

    Variables are canonical displacements (dx, dy, dpx, dpy); degrees 0
    and 1 vanish (equilibrium at zero energy) and are dropped after an
    internal sanity check.
    """
    validate_mu(mu, elliptic=True)
    if max_degree < 2:
        raise InvalidParameter("max_degree must be at least 2")
    l4 = lagrange_point(mu)
    dx = GradedPoly4.variable(0, max_degree)
    dy = GradedPoly4.variable(1, max_degree)
    dpx = GradedPoly4.variable(2, max_degree)
    dpy = GradedPoly4.variable(3, max_degree)
    x = dx + l4.x
    y = dy + l4.y
    px = dpx + l4.px
    py = dpy + l4.py
    # distances from L4 to the primaries are both 1; rho points primary -> L4
    s1 = _inverse_distance_series((l4.x + 0.5, l4.y), max_degree)
    s2 = _inverse_distance_series((l4.x - 0.5, l4.y), max_degree)
    h = (
        0.5 * (px * px + py * py)
        + y * px
        - (x + (0.5 - mu)) * py
        - (1.0 - mu) * s1
        - mu * s2
        + s_constant(mu)
    )
    low = h.truncate(1)
    if low.max_abs() > 1e-12:
        raise AssertionError(
            f"degree<=1 Taylor terms did not vanish at L4: {low.max_abs():.3e}"
        )
    res = GradedPoly4.zero(max_degree)
    res.coeffs = {e: c for e, c in h.coeffs.items() if sum(e) >= 2}
    return res.prune(PRUNE_REL_TOL)


def _hessian_from_quadratic(h2: GradedPoly4) -> np.ndarray:
    s = np.zeros((4, 4))
    for e, c in h2.coeffs.items():
        if sum(e) != 2:
            raise InvalidParameter("quadratic part contains non-degree-2 terms")
        idx = [i for i in range(4) for _ in range(e[i])]
        i, j = idx
        val = float(c.real)
        if i == j:
            s[i, i] += 2.0 * val
        else:
            s[i, j] += val
            s[j, i] += val
    return s


def linear_symplectic_normalize(h2: GradedPoly4) -> tuple[np.ndarray, GradedPoly4]:
    """Real symplectic M bringing the quadratic part to its mode form.

    Returns (M, h2 o M) with ``M^T J M = J`` and

        h2 o M = (omega_s/2)(q1^2 + p1^2) - (omega_l/2)(q2^2 + p2^2).

    The sign of each block is the Krein sign of the mode and is not a
    choice: at L4 the fast mode is positive and the slow mode negative.

    Raises
    ------
    DefectiveSpectrum
        If the spectrum is not two distinct elliptic pairs.
    """
    S = _hessian_from_quadratic(h2)
    A = _J4 @ S
    vals, vecs = np.linalg.eig(A)
    pos = [(vals[i].imag, i) for i in range(4) if vals[i].imag > 1e-12]
    if len(pos) != 2:
        raise DefectiveSpectrum(f"expected two elliptic pairs, eigenvalues {vals}")
    pos.sort(reverse=True)  # fast mode first
    if abs(pos[0][0] - pos[1][0]) < 1e-9:
        raise DefectiveSpectrum("frequencies too close to the 1:1 collision")
    columns_q = []
    columns_p = []
    signs = []
    for _, i in pos:
        v = vecs[:, i]
        a, b = v.real.copy(), v.imag.copy()
        sval = float(a @ _J4 @ b)
        if abs(sval) < 1e-14:
            raise DefectiveSpectrum("degenerate symplectic pairing")
        r = 1.0 / math.sqrt(abs(sval))
        if sval > 0:
            columns_q.append(a * r)
            columns_p.append(b * r)
        else:
            columns_q.append(a * r)
            columns_p.append(-b * r)
        signs.append(1.0 if sval > 0 else -1.0)
    if not (signs[0] > 0 and signs[1] < 0):
        raise DefectiveSpectrum(
            f"unexpected Krein signature {signs}; not a triangular-point spectrum"
        )
    M = np.column_stack([columns_q[0], columns_q[1], columns_p[0], columns_p[1]])
    if np.max(np.abs(M.T @ _J4 @ M - _J4)) > 1e-10:
        raise DefectiveSpectrum("failed to build a symplectic basis")
    return M, h2.apply_linear(M).prune(PRUNE_REL_TOL)


def _lie_transform(f: GradedPoly4, w: GradedPoly4) -> GradedPoly4:
    """exp(ad_w) f = sum_k ad_w^k f / k!, truncated by the grading."""
    out = f
    term = f
    k = 1
    while True:
        term = term.poisson_complex(w) * (1.0 / k)
        if not term:
            return out
        out = out + term
        k += 1
        if k > 64:
            raise AssertionError("Lie series failed to terminate")


def _hermitian_average(p: GradedPoly4) -> GradedPoly4:
    """Project onto the Hermitian (real-function) part, removing roundoff skew."""
    return (p + p.hermitian_transpose()) * 0.5


def _solve_homological(
    rd: GradedPoly4, omega_s: float, omega_l: float, denom_floor: float
) -> tuple[GradedPoly4, float, tuple[int, int]]:
    """Generator removing the non-action part of a homogeneous degree block.

    Also returns the smallest denominator met and its integer combination,
    for the post-normalization conditioning gate.
    """
    w = GradedPoly4.zero(rd.max_degree)
    worst = math.inf
    worst_combo = (0, 0)
    for (k1, k2, m1, m2), c in rd.terms():
        j1, j2 = m1 - k1, m2 - k2
        if j1 == 0 and j2 == 0:
            continue
        denom = omega_s * j1 - omega_l * j2
        if abs(denom) <= denom_floor:
            raise ResonanceTooClose((abs(j1), abs(j2)), denom)
        if abs(denom) < worst:
            worst = abs(denom)
            worst_combo = (abs(j1), abs(j2))
        w.coeffs[(k1, k2, m1, m2)] = complex(0.0, -1.0) * c / denom
    return _hermitian_average(w), worst, worst_combo


@dataclass(frozen=True)
class NormalForm:
    """Polynomial in the actions (I_s, I_l) with the mode frequencies.

    ``coeffs[j, k]`` multiplies I_s^j I_l^k; (1, 0) is omega_s and (0, 1)
    is -omega_l by the signature of the triangular point.
    """

    mu: float
    omega_s: float
    omega_l: float
    order: int
    coeffs: np.ndarray  # (n+1, n+1) lower-triangular in j+k, n = order//2
    imag_residue: float

    @property
    def action_degree(self) -> int:
        return self.order // 2

    @property
    def A(self) -> float:
        return 2.0 * float(self.coeffs[2, 0])

    @property
    def B(self) -> float:
        return float(self.coeffs[1, 1])

    @property
    def C(self) -> float:
        return 2.0 * float(self.coeffs[0, 2])

    def value(self, i_s: float, i_l: float) -> float:
        return self.partial(0, 0, i_s, i_l)

    def partial(self, ds: int, dl: int, i_s: float, i_l: float) -> float:
        """d^(ds+dl) H / dI_s^ds dI_l^dl at (i_s, i_l), analytically."""
        n = self.coeffs.shape[0]
        total = 0.0
        for j in range(ds, n):
            for k in range(dl, n - j):
                c = self.coeffs[j, k]
                if c == 0.0:
                    continue
                fac = 1.0
                for r in range(ds):
                    fac *= j - r
                for r in range(dl):
                    fac *= k - r
                total += c * fac * i_s ** (j - ds) * i_l ** (k - dl)
        return float(total)

    def truncated(self, action_degree: int) -> "NormalForm":
        """Copy keeping action monomials with j + k <= action_degree."""
        n = action_degree + 1
        c = np.zeros((n, n))
        for j in range(min(n, self.coeffs.shape[0])):
            for k in range(min(n - j, self.coeffs.shape[1] - j)):
                if j + k <= action_degree:
                    c[j, k] = self.coeffs[j, k]
        return NormalForm(
            self.mu, self.omega_s, self.omega_l, 2 * action_degree, c, self.imag_residue
        )

    def to_json_dict(self) -> dict:
        coeff_list = []
        n = self.coeffs.shape[0]
        for j in range(n):
            for k in range(n - j):
                if j + k >= 1 and self.coeffs[j, k] != 0.0:
                    coeff_list.append({"j": j, "k": k, "value": float(self.coeffs[j, k])})
        return {
            "mu": self.mu,
            "omega_s": self.omega_s,
            "omega_l": self.omega_l,
            "order": self.order,
            "coefficients": coeff_list,
            "residual": self.imag_residue,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @staticmethod
    def from_json_dict(d: dict) -> "NormalForm":
        n = d["order"] // 2 + 1
        c = np.zeros((n, n))
        for item in d["coefficients"]:
            c[item["j"], item["k"]] = item["value"]
        return NormalForm(
            d["mu"], d["omega_s"], d["omega_l"], d["order"], c, d.get("residual", 0.0)
        )


@dataclass(frozen=True)
class BirkhoffResult:
    """Everything produced by one normalization run."""

    normal_form: NormalForm
    generators: tuple[GradedPoly4, ...]  # Lie generators, degrees 3..order
    linear_transform: np.ndarray  # displacement -> mode variables
    non_action_residual: float
    taylor: GradedPoly4 = field(repr=False)


def birkhoff_normalize(
    h: GradedPoly4,
    mu: float,
    degree: int = 8,
    denom_floor: float = DEFAULT_DENOM_FLOOR,
) -> BirkhoffResult:
    """Normalize a Taylor Hamiltonian to the given degree.

    Parameters
    ----------
    h : GradedPoly4
        Taylor polynomial about L4 in displacement variables (from
        `taylor_at_L4`), truncated at `degree`.
    mu : float
        Mass ratio (used for frequency bookkeeping and stored in the result).
    degree : int
        Total polynomial degree of the normalization (action degree is
        degree // 2).
    denom_floor : float
        Smallest tolerated |k1 omega_s - k2 omega_l|.

    Raises
    ------
    ResonanceTooClose
        When an elimination denominator falls below the floor.
    """
    validate_mu(mu, elliptic=True)
    if degree < 2 or degree > h.max_degree:
        raise InvalidParameter(f"degree must lie in [2, {h.max_degree}]")
    if degree % 2:
        raise InvalidParameter("degree must be even (action polynomials)")
    freq = frequencies(mu)
    M, _ = linear_symplectic_normalize(h.degree_part(2))
    h_work = _scale_variables(h, SIGMA, SIGMA2)
    hc = _hermitian_average(
        h_work.apply_linear(M).apply_linear(complexification_matrix())
    ).prune(PRUNE_REL_TOL)

    # quadratic part must be omega_s z1 zb1 - omega_l z2 zb2
    h2 = hc.degree_part(2)
    c_s = h2.coeffs.get((1, 0, 1, 0), 0.0)
    c_l = h2.coeffs.get((0, 1, 0, 1), 0.0)
    offdiag = (h2 - GradedPoly4({(1, 0, 1, 0): c_s, (0, 1, 0, 1): c_l}, h.max_degree)).max_abs()
    if offdiag > 1e-10 or abs(c_s - freq.omega_s) > 1e-9 or abs(c_l + freq.omega_l) > 1e-9:
        raise DefectiveSpectrum(
            f"quadratic part not in mode form (offdiag {offdiag:.2e})"
        )

    generators = []
    worst_denom = math.inf
    worst_combo = (0, 0)
    for d in range(3, degree + 1):
        rd = hc.degree_part(d)
        w, denom, combo = _solve_homological(rd, freq.omega_s, freq.omega_l, denom_floor)
        if denom < worst_denom:
            worst_denom, worst_combo = denom, combo
        if w:
            hc = _lie_transform(hc, w).prune(PRUNE_REL_TOL)
        generators.append(w)

    n = degree // 2
    coeffs = np.zeros((n + 1, n + 1))
    imag_residue = 0.0
    non_action = 0.0
    for (k1, k2, m1, m2), c in hc.truncate(degree).terms():
        if k1 == m1 and k2 == m2:
            # scaled actions I' = I / SIGMA2, scaled H' = H / SIGMA2
            coeffs[k1, k2] = c.real * SIGMA2 ** (1 - k1 - k2)
            imag_residue = max(imag_residue, abs(c.imag))
        else:
            non_action = max(non_action, abs(c))
    if non_action > RESIDUAL_GATE:
        # denominators cleared the floor, but near-resonant amplification
        # still wrecked the elimination; refuse to emit the form
        raise ResonanceTooClose(worst_combo, worst_denom)
    nf = NormalForm(mu, freq.omega_s, freq.omega_l, degree, coeffs, imag_residue)
    return BirkhoffResult(nf, tuple(generators), M, non_action, h)


@functools.lru_cache(maxsize=128)
def normal_form(
    mu: float, order: int = 8, denom_floor: float = DEFAULT_DENOM_FLOOR
) -> BirkhoffResult:
    """Cached taylor + normalize pipeline for a mass ratio."""
    h = taylor_at_L4(mu, order)
    return birkhoff_normalize(h, mu, order, denom_floor)


def nf_rotation_number(nf: NormalForm, i_s: float, i_l: float) -> float:
    """Rotation number W = -(dH/dI_l)/(dH/dI_s) of the torus with these actions."""
    h_s = nf.partial(1, 0, i_s, i_l)
    if abs(h_s) < 1e-12:
        raise DegenerateFrequency("dH/dI_s vanished")
    return -nf.partial(0, 1, i_s, i_l) / h_s


def nf_twist(nf: NormalForm, i_s: float, i_l: float) -> float:
    """Iso-energetic twist condition C = H11 H2^2 + H22 H1^2 - 2 H12 H1 H2.

    Zero exactly where the rotation number restricted to the energy level
    through (i_s, i_l) has a critical point (H = E and W = const tangent).
    """
    h1 = nf.partial(1, 0, i_s, i_l)
    h2 = nf.partial(0, 1, i_s, i_l)
    h11 = nf.partial(2, 0, i_s, i_l)
    h12 = nf.partial(1, 1, i_s, i_l)
    h22 = nf.partial(0, 2, i_s, i_l)
    return h11 * h2 * h2 + h22 * h1 * h1 - 2.0 * h12 * h1 * h2


def short_period_W_of_E(nf: NormalForm, E: float, i_s_cap: float = 1.0) -> float:
    """Rotation number of the short-period family at energy E >= 0.

    Solves H(I_s, 0) = E for the smallest positive root (safeguarded
    Newton with a bisection bracket) and evaluates the rotation number
    there.

    Raises
    ------
    NoPositiveRoot
        If the energy equation has no root in (0, i_s_cap].
    """
    if E < 0.0:
        raise NoPositiveRoot("short-period family requires E >= 0")
    if E == 0.0:
        return nf_rotation_number(nf, 0.0, 0.0)

    def f(i_s: float) -> float:
        return nf.value(i_s, 0.0) - E

    lo, hi = 0.0, min(2.0 * E / nf.omega_s, i_s_cap)
    while f(hi) < 0.0:
        hi *= 1.5
        if hi > i_s_cap:
            raise NoPositiveRoot(f"H(I_s, 0) never reaches E = {E} below the cap")
    x = E / nf.omega_s
    for _ in range(80):
        fx = f(x)
        if fx > 0.0:
            hi = x
        else:
            lo = x
        dfx = nf.partial(1, 0, x, 0.0)
        x_new = x - fx / dfx if dfx != 0.0 else 0.5 * (lo + hi)
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) < 1e-16 + 1e-14 * abs(x):
            x = x_new
            break
        x = x_new
    return nf_rotation_number(nf, x, 0.0)


@dataclass(frozen=True)
class NfVerifyReport:
    """Residuals of pushing the Taylor Hamiltonian through the generators."""

    non_action_residual: float
    imag_residue: float
    per_degree: dict[int, float]

    def __str__(self) -> str:
        lines = [
            f"non-action residual: {self.non_action_residual:.3e}",
            f"action imaginary residue: {self.imag_residue:.3e}",
        ]
        for d in sorted(self.per_degree):
            lines.append(f"  degree {d}: {self.per_degree[d]:.3e}")
        return "\n".join(lines)


def nf_verify(
    h: GradedPoly4,
    result: BirkhoffResult,
    generators: tuple[GradedPoly4, ...] | None = None,
) -> NfVerifyReport:
    """Re-apply the transformation chain and measure what is left over.

    Pushes `h` through the linear map, the complexification and the Lie
    generator sequence, then reports the largest non-action coefficient
    magnitude per degree and overall, and the largest imaginary part of
    the action coefficients.  Residuals are measured in the conditioned
    working frame of the normalization (variables scaled by SIGMA), where
    the retained coefficients are O(1).  Passing a truncated `generators`
    tuple shows the residual left by an incomplete normalization.
    """
    if generators is None:
        generators = result.generators
    hc = _hermitian_average(
        _scale_variables(h, SIGMA, SIGMA2)
        .apply_linear(result.linear_transform)
        .apply_linear(complexification_matrix())
    ).prune(PRUNE_REL_TOL)
    for w in generators:
        if w:
            hc = _lie_transform(hc, w).prune(PRUNE_REL_TOL)
    non_action = 0.0
    imag_res = 0.0
    per_degree: dict[int, float] = {}
    for (k1, k2, m1, m2), c in hc.terms():
        d = k1 + k2 + m1 + m2
        if k1 == m1 and k2 == m2:
            imag_res = max(imag_res, abs(c.imag))
        else:
            non_action = max(non_action, abs(c))
            per_degree[d] = max(per_degree.get(d, 0.0), abs(c))
    return NfVerifyReport(non_action, imag_res, per_degree)
