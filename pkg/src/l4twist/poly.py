"""Truncated multivariate polynomials in 4 variables with complex coefficients.

The workhorse of the normal-form computation.  A polynomial is a mapping
from exponent 4-tuples to complex coefficients, graded by total degree and
truncated at a fixed ``max_degree``: products drop terms beyond the bound
by construction (explicit truncation, never silent overflow), and mixing
different truncation orders raises.

Two Poisson structures are provided for the two variable conventions used
along the normalization pipeline:

* real canonical variables ordered (q1, q2, p1, p2):
  ``{F, G} = sum_k dF/dq_k dG/dp_k - dF/dp_k dG/dq_k``
* complexified variables ordered (z1, z2, zb1, zb2) with z = (q + i p)/sqrt(2):
  ``{F, G} = -i sum_k (dF/dz_k dG/dzb_k - dF/dzb_k dG/dz_k)``
"""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

__all__ = ["GradedPoly4", "complexification_matrix", "realification_matrix"]

_ZERO = (0, 0, 0, 0)


class GradedPoly4:
    """Degree-truncated polynomial in 4 variables over the complex numbers."""

    __slots__ = ("coeffs", "max_degree")

    def __init__(self, coeffs: dict | None = None, max_degree: int = 8):
        self.max_degree = int(max_degree)
        self.coeffs: dict[tuple[int, int, int, int], complex] = {}
        if coeffs:
            for exps, c in coeffs.items():
                if c != 0 and sum(exps) <= self.max_degree:
                    self.coeffs[tuple(exps)] = complex(c)

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, max_degree: int = 8) -> "GradedPoly4":
        return cls({}, max_degree)

    @classmethod
    def constant(cls, c: complex, max_degree: int = 8) -> "GradedPoly4":
        return cls({_ZERO: c}, max_degree)

    @classmethod
    def variable(cls, i: int, max_degree: int = 8) -> "GradedPoly4":
        exps = [0, 0, 0, 0]
        exps[i] = 1
        return cls({tuple(exps): 1.0}, max_degree)

    @classmethod
    def linear_form(cls, row, max_degree: int = 8) -> "GradedPoly4":
        """sum_j row[j] * x_j."""
        out = {}
        for j, c in enumerate(row):
            if c != 0:
                exps = [0, 0, 0, 0]
                exps[j] = 1
                out[tuple(exps)] = complex(c)
        return cls(out, max_degree)

    def copy(self) -> "GradedPoly4":
        out = GradedPoly4.zero(self.max_degree)
        out.coeffs = dict(self.coeffs)
        return out

    # -- ring operations ----------------------------------------------

    def _check_compatible(self, other: "GradedPoly4") -> None:
        if self.max_degree != other.max_degree:
            raise ValueError(
                f"mixed truncation orders {self.max_degree} and {other.max_degree}"
            )

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = GradedPoly4.constant(other, self.max_degree)
        self._check_compatible(other)
        out = dict(self.coeffs)
        for exps, c in other.coeffs.items():
            val = out.get(exps, 0.0) + c
            if val == 0:
                out.pop(exps, None)
            else:
                out[exps] = val
        res = GradedPoly4.zero(self.max_degree)
        res.coeffs = out
        return res

    __radd__ = __add__

    def __neg__(self):
        res = GradedPoly4.zero(self.max_degree)
        res.coeffs = {e: -c for e, c in self.coeffs.items()}
        return res

    def __sub__(self, other):
        if isinstance(other, (int, float, complex)):
            other = GradedPoly4.constant(other, self.max_degree)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            res = GradedPoly4.zero(self.max_degree)
            if other != 0:
                res.coeffs = {e: c * other for e, c in self.coeffs.items()}
            return res
        self._check_compatible(other)
        cap = self.max_degree
        out: dict[tuple[int, int, int, int], complex] = {}
        for e1, c1 in self.coeffs.items():
            d1 = e1[0] + e1[1] + e1[2] + e1[3]
            for e2, c2 in other.coeffs.items():
                if d1 + e2[0] + e2[1] + e2[2] + e2[3] > cap:
                    continue
                key = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3])
                out[key] = out.get(key, 0.0) + c1 * c2
        res = GradedPoly4.zero(cap)
        res.coeffs = {e: c for e, c in out.items() if c != 0}
        return res

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not (isinstance(n, int) and n >= 0):
            raise ValueError("only non-negative integer powers")
        result = GradedPoly4.constant(1.0, self.max_degree)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if not isinstance(other, GradedPoly4):
            return NotImplemented
        return self.max_degree == other.max_degree and self.coeffs == other.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def __repr__(self):
        n = len(self.coeffs)
        return f"GradedPoly4({n} terms, max_degree={self.max_degree})"

    # -- structure ------------------------------------------------------

    def terms(self) -> Iterator[tuple[tuple[int, int, int, int], complex]]:
        return iter(self.coeffs.items())

    def degree_part(self, d: int) -> "GradedPoly4":
        res = GradedPoly4.zero(self.max_degree)
        res.coeffs = {e: c for e, c in self.coeffs.items() if sum(e) == d}
        return res

    def degrees(self) -> set[int]:
        return {sum(e) for e in self.coeffs}

    def truncate(self, degree: int) -> "GradedPoly4":
        """Copy keeping only terms of total degree <= degree (same grading cap)."""
        res = GradedPoly4.zero(self.max_degree)
        res.coeffs = {e: c for e, c in self.coeffs.items() if sum(e) <= degree}
        return res

    def max_abs(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def prune(self, rel_tol: float = 1e-14) -> "GradedPoly4":
        """Drop coefficients below rel_tol times the largest same-degree magnitude."""
        scale: dict[int, float] = {}
        for e, c in self.coeffs.items():
            d = sum(e)
            scale[d] = max(scale.get(d, 0.0), abs(c))
        res = GradedPoly4.zero(self.max_degree)
        res.coeffs = {
            e: c for e, c in self.coeffs.items() if abs(c) >= rel_tol * scale[sum(e)]
        }
        return res

    # -- calculus -------------------------------------------------------

    def diff(self, i: int) -> "GradedPoly4":
        out = {}
        for e, c in self.coeffs.items():
            if e[i] > 0:
                new = list(e)
                new[i] -= 1
                out[tuple(new)] = c * e[i]
        res = GradedPoly4.zero(self.max_degree)
        res.coeffs = out
        return res

    def poisson_real(self, other: "GradedPoly4") -> "GradedPoly4":
        """{self, other} for canonical ordering (q1, q2, p1, p2)."""
        self._check_compatible(other)
        out = GradedPoly4.zero(self.max_degree)
        for q, p in ((0, 2), (1, 3)):
            out = out + self.diff(q) * other.diff(p) - self.diff(p) * other.diff(q)
        return out

    def poisson_complex(self, other: "GradedPoly4") -> "GradedPoly4":
        """{self, other} for complexified ordering (z1, z2, zb1, zb2)."""
        self._check_compatible(other)
        out = GradedPoly4.zero(self.max_degree)
        for z, zb in ((0, 2), (1, 3)):
            out = out + self.diff(z) * other.diff(zb) - self.diff(zb) * other.diff(z)
        return out * complex(0.0, -1.0)

    def hermitian_transpose(self) -> "GradedPoly4":
        """Swap z <-> zbar exponents and conjugate coefficients.

        A polynomial representing a real function in the complexified
        variables is invariant under this involution.
        """
        out = {}
        for (k1, k2, m1, m2), c in self.coeffs.items():
            out[(m1, m2, k1, k2)] = c.conjugate()
        res = GradedPoly4.zero(self.max_degree)
        res.coeffs = out
        return res

    # -- substitution and evaluation -------------------------------------

    def apply_linear(self, L) -> "GradedPoly4":
        """Substitute x_i -> sum_j L[i, j] * x'_j (L a 4x4 array-like)."""
        L = np.asarray(L, dtype=complex)
        forms = [GradedPoly4.linear_form(L[i], self.max_degree) for i in range(4)]
        # cache powers of each substituted variable
        max_exp = [0, 0, 0, 0]
        for e in self.coeffs:
            for i in range(4):
                max_exp[i] = max(max_exp[i], e[i])
        powers = []
        for i in range(4):
            row = [GradedPoly4.constant(1.0, self.max_degree)]
            for _ in range(max_exp[i]):
                row.append(row[-1] * forms[i])
            powers.append(row)
        out = GradedPoly4.zero(self.max_degree)
        for e, c in self.coeffs.items():
            term = GradedPoly4.constant(c, self.max_degree)
            for i in range(4):
                if e[i]:
                    term = term * powers[i][e[i]]
            out = out + term
        return out

    def evaluate(self, values) -> complex:
        vals = [complex(v) for v in values]
        total = 0.0 + 0.0j
        for e, c in self.coeffs.items():
            term = c
            for i in range(4):
                if e[i]:
                    term *= vals[i] ** e[i]
            total += term
        return total


def complexification_matrix() -> np.ndarray:
    """Rows express (q1, q2, p1, p2) in the complex variables (z1, z2, zb1, zb2).

    q_k = (z_k + zb_k)/sqrt(2),  p_k = -i (z_k - zb_k)/sqrt(2); the induced
    bracket is {z, zb} = -i (see poisson_complex).
    """
    r = 1.0 / math.sqrt(2.0)
    i = 1.0j
    return np.array(
        [
            [r, 0, r, 0],
            [0, r, 0, r],
            [-i * r, 0, i * r, 0],
            [0, -i * r, 0, i * r],
        ],
        dtype=complex,
    )


def realification_matrix() -> np.ndarray:
    """Rows express (z1, z2, zb1, zb2) in (q1, q2, p1, p2): z = (q + i p)/sqrt(2)."""
    r = 1.0 / math.sqrt(2.0)
    i = 1.0j
    return np.array(
        [
            [r, 0, i * r, 0],
            [0, r, 0, i * r],
            [r, 0, -i * r, 0],
            [0, r, 0, -i * r],
        ],
        dtype=complex,
    )
