"""Exception taxonomy shared by all l4twist modules.

Every failure mode that callers are expected to branch on gets its own
class; generic programming errors stay ValueError/TypeError.
"""


class L4TwistError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidParameter(L4TwistError):
    """A parameter is outside its mathematically valid range."""


class HyperbolicEquilibrium(InvalidParameter):
    """Mass ratio at or above the linear stability bound of the triangular point."""


class NonFiniteValue(L4TwistError):
    """Evaluation hit a pole (collision with a primary) or produced NaN/inf."""


class BranchPoint(L4TwistError):
    """Configuration point coincides with a primary; the conformal chart degenerates."""


class StepFailure(L4TwistError):
    """An integrator stage produced a non-finite value."""


class DriftExceeded(L4TwistError):
    """Conserved quantity drifted beyond the configured tolerance."""


class MaxStepsExceeded(L4TwistError):
    """Step budget exhausted before the stopping condition was met."""


class NotOnSection(L4TwistError):
    """State does not satisfy the section equation to tolerance."""


class ForbiddenRegion(L4TwistError):
    """Section point lies outside the region energetically accessible at this energy."""


class NewtonDiverged(L4TwistError):
    """Newton iteration failed to converge."""


class HyperbolicFixedPoint(L4TwistError):
    """Fixed point found, but its linearization is not elliptic."""


class CurveNotEncircling(L4TwistError):
    """Iterates do not wind around the reference center; no rotation number."""


class InsufficientIterates(L4TwistError):
    """Too few map iterates for the requested estimate."""


class ResonanceTooClose(L4TwistError):
    """A small denominator fell below the floor during normalization.

    Attributes
    ----------
    k : tuple[int, int]
        Integer combination (k1, k2) whose frequency mismatch is small.
    denominator : float
        The offending value of k1*omega_s - k2*omega_l.
    """

    def __init__(self, k, denominator):
        self.k = k
        self.denominator = denominator
        super().__init__(
            f"small denominator {denominator:.3e} for combination {k}"
        )


class DefectiveSpectrum(L4TwistError):
    """Linearization eigenvalues too close to collision for a clean mode split."""


class DegenerateFrequency(L4TwistError):
    """Frequency in the denominator of the rotation number vanished."""


class NoPositiveRoot(L4TwistError):
    """Energy equation has no positive-action solution."""


class NoSignChange(L4TwistError):
    """Bracketing interval does not straddle a root."""


class NoTwistlessCurve(L4TwistError):
    """The twist function has no zero inside the searched action region."""


class NoSolution(L4TwistError):
    """Nonlinear solve found no admissible solution."""
