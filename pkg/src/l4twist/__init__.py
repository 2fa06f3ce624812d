"""Twist analysis of the planar CR3BP near the triangular point L4.

Regularized trajectory integration, Poincaré return maps through the
heavy-primary/L4 line, rotation-number and action profiles of island
curves, a numerically-coefficient Birkhoff normal form to degree 8, and
the twistless/reconnection bifurcation loci in the (mu, E) parameter
plane.
"""

__version__ = "0.1.0"

from .dynamics import (
    MU1,
    MU3,
    MU4,
    Frequencies,
    RegularizedState,
    RotatingState,
    energy_regularized,
    energy_rotating,
    frequencies,
    from_regularized,
    jacobi_constant,
    lagrange_point,
    mass_ratio_for_resonance,
    to_regularized,
    vector_field_regularized,
    vector_field_rotating,
)
from .errors import L4TwistError
from .integrate import IntegratorConfig, default_config, propagate, rk4_step
from .normalform import (
    NormalForm,
    birkhoff_normalize,
    nf_rotation_number,
    nf_twist,
    nf_verify,
    normal_form,
    short_period_W_of_E,
    taylor_at_L4,
)
from .poly import GradedPoly4
from .rotation import (
    action_of_curve,
    find_fixed_point,
    fixed_point_rotation_number,
    rotation_number_of_curve,
    rotation_profile,
    sample_curve,
)
from .scan import SweepSpec, run_sweep
from .section import (
    SectionPoint,
    crossing_stream,
    poincare_return,
    section_lift,
    section_project,
    section_value,
)
from .twist import (
    action_action_chart,
    critical_mass_ratio,
    farey_levels,
    reconnection_locus_nf,
    reconnection_search_numeric,
    twistless_curve,
)
