"""Shared fixtures: the expensive section-map artifacts are computed once.

The profile at (0.00914, 0.02) and the 1e4-crossing island stream at
(0.01, 0.02) are reused by both the module tests and the acceptance
gate, which keeps the full suite inside its time budget.
"""

import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from l4twist.rotation import find_fixed_point, island_radius, rotation_profile
from l4twist.section import crossing_stream_max_drift


@pytest.fixture(scope="session")
def fp_001_002():
    """Short-period fixed point at (mu, E) = (0.01, 0.02)."""
    return find_fixed_point(0.01, 0.02)


@pytest.fixture(scope="session")
def fp_00914_002():
    """Short-period fixed point at the Fig.-4 parameters (0.00914, 0.02)."""
    return find_fixed_point(0.00914, 0.02)


@pytest.fixture(scope="session")
def radius_00914(fp_00914_002):
    return island_radius(0.00914, 0.02, fp_00914_002.point)


@pytest.fixture(scope="session")
def profile_00914(fp_00914_002, radius_00914):
    """24-seed, 1024-crossing rotation profile at (0.00914, 0.02)."""
    center = fp_00914_002.point
    seeds = [
        replace(center, a=center.a + f * radius_00914)
        for f in np.linspace(0.08, 0.95, 24)
    ]
    return rotation_profile(0.00914, 0.02, seeds=seeds, center=center, n_crossings=1024)


@pytest.fixture(scope="session")
def island_stream_001(fp_001_002):
    """1e4 island crossings at (0.01, 0.02) with the observed max |K|."""
    seed = replace(fp_001_002.point, a=fp_001_002.point.a + 0.015)
    return crossing_stream_max_drift(seed, 0.01, 10_000)
