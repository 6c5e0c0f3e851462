import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import blochcav as bc


@pytest.fixture(scope="session")
def cubic_lattice():
    """Cubic lattice of period 2 pi: reciprocal basis is the identity."""
    two_pi = 2.0 * np.pi
    return bc.make_lattice([two_pi, 0, 0], [0, two_pi, 0], [0, 0, two_pi])


@pytest.fixture(scope="session")
def unit_lattice():
    return bc.make_lattice([1, 0, 0], [0, 1, 0], [0, 0, 1])


@pytest.fixture(scope="session")
def sphere_meshes():
    """Unit icospheres, refinements 0..3 (refinement 4 lives in acceptance)."""
    return {r: bc.make_sphere_mesh(1.0, r) for r in range(4)}


@pytest.fixture(scope="session")
def sphere_solutions(sphere_meshes):
    return {r: bc.solve_capacitance(m) for r, m in sphere_meshes.items()}


@pytest.fixture(scope="session")
def nonexceptional_context(cubic_lattice):
    return bc.make_context(cubic_lattice, np.array([0.13, 0.21, 0.34]))


@pytest.fixture(scope="session")
def exceptional_context(cubic_lattice):
    return bc.make_context(cubic_lattice, np.array([0.5, 0.0, 0.0]))
