"""Shared fixtures: small meshes and spaces reused across test modules."""

import numpy as np
import pytest

from polysn import DgSpace, PolyMesh, Rectangle, generate_voronoi


@pytest.fixture(scope="session")
def unit_square_mesh():
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    return PolyMesh.from_polygons(Rectangle(0.0, 0.0, 1.0, 1.0), [square])


@pytest.fixture(scope="session")
def small_mesh():
    """32-cell Lloyd-smoothed Voronoi mesh on the benchmark domain."""
    return generate_voronoi(Rectangle(0.0, 0.0, 10.0, 10.0), 32, seed=2025,
                            lloyd_iterations=5)


@pytest.fixture(scope="session")
def small_space(small_mesh):
    return DgSpace(small_mesh, 1)


@pytest.fixture(scope="session")
def mesh_64():
    return generate_voronoi(Rectangle(0.0, 0.0, 10.0, 10.0), 64, seed=2025,
                            lloyd_iterations=10)


@pytest.fixture(scope="session")
def baseline_mesh_1024():
    """Paper-sized mesh; shared by the slow statistics and accuracy tests."""
    return generate_voronoi(Rectangle(0.0, 0.0, 10.0, 10.0), 1024, seed=2025,
                            lloyd_iterations=10)
