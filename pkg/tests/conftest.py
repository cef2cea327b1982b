import numpy as np
import pytest

import densitylab as dl
from densitylab import catalog


@pytest.fixture(scope="session", autouse=True)
def warm_numba_kernels():
    """Compile the marching kernels once, outside any timed test."""
    plane = catalog.plane_chart(half_width=1.0)
    mesh = dl.triangulate(plane, 0.5)
    dl.distance_field(mesh, mesh.anchor_vertex, calibrate=False)


@pytest.fixture(scope="session")
def plane_chart():
    return catalog.get_chart("plane")


@pytest.fixture(scope="session")
def catenoid_chart():
    return catalog.get_chart("catenoid")


@pytest.fixture(scope="session")
def plane_mesh_field():
    """Graded plane mesh with its distance field (shared, moderate size)."""
    chart = catalog.get_chart("plane")
    mesh = dl.triangulate(chart, 0.1, grading="graded", base_u=(0.0, 0.0))
    field = dl.distance_field(mesh, mesh.anchor_vertex)
    return mesh, field


@pytest.fixture(scope="session")
def plane_fine_mesh_field():
    """Finer graded plane mesh; needed where clipping bias must sit below
    the chord-arc pinching threshold."""
    chart = catalog.get_chart("plane")
    mesh = dl.triangulate(chart, 0.05, grading="graded", base_u=(0.0, 0.0))
    field = dl.distance_field(mesh, mesh.anchor_vertex)
    return mesh, field


@pytest.fixture(scope="session")
def catenoid_mesh_field():
    """Graded catenoid mesh based at the neck, with field and gradient."""
    chart = catalog.get_chart("catenoid")
    mesh = dl.triangulate(chart, 0.12, grading="graded", base_u=(0.0, 0.0))
    field = dl.distance_field(mesh, mesh.anchor_vertex)
    grad = dl.gradient_field(mesh, field)
    return mesh, field, grad
