import numpy as np
import pytest
import scipy.integrate

import densitylab as dl
from densitylab import catalog, meshing
from densitylab.errors import DomainError, ResourceLimitError

# closed-form catenoid patch area: 2 pi * int cosh^2 over [-2, 2]
CATENOID_AREA = 2.0 * np.pi * scipy.integrate.quad(
    lambda v: np.cosh(v) ** 2, -2.0, 2.0)[0]


def _edge_use_counts(mesh):
    n = mesh.n_vertices
    a = mesh.tris[:, [1, 2, 0]].reshape(-1)
    b = mesh.tris[:, [2, 0, 1]].reshape(-1)
    key = np.minimum(a, b) * n + np.maximum(a, b)
    _, counts = np.unique(key, return_counts=True)
    return counts


def test_plane_uniform_grid_counts(plane_chart):
    mesh = dl.triangulate(plane_chart, 0.1)
    assert np.all(mesh.edge_len <= 0.15 + 1e-12)
    assert 20000 / 4 <= mesh.n_triangles <= 20000 * 4
    assert abs(mesh.total_area - 100.0) <= 1e-9


def test_h_postcondition_across_catalog():
    cases = [("plane", None), ("catenoid", (0.0, 0.0)),
             ("helicoid", (0.0, 0.0)), ("sphere", (np.pi / 2, 0.0)),
             ("enneper", (0.0, 0.0))]
    for label, base in cases:
        mesh = dl.triangulate(catalog.get_chart(label), 0.2, base_u=base)
        assert mesh.h <= 1.5 * 0.2 + 1e-12, label


def test_catenoid_area_against_quadrature_oracle(catenoid_chart):
    mesh = dl.triangulate(catenoid_chart, 0.1, base_u=(0.0, 0.0))
    assert abs(mesh.total_area - CATENOID_AREA) <= 0.005 * CATENOID_AREA


def test_manifold_complex_everywhere():
    for label, base in [("catenoid", (0.0, 0.0)), ("enneper", (0.0, 0.0)),
                        ("sphere", (np.pi / 2, 0.0))]:
        mesh = dl.triangulate(catalog.get_chart(label), 0.25, base_u=base)
        counts = _edge_use_counts(mesh)
        assert np.all((counts == 1) | (counts == 2)), label
        if label == "sphere":
            assert mesh.is_closed
        else:
            assert not mesh.is_closed


def test_edge_length_dominates_chord_on_all_edges(catenoid_mesh_field):
    mesh, _, _ = catenoid_mesh_field
    chord = np.linalg.norm(mesh.vertex_x[mesh.edges[:, 0]]
                           - mesh.vertex_x[mesh.edges[:, 1]], axis=1)
    assert np.all(mesh.edge_len >= chord - 1e-8 * mesh.edge_len)


def test_positive_intrinsic_areas(catenoid_mesh_field):
    mesh, _, _ = catenoid_mesh_field
    assert np.all(mesh.tri_area > 0.0)


def test_edge_length_op(plane_chart, catenoid_chart):
    assert abs(dl.edge_length(plane_chart, (0.0, 0.0), (3.0, 4.0)) - 5.0) <= 1e-12
    # small theta step at the neck: cosh(0) = 1, length = dt + O(dt^3)
    dt = 1e-3
    ln = dl.edge_length(catenoid_chart, (0.0, 0.0), (0.0, dt))
    assert abs(ln - dt) <= 10.0 * dt ** 3
    # chord-arc direction
    a, b = np.array([0.5, 0.3]), np.array([1.2, 0.8])
    xa = dl.evaluate(catenoid_chart, a)
    xb = dl.evaluate(catenoid_chart, b)
    assert dl.edge_length(catenoid_chart, a, b) >= np.linalg.norm(xa - xb)


def test_edge_length_outside_domain(plane_chart):
    with pytest.raises(DomainError):
        dl.edge_length(plane_chart, (0.0, 0.0), (7.0, 0.0))


def test_refine_halves_h_and_keeps_boundary(catenoid_chart):
    mesh = dl.triangulate(catenoid_chart, 0.25, base_u=(0.0, 0.0))
    fine = dl.refine(mesh)
    assert fine.h <= 0.6 * mesh.h
    # original boundary vertices keep their ids and stay on the boundary
    assert set(mesh.boundary_vertices).issubset(set(fine.boundary_vertices))
    assert fine.n_triangles == 4 * mesh.n_triangles
    # midpoints re-evaluated through the chart: new vertices satisfy the map
    new = fine.vertex_u[mesh.n_vertices:]
    assert np.allclose(fine.vertex_x[mesh.n_vertices:],
                       catenoid_chart.eval(new), atol=1e-12)


def test_area_second_order_under_refinement(catenoid_chart):
    mesh = dl.triangulate(catenoid_chart, 0.4, base_u=(0.0, 0.0))
    areas = [mesh.total_area]
    for _ in range(2):
        mesh = dl.refine(mesh)
        areas.append(mesh.total_area)
    errs = np.abs(np.asarray(areas) - CATENOID_AREA)
    orders = np.log2(errs[:-1] / errs[1:])
    assert np.all(orders >= 1.8)


def test_graded_mesh_refines_near_base(plane_chart):
    mesh = dl.triangulate(plane_chart, 0.2, grading="graded",
                          base_u=(0.0, 0.0))
    near = np.linalg.norm(mesh.vertex_u[mesh.edges[:, 0]], axis=1) < 0.15
    assert np.max(mesh.edge_len[near]) <= 0.2 / 4.0 + 1e-12
    assert mesh.vertex_u[mesh.anchor_vertex] @ mesh.vertex_u[mesh.anchor_vertex] == 0.0


def test_graded_needs_base():
    with pytest.raises(ValueError):
        dl.triangulate(catalog.get_chart("plane"), 0.2, grading="graded")


def test_vertex_budget():
    with pytest.raises(ResourceLimitError):
        dl.triangulate(catalog.get_chart("plane"), 0.2, vertex_budget=100)


def test_export_import_roundtrip(tmp_path, catenoid_chart):
    mesh = dl.triangulate(catenoid_chart, 0.3, base_u=(0.0, 0.0))
    path = tmp_path / "cat.mesh"
    dl.export_mesh(mesh, path)
    back = dl.import_mesh(path)
    assert back.chart_label == "catenoid"
    for attr in ("vertex_u", "vertex_x", "tris", "tri_u", "edges", "edge_len"):
        assert np.array_equal(getattr(mesh, attr), getattr(back, attr)), attr
    assert back.h == mesh.h
    assert np.array_equal(np.sort(back.boundary_vertices),
                          np.sort(mesh.boundary_vertices))
    # imported mesh is fully usable
    fine = dl.refine(back)
    assert fine.n_triangles == 4 * mesh.n_triangles
