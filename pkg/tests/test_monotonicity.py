import math

import numpy as np
import pytest

import densitylab as dl
from densitylab import catalog, monotonicity as mono, sampling
from densitylab.errors import RangeError


# --- pointwise Laplacian identity ----------------------------------------

def test_laplacian_identity_plane(plane_chart):
    pts = sampling.domain_points(plane_chart, 50, margin=0.05)
    assert np.max(mono.laplacian_defect(plane_chart, pts)) <= 1e-10


def test_laplacian_identity_curved_minimal():
    for label in ("catenoid", "enneper", "helicoid"):
        ch = catalog.get_chart(label)
        pts = sampling.domain_points(ch, 200, margin=0.05)
        assert np.max(mono.laplacian_defect(ch, pts)) <= 1e-6, label


def test_laplacian_identity_single_point(catenoid_chart):
    assert mono.laplacian_defect(catenoid_chart, np.array([0.5, 0.3])) <= 1e-6


def test_sphere_defect_visible_without_curvature_term():
    sph = catalog.get_chart("sphere")
    pts = sampling.domain_points(sph, 200, margin=0.1)
    assert np.max(mono.laplacian_defect(sph, pts)) <= 1e-6
    dropped = mono.laplacian_defect(sph, pts, include_curvature_term=False)
    # |2 x.H| = 2 rho (2/rho) = 4 on the whole sphere
    assert np.min(dropped) >= 1.0
    assert np.max(np.abs(dropped - 4.0)) <= 1e-6


# --- pinching threshold ----------------------------------------------------

def test_threshold_closed_form_values():
    assert abs(mono.chord_arc_threshold(1.0 - 1e-12, 2)
               - math.pi / 8192.0) <= 1e-12
    assert abs(mono.chord_arc_threshold(0.5, 1) - 1.0 / 384.0) <= 1e-15


def test_threshold_monotone_in_eps():
    for d in (1, 2, 3, 7):
        vals = [mono.chord_arc_threshold(e, d)
                for e in np.linspace(0.01, 0.99, 25)]
        assert np.all(np.diff(vals) > 0.0)


def test_threshold_domain():
    for bad in (0.0, 1.0, -0.2, 1.7):
        with pytest.raises(ValueError):
            mono.chord_arc_threshold(bad, 2)


# --- annulus error integral -------------------------------------------------

def test_error_integral_vanishes_on_plane(plane_mesh_field):
    mesh, field = plane_mesh_field
    grad = dl.gradient_field(mesh, field)
    ei = dl.annulus_error_integral(mesh, field, grad, 0.5, 2.0)
    tol = mono.quadrature_tolerance(mesh, field, 0.5, 2.0, ei.annulus_area)
    assert -tol <= ei.value <= 5e-3
    assert ei.dual_form_gap <= 1e-10


def test_error_integral_nonnegative_and_dual_form(catenoid_mesh_field):
    mesh, field, grad = catenoid_mesh_field
    ei = dl.annulus_error_integral(mesh, field, grad, 0.5, 2.0)
    assert ei.value >= 0.0
    assert ei.value_compact >= 0.0
    assert ei.dual_form_gap <= 1e-10
    assert ei.excluded_area_fraction <= 0.01


def test_error_integral_additivity(catenoid_mesh_field):
    mesh, field, grad = catenoid_mesh_field
    a = dl.annulus_error_integral(mesh, field, grad, 0.5, 1.2)
    b = dl.annulus_error_integral(mesh, field, grad, 1.2, 2.0)
    c = dl.annulus_error_integral(mesh, field, grad, 0.5, 2.0)
    tol = mono.quadrature_tolerance(mesh, field, 0.5, 2.0, c.annulus_area)
    assert abs(a.value + b.value - c.value) <= tol


def test_error_integral_range_errors(catenoid_mesh_field):
    mesh, field, grad = catenoid_mesh_field
    with pytest.raises(RangeError):
        dl.annulus_error_integral(mesh, field, grad, 2.0, 0.5)
    with pytest.raises(RangeError):
        dl.annulus_error_integral(mesh, field, grad, 0.5, 50.0)


# --- mean curvature term ----------------------------------------------------

def test_curvature_term_vanishes_for_minimal(catenoid_mesh_field):
    mesh, field, _ = catenoid_mesh_field
    val = dl.mean_curvature_term(mesh, mesh.chart, field, 0.5, 2.0)
    tol = mono.quadrature_tolerance(mesh, field, 0.5, 2.0, 20.0)
    assert abs(val) <= tol


def _sphere_setup():
    sph = catalog.get_chart("sphere")
    mesh = dl.triangulate(sph, 0.1, grading="graded", base_u=(np.pi / 2, 0.0))
    field = dl.distance_field(mesh, mesh.anchor_vertex)
    return sph, mesh, field


def test_curvature_term_negative_on_sphere_and_stable_in_nt():
    sph, mesh, field = _sphere_setup()
    v16 = dl.mean_curvature_term(mesh, sph, field, 0.5, 2.0, n_t=16)
    v32 = dl.mean_curvature_term(mesh, sph, field, 0.5, 2.0, n_t=32)
    assert v16 < 0.0
    tol = mono.quadrature_tolerance(mesh, field, 0.5, 2.0, 10.0)
    assert abs(v32 - v16) <= 0.5 * tol
    # direct fine quadrature oracle: x.H with x from a point on the sphere
    # equals (|x|^2 rho^2 - ...) -- checked instead against the identity
    # residual test below, which pins the sign and the magnitude jointly


def test_residual_small_on_plane(plane_mesh_field):
    mesh, field = plane_mesh_field
    grad = dl.gradient_field(mesh, field)
    rep = dl.monotonicity_residual(mesh, mesh.chart, field, grad, 0.5, 2.0)
    assert abs(rep.lhs) <= 5e-3
    assert abs(rep.residual) <= 5e-3
    assert all(f.status == "PASS" for f in rep.findings)


def test_residual_needs_curvature_term_on_sphere():
    sph, mesh, field = _sphere_setup()
    grad = dl.gradient_field(mesh, field)
    with_h = dl.monotonicity_residual(mesh, sph, field, grad, 0.5, 2.0)
    without = dl.monotonicity_residual(mesh, sph, field, grad, 0.5, 2.0,
                                       include_curvature_term=False)
    assert with_h.h_term < 0.0
    assert abs(without.residual) >= 10.0 * abs(with_h.residual)
    assert with_h.lhs < 0.0  # decreasing density on the control surface


def test_residual_decreases_under_refinement(catenoid_chart):
    mesh = dl.triangulate(catenoid_chart, 0.18, grading="graded",
                          base_u=(0.0, 0.0))
    vals = []
    for level in range(2):
        if level:
            mesh = dl.refine(mesh)
        field = dl.distance_field(mesh, mesh.anchor_vertex)
        grad = dl.gradient_field(mesh, field)
        rep = dl.monotonicity_residual(mesh, catenoid_chart, field, grad,
                                       0.5, 2.0)
        assert rep.error_integral >= 0.0
        vals.append(abs(rep.residual))
    assert vals[1] <= vals[0] / 1.5


# --- lower bound and chord-arc ----------------------------------------------

def test_lower_bound_minimal_and_control(catenoid_mesh_field):
    mesh, field, _ = catenoid_mesh_field
    prof = dl.density_profile(mesh, field, [0.4, 0.8, 1.6, 2.8])
    fin = dl.lower_bound_check(prof)
    assert fin.status == "PASS"
    assert fin.values["min_margin"] >= -prof.tol_profile

    sph, ms, fs = _sphere_setup()
    prof_s = dl.density_profile(ms, fs, [0.5, 1.0, 2.0])
    skip = dl.lower_bound_check(prof_s)
    assert skip.status == "WARN" and "non-minimal" in skip.message


def test_chord_arc_plane_hypothesis_and_conclusion(plane_fine_mesh_field):
    mesh, field = plane_fine_mesh_field
    prof = dl.density_profile(mesh, field, [0.5, 4.0])
    cert = dl.chord_arc_check(mesh, field, prof, 0.5, 0.9)
    assert cert.hypothesis_met          # measured gap below delta(0.9, 2)
    assert cert.conclusion_met
    assert not cert.violated
    assert cert.worst_ratio <= 1.0 + cert.tol_ca + 1e-12
    assert cert.worst_ratio >= 1.0 - cert.tol_ca - 1e-12


def test_chord_arc_exact_profile_trivial_case(plane_mesh_field):
    # analytic profile: both densities exactly pi, so the gap is exactly 0
    mesh, field = plane_mesh_field  # coarser mesh: the gap is analytic
    from densitylab.density import DensityProfile
    prof = DensityProfile(
        radii=np.array([0.5, 4.0]), m_int=np.array([math.pi, math.pi]),
        m_ext=np.array([math.pi, math.pi]), guard_radius=4.5, guard_int=4.5,
        guard_ext=4.5, d=2, base_vertex=field.base_vertex,
        base_x=field.base_x, solver_error=field.solver_error,
        tol_profile=1e-6, chart_label="plane", is_minimal=True)
    cert = dl.chord_arc_check(mesh, field, prof, 0.5, 0.1)
    assert cert.density_gap == 0.0
    assert cert.hypothesis_met and cert.conclusion_met


def test_chord_arc_never_violated_on_catalog(catenoid_mesh_field):
    mesh, field, _ = catenoid_mesh_field
    prof = dl.density_profile(mesh, field, [0.35, 2.8])
    for eps in (0.2, 0.5, 0.9):
        cert = dl.chord_arc_check(mesh, field, prof, 0.35, eps)
        assert not cert.violated
        assert cert.worst_ratio >= 1.0 - cert.tol_ca - 1e-12


def test_chord_arc_range_error(catenoid_mesh_field):
    mesh, field, _ = catenoid_mesh_field
    with pytest.raises(RangeError):
        dl.chord_arc_check(mesh, field, None, 1.0, 0.5)  # 8R beyond guard


def test_sandwich_implied_by_passing_certificate(plane_fine_mesh_field):
    # metamorphic link: a non-vacuously passing certificate at (R, eps)
    # forbids a sandwich failure at the same radius
    mesh, field = plane_fine_mesh_field
    prof = dl.density_profile(mesh, field, [0.5, 4.0])
    cert = dl.chord_arc_check(mesh, field, prof, 0.5, 0.9)
    if cert.hypothesis_met and cert.conclusion_met:
        fin = dl.ball_sandwich_check(mesh, field, 0.5, 0.9)
        assert fin.status == "PASS"
