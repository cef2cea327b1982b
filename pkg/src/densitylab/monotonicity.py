"""Checks built around the exact density-increment identity.

The increment of the intrinsic density between two radii equals a
nonnegative annulus integral plus a mean-curvature term; minimality kills
the curvature term and makes the density monotone with an explicit error
integrand. This module evaluates both sides discretely, the pointwise
Laplacian identity behind them, the resulting lower density bound, and the
chord-arc certificate whose threshold the density gap controls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import clipping
from .catalog import mean_curvature_at
from .density import (intrinsic_density, intrinsic_guard, profile_tolerance,
                      radius_resolvable, unit_ball_volume)
from .errors import RangeError
from .findings import Finding

DUAL_FORM_TOL = 1e-10


# ---------------------------------------------------------------------------
# pointwise Laplacian identity
# ---------------------------------------------------------------------------

def laplacian_defect(chart, u, include_curvature_term=True, h_fd=None):
    """|surface Laplacian of |x|^2  -  (2d + 2 x.H)| at parameter points.

    The Laplacian side is computed in divergence form from first-derivative
    data alone (central differences of sqrt(g) g^{ij} d_j |x|^2), so it is
    an independent cross-check of the mean-curvature vector built from
    second derivatives. Dropping the curvature term must leave a visible
    defect on non-minimal control surfaces.

    u may be a single point or an (m, 2) batch; returns float or (m,) array.
    """
    pts = np.atleast_2d(np.asarray(u, float))
    single = np.asarray(u).ndim == 1
    if h_fd is None:
        h_fd = chart.h_fd

    def flux(p):
        J = chart.jacobian(p)           # (m,N,2)
        x = chart.eval(p)               # (m,N)
        g = np.einsum("mni,mnj->mij", J, J)
        det = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] * g[:, 1, 0]
        ginv = np.linalg.inv(g)
        df = 2.0 * np.einsum("mn,mnj->mj", x, J)   # d_j |x|^2
        return np.sqrt(det)[:, None] * np.einsum("mij,mj->mi", ginv, df)

    div = np.zeros(pts.shape[0])
    for axis in range(2):
        dp = np.zeros_like(pts)
        dp[:, axis] = h_fd
        div += (flux(pts + dp)[:, axis] - flux(pts - dp)[:, axis]) / (2.0 * h_fd)
    J = chart.jacobian(pts)
    g = np.einsum("mni,mnj->mij", J, J)
    det = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] * g[:, 1, 0]
    lapl = div / np.sqrt(det)

    rhs = np.full(pts.shape[0], 2.0 * chart.d, float)
    if include_curvature_term:
        x = chart.eval(pts)
        H = mean_curvature_at(chart, pts)
        rhs = rhs + 2.0 * np.einsum("mn,mn->m", x, H)
    defect = np.abs(lapl - rhs)
    return float(defect[0]) if single else defect


# ---------------------------------------------------------------------------
# annulus error integral and curvature term
# ---------------------------------------------------------------------------

@dataclass
class AnnulusIntegral:
    value: float                 # expanded integrand form
    value_compact: float         # (r - x.nu)/r^(d+1) form
    dual_form_gap: float         # max pointwise disagreement of the forms
    annulus_area: float
    excluded_area_fraction: float


def annulus_error_integral(mesh, field, grad, R1, R2):
    """Midpoint quadrature of the monotonicity error integrand over
    {R1 <= r <= R2}, with exact linear clipping at the annulus boundary.

    Integrand: [(r - |x|) + (|x|/2)|x/|x| - nu|^2] / r^(d+1), which must
    agree with (r - x.nu)/r^(d+1) to DUAL_FORM_TOL pointwise (algebraic
    identity for unit nu). Invalid (critical) triangles are excluded and
    their annulus-area share reported.
    """
    _check_annulus(mesh, field, R1, R2)
    rr = field.r[mesh.tris]
    frac, bary = clipping.band(rr, R1, R2)
    hit = frac > 0.0
    area_all = float(np.dot(frac, mesh.tri_area))
    sel = hit & grad.valid
    if area_all > 0.0:
        excluded = float(np.dot(frac[hit & ~grad.valid],
                                mesh.tri_area[hit & ~grad.valid]) / area_all)
    else:
        excluded = 0.0
    if not np.any(sel):
        return AnnulusIntegral(0.0, 0.0, 0.0, area_all, excluded)

    w = frac[sel] * mesh.tri_area[sel]
    b = bary[sel]
    r_c = np.einsum("tc,tc->t", b, rr[sel])
    xc = np.einsum("tc,tcn->tn", b, mesh.vertex_x[mesh.tris[sel]] - field.base_x)
    ax = np.linalg.norm(xc, axis=1)
    ax_safe = np.maximum(ax, 1e-300)
    nu = grad.nu[sel]
    xhat = xc / ax_safe[:, None]
    sq = np.einsum("tn,tn->t", xhat - nu, xhat - nu)
    num_a = (r_c - ax) + 0.5 * ax * sq
    num_b = r_c - np.einsum("tn,tn->t", xc, nu)
    wgt = w / r_c ** (mesh.d + 1)
    val_a = float(np.dot(num_a, wgt))
    val_b = float(np.dot(num_b, wgt))
    gap = float(np.max(np.abs(num_a - num_b))) if num_a.size else 0.0
    return AnnulusIntegral(value=val_a, value_compact=val_b,
                           dual_form_gap=gap, annulus_area=area_all,
                           excluded_area_fraction=excluded)


def _check_annulus(mesh, field, R1, R2):
    if not (0.0 < R1 < R2):
        raise RangeError("need 0 < R1 < R2")
    if R2 > intrinsic_guard(mesh, field) + 1e-12:
        raise RangeError(f"R2={R2:g} beyond the intrinsic guard radius")
    if not radius_resolvable(mesh, field.r, R1):
        raise RangeError(f"R1={R1:g} below the small-radius cutoff")


def mean_curvature_term(mesh, chart, field, R1, R2, n_t=16):
    """Composite-Simpson outer integral of the ball integral of x.H / t^(d+1).

    n_t is the subinterval count (rounded up to even, at least 8); the inner
    integrals use the same clipped-triangle midpoint rule as the densities,
    with H evaluated from the chart at the clipped-region centroid.
    """
    _check_annulus(mesh, field, R1, R2)
    n_t = max(8, int(n_t))
    if n_t % 2:
        n_t += 1
    ts = np.linspace(R1, R2, n_t + 1)
    wts = np.ones(n_t + 1)
    wts[1:-1:2] = 4.0
    wts[2:-1:2] = 2.0
    wts *= (R2 - R1) / n_t / 3.0

    rr = field.r[mesh.tris]
    inner = np.zeros(n_t + 1)
    for j, t in enumerate(ts):
        frac, bary = clipping.sublevel(rr, t)
        sel = frac > 0.0
        if not np.any(sel):
            continue
        b = bary[sel]
        u_c = np.einsum("tc,tcu->tu", b, mesh.tri_u[sel])
        x_c = chart.eval(u_c) - field.base_x
        H_c = mean_curvature_at(chart, u_c)
        xdh = np.einsum("tn,tn->t", x_c, H_c)
        inner[j] = np.dot(xdh, frac[sel] * mesh.tri_area[sel]) / t ** (mesh.d + 1)
    return float(np.dot(wts, inner))


# ---------------------------------------------------------------------------
# residual assembly
# ---------------------------------------------------------------------------

@dataclass
class ResidualReport:
    R1: float
    R2: float
    lhs: float                   # density increment between the two radii
    error_integral: float
    h_term: float
    residual: float
    dual_form_gap: float
    annulus_area: float
    excluded_area_fraction: float
    tol_quadrature: float
    h: float
    solver_error: float
    curvature_term_included: bool = True
    findings: list = dc_field(default_factory=list)

    def as_dict(self):
        d = {k: getattr(self, k) for k in (
            "R1", "R2", "lhs", "error_integral", "h_term", "residual",
            "dual_form_gap", "annulus_area", "excluded_area_fraction",
            "tol_quadrature", "h", "solver_error",
            "curvature_term_included")}
        d["findings"] = [f.as_dict() for f in self.findings]
        return d


def quadrature_tolerance(mesh, field, R1, R2, annulus_area):
    """First-order solver/quadrature budget for annulus integrals."""
    d = mesh.d
    return (5.0 * mesh.h * (R2 - R1) / R1 ** (d + 1)
            + 3.0 * field.solver_error * annulus_area / R1 ** (d + 1))


def monotonicity_residual(mesh, chart, field, grad, R1, R2, n_t=16,
                          include_curvature_term=True):
    """Both sides of the density-increment identity on an annulus.

    residual = [M_R2 - M_R1] - error_integral - curvature_term; it must
    vanish under refinement. For minimal charts the increment itself must
    be nonnegative (monotonicity) and the curvature term negligible.
    """
    ei = annulus_error_integral(mesh, field, grad, R1, R2)
    lhs = (intrinsic_density(mesh, field, R2)
           - intrinsic_density(mesh, field, R1))
    if include_curvature_term:
        h_term = mean_curvature_term(mesh, chart, field, R1, R2, n_t=n_t)
    else:
        h_term = 0.0
    residual = lhs - ei.value - h_term
    tol = quadrature_tolerance(mesh, field, R1, R2, ei.annulus_area)

    findings = [Finding(
        check="residual-error-integral-nonnegative",
        status="PASS" if ei.value >= -tol else "FAIL",
        values={"error_integral": ei.value},
        tolerances={"tol_quadrature": tol})]
    findings.append(Finding(
        check="residual-dual-form-agreement",
        status="PASS" if ei.dual_form_gap <= DUAL_FORM_TOL else "FAIL",
        values={"gap": ei.dual_form_gap}, tolerances={"tol": DUAL_FORM_TOL}))
    if ei.excluded_area_fraction > 0.05:
        findings.append(Finding(
            check="residual-excluded-area", status="WARN",
            values={"excluded_area_fraction": ei.excluded_area_fraction},
            message="more than 5% of the annulus excluded as critical"))
    if chart.is_minimal:
        findings.append(Finding(
            check="residual-monotone-increment",
            status="PASS" if lhs >= -tol else "FAIL",
            values={"lhs": lhs}, tolerances={"tol_quadrature": tol}))
        if include_curvature_term:
            findings.append(Finding(
                check="residual-curvature-term-small",
                status="PASS" if abs(h_term) <= tol else "FAIL",
                values={"h_term": h_term}, tolerances={"tol_quadrature": tol}))

    return ResidualReport(R1=R1, R2=R2, lhs=lhs, error_integral=ei.value,
                          h_term=h_term, residual=residual,
                          dual_form_gap=ei.dual_form_gap,
                          annulus_area=ei.annulus_area,
                          excluded_area_fraction=ei.excluded_area_fraction,
                          tol_quadrature=tol, h=mesh.h,
                          solver_error=field.solver_error,
                          curvature_term_included=include_curvature_term,
                          findings=findings)


# ---------------------------------------------------------------------------
# lower bound and chord-arc certification
# ---------------------------------------------------------------------------

def lower_bound_check(profile):
    """PASS iff every intrinsic density entry clears the unit-ball volume."""
    if not profile.is_minimal:
        return Finding(check="lower-bound", status="WARN",
                       values={},
                       message="non-minimal chart: lower bound not asserted")
    w = unit_ball_volume(profile.d)
    worst = float(np.min(profile.m_int - w))
    return Finding(check="lower-bound",
                   status="PASS" if worst >= -profile.tol_profile else "FAIL",
                   values={"min_margin": worst, "omega_d": w},
                   tolerances={"tol_profile": profile.tol_profile})


def chord_arc_threshold(eps, d):
    """Sufficient density-pinching threshold for the chord-arc estimate:
    eps^(d+1) omega_d / (2^(4d+3) (1+eps)^d)."""
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must lie in (0,1), got {eps}")
    return (eps ** (d + 1) * unit_ball_volume(d)
            / (2.0 ** (4 * d + 3) * (1.0 + eps) ** d))


@dataclass
class ChordArcCertificate:
    R: float
    eps: float
    delta_required: float
    density_gap: float
    hypothesis_met: bool
    worst_ratio: float
    conclusion_met: bool
    tol_ca: float
    n_annulus_vertices: int

    @property
    def violated(self):
        # the lemma asserts hypothesis => conclusion
        return self.hypothesis_met and not self.conclusion_met

    def as_finding(self):
        return Finding(check="chord-arc",
                       status="FAIL" if self.violated else "PASS",
                       values={"R": self.R, "eps": self.eps,
                               "density_gap": self.density_gap,
                               "delta_required": self.delta_required,
                               "hypothesis_met": self.hypothesis_met,
                               "worst_ratio": self.worst_ratio,
                               "conclusion_met": self.conclusion_met},
                       tolerances={"tol_ca": self.tol_ca})


def chord_arc_check(mesh, field, profile, R, eps):
    """Density pinching at scale R versus the geodesic/ambient ratio on the
    annulus {2R <= r <= 4R}.

    The density gap M_8R - M_R is read from the profile when both radii are
    tabulated there (which may carry analytic values in tests), otherwise
    computed from the field. A certificate with hypothesis_met and a failed
    conclusion contradicts the pinching lemma and is a hard failure.
    """
    if 8.0 * R > intrinsic_guard(mesh, field) + 1e-12:
        raise RangeError("8R beyond the intrinsic guard radius")
    if not radius_resolvable(mesh, field.r, 2.0 * R):
        raise RangeError("2R below the small-radius cutoff")
    m_lo = profile.density_at(R) if profile is not None else None
    m_hi = profile.density_at(8.0 * R) if profile is not None else None
    if m_lo is None:
        m_lo = intrinsic_density(mesh, field, R)
    if m_hi is None:
        m_hi = intrinsic_density(mesh, field, 8.0 * R)
    gap = m_hi - m_lo
    delta = chord_arc_threshold(eps, mesh.d)
    hypothesis = gap <= delta

    psi = np.linalg.norm(mesh.vertex_x - field.base_x, axis=1)
    sel = (field.r >= 2.0 * R) & (field.r <= 4.0 * R)
    n_sel = int(np.count_nonzero(sel))
    if n_sel:
        worst = float(np.max(field.r[sel] / np.maximum(psi[sel], 1e-300)))
    else:
        worst = float("nan")
    tol_ca = 2.0 * field.solver_error / (2.0 * R)
    conclusion = bool(n_sel and worst <= (1.0 + eps) + tol_ca)
    return ChordArcCertificate(R=R, eps=eps, delta_required=delta,
                               density_gap=gap, hypothesis_met=bool(hypothesis),
                               worst_ratio=worst, conclusion_met=conclusion,
                               tol_ca=tol_ca, n_annulus_vertices=n_sel)
