"""Intrinsic and extrinsic area-density profiles, guard radii, limit
extrapolation, and the equality/properness checks built on them.

Both densities reduce to sublevel-set areas of a per-vertex scalar (the
geodesic distance r, or the ambient distance from the base image) divided
by R^d. Sublevel areas use exact linear clipping per triangle; integrating
over the parameter domain makes sheet multiplicity automatic for
non-injective immersions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

from . import clipping
from .errors import RangeError
from .findings import Finding

RING_FACTOR = 10.0  # a radius is resolvable when ring-local edges <= R/10


@lru_cache(maxsize=None)
def unit_ball_volume(d):
    """Volume of the unit ball in R^d via the two-step recursion."""
    if d < 1 or int(d) != d:
        raise ValueError(f"dimension must be a positive integer, got {d}")
    if d == 1:
        return 2.0
    if d == 2:
        return math.pi
    return (2.0 * math.pi / d) * unit_ball_volume(d - 2)


# ---------------------------------------------------------------------------
# guards and radius validity
# ---------------------------------------------------------------------------

def intrinsic_guard(mesh, field):
    """0.9 x smallest boundary distance; inf when the mesh is closed."""
    if mesh.is_closed:
        return math.inf
    return 0.9 * float(np.min(field.r[mesh.boundary_vertices]))

def extrinsic_guard(mesh, field):
    """0.9 x smallest |x - x_base| over boundary vertices; inf if closed."""
    if mesh.is_closed:
        return math.inf
    psi = np.linalg.norm(mesh.vertex_x[mesh.boundary_vertices] - field.base_x,
                         axis=1)
    return 0.9 * float(np.min(psi))


def guard_radius(mesh, field):
    """Largest radius unaffected by the artificial boundary (min of both)."""
    return min(intrinsic_guard(mesh, field), extrinsic_guard(mesh, field))


def ring_mesh_size(mesh, values, R):
    """Largest intrinsic edge among triangles straddling the level {v = R}."""
    corner = values[mesh.tris]
    straddle = (corner.min(axis=1) < R) & (corner.max(axis=1) >= R)
    if not np.any(straddle):
        return 0.0
    return float(mesh.tri_edge_len[straddle].max())


def radius_resolvable(mesh, values, R):
    """Small-radius cutoff: the level ring must be locally resolved.

    On uniform meshes this is the plain R >= 10 h rule; on graded meshes the
    binding size is the one where the level line actually runs.
    """
    return R >= RING_FACTOR * ring_mesh_size(mesh, values, R) - 1e-12


def ambient_radii(mesh, field):
    return np.linalg.norm(mesh.vertex_x - field.base_x, axis=1)


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------

def _sublevel_area(mesh, values, R):
    frac, _ = clipping.sublevel(values[mesh.tris], R)
    return float(np.dot(frac, mesh.tri_area))


def intrinsic_density(mesh, field, R):
    """Area of the geodesic ball {r < R} divided by R^d."""
    if R <= 0.0:
        raise RangeError("radius must be positive")
    if R > intrinsic_guard(mesh, field) + 1e-12:
        raise RangeError(f"R={R:g} beyond intrinsic guard radius")
    if not radius_resolvable(mesh, field.r, R):
        raise RangeError(f"R={R:g} below the small-radius cutoff")
    return _sublevel_area(mesh, field.r, R) / R ** mesh.d


def extrinsic_density(mesh, field, R):
    """Area (with multiplicity) of {|x - x_base| < R} divided by R^d."""
    if R <= 0.0:
        raise RangeError("radius must be positive")
    if R > extrinsic_guard(mesh, field) + 1e-12:
        raise RangeError(f"R={R:g} beyond extrinsic guard radius")
    psi = ambient_radii(mesh, field)
    if not radius_resolvable(mesh, psi, R):
        raise RangeError(f"R={R:g} below the small-radius cutoff")
    return _sublevel_area(mesh, psi, R) / R ** mesh.d


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------

@dataclass
class DensityProfile:
    radii: np.ndarray
    m_int: np.ndarray
    m_ext: np.ndarray
    guard_radius: float
    guard_int: float
    guard_ext: float
    d: int
    base_vertex: int
    base_x: np.ndarray
    solver_error: float
    tol_profile: float
    chart_label: str = ""
    is_minimal: bool = False
    findings: list = dc_field(default_factory=list)

    def density_at(self, R, kind="int"):
        col = self.m_int if kind == "int" else self.m_ext
        hit = np.nonzero(np.isclose(self.radii, R, rtol=1e-12, atol=0.0))[0]
        return float(col[hit[0]]) if hit.size else None


def profile_tolerance(mesh, field, r_min):
    """Solver-plus-quadrature density tolerance: 3 eps/R_min + 5 h^2."""
    return 3.0 * field.solver_error / r_min + 5.0 * mesh.h ** 2


def density_profile(mesh, field, radii):
    """Sampled R -> (m_int, m_ext) table with guard and monotonicity audit.

    Radii outside the guard or below the cutoff are dropped (recorded as a
    WARN finding); an empty remainder is a RangeError. Monotonicity is
    required of minimal charts only, up to tol_profile; violations become
    FAIL findings rather than silent data.
    """
    radii = np.asarray(sorted(float(R) for R in radii))
    if radii.size == 0:
        raise RangeError("empty radius schedule")
    g_int = intrinsic_guard(mesh, field)
    g_ext = extrinsic_guard(mesh, field)
    psi = ambient_radii(mesh, field)
    findings = []

    keep = []
    for R in radii:
        ok = (R <= g_int + 1e-12 and R <= g_ext + 1e-12
              and radius_resolvable(mesh, field.r, R)
              and radius_resolvable(mesh, psi, R))
        keep.append(ok)
    keep = np.asarray(keep)
    if not np.all(keep):
        findings.append(Finding(
            check="profile-radius-window", status="WARN",
            values={"dropped": [float(R) for R in radii[~keep]]},
            message="radii outside the valid window were dropped"))
    radii = radii[keep]
    if radii.size == 0:
        raise RangeError("no radius in the valid window")

    m_int = np.array([_sublevel_area(mesh, field.r, R) / R ** mesh.d
                      for R in radii])
    m_ext = np.array([_sublevel_area(mesh, psi, R) / R ** mesh.d
                      for R in radii])
    tol = profile_tolerance(mesh, field, float(radii[0]))

    is_minimal = bool(getattr(mesh.chart, "is_minimal", False))
    # ordering: intrinsic never exceeds extrinsic beyond tolerance
    worst_gap = float(np.max(m_int - m_ext)) if radii.size else 0.0
    findings.append(Finding(
        check="profile-ordering",
        status="PASS" if worst_gap <= tol else "FAIL",
        values={"max_int_minus_ext": worst_gap},
        tolerances={"tol_profile": tol}))

    for name, col in (("int", m_int), ("ext", m_ext)):
        drops = np.diff(col)
        worst = float(drops.min()) if drops.size else 0.0
        monotone = worst >= -tol
        if is_minimal:
            findings.append(Finding(
                check=f"profile-monotone-{name}",
                status="PASS" if monotone else "FAIL",
                values={"worst_increment": worst},
                tolerances={"tol_profile": tol}))
        elif not monotone:
            findings.append(Finding(
                check=f"profile-monotone-{name}", status="WARN",
                values={"worst_increment": worst},
                tolerances={"tol_profile": tol},
                message="non-minimal control: monotonicity not required"))

    return DensityProfile(
        radii=radii, m_int=m_int, m_ext=m_ext,
        guard_radius=min(g_int, g_ext), guard_int=g_int, guard_ext=g_ext,
        d=mesh.d, base_vertex=field.base_vertex,
        base_x=np.asarray(field.base_x), solver_error=field.solver_error,
        tol_profile=tol, chart_label=mesh.chart_label,
        is_minimal=is_minimal, findings=findings)


# ---------------------------------------------------------------------------
# limits
# ---------------------------------------------------------------------------

@dataclass
class LimitEstimate:
    value: float            # math.inf when flagged divergent
    error_bar: float
    method: str
    kind: str = "int"

    @property
    def is_infinite(self):
        return math.isinf(self.value)


def limit_estimate(profile, kind="int"):
    """Extrapolated large-R density limit from a finite profile.

    Divergence heuristic: the last three increments are nondecreasing and
    the last exceeds omega_d / 10. Otherwise fit m(R) = m_inf - c/R over
    the top half of the radii; the error bar is residual-driven plus the
    last observed increment, so the model is never trusted blindly.
    """
    m = np.asarray(profile.m_int if kind == "int" else profile.m_ext, float)
    R = np.asarray(profile.radii, float)
    if m.size < 4:
        raise ValueError("limit extrapolation needs at least 4 profile points")
    inc = np.diff(m)
    w = unit_ball_volume(profile.d)
    if (inc[-1] > w / 10.0 and inc[-1] >= inc[-2] * (1.0 - 1e-9)
            and inc[-2] >= inc[-3] * (1.0 - 1e-9)):
        return LimitEstimate(value=math.inf, error_bar=0.0,
                             method="divergent-increments", kind=kind)
    k0 = max(m.size - max(3, m.size // 2), 0)
    x = 1.0 / R[k0:]
    y = m[k0:]
    A = np.stack([np.ones_like(x), -x], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    fit = A @ coef
    rms = float(np.sqrt(np.mean((y - fit) ** 2)))
    bar = 3.0 * rms + abs(float(inc[-1]))
    return LimitEstimate(value=float(coef[0]), error_bar=bar,
                         method="least-squares m_inf - c/R", kind=kind)


def limit_equality_check(est_int, est_ext, tol_limit=0.0):
    """PASS when the two extrapolated limits agree within combined bars."""
    if est_int.is_infinite and est_ext.is_infinite:
        return Finding(check="limit-equality", status="PASS",
                       values={"v_int": "inf", "v_ext": "inf"},
                       message="both profiles diverge")
    if est_int.is_infinite != est_ext.is_infinite:
        return Finding(check="limit-equality", status="FAIL",
                       values={"v_int": est_int.value, "v_ext": est_ext.value},
                       message="one limit diverges, the other does not")
    gap = abs(est_int.value - est_ext.value)
    budget = est_int.error_bar + est_ext.error_bar + tol_limit
    return Finding(check="limit-equality",
                   status="PASS" if gap <= budget else "FAIL",
                   values={"v_int": est_int.value, "v_ext": est_ext.value,
                           "gap": gap},
                   tolerances={"combined": budget})


def ball_sandwich_check(mesh, field, R, eps):
    """Discrete properness sandwich at radius R.

    Verifies {|x| < R} is contained in {r < (1+eps) R + eps_solver} at the
    vertices; the reverse inclusion is automatic from r >= |x|. Reports the
    worst r/|x| over the shell R <= |x| <= (1+eps) R.
    """
    if (1.0 + eps) * R > intrinsic_guard(mesh, field) + 1e-12:
        raise RangeError("(1+eps) R beyond the intrinsic guard radius")
    if R > extrinsic_guard(mesh, field) + 1e-12:
        raise RangeError("R beyond the extrinsic guard radius")
    psi = ambient_radii(mesh, field)
    inside = psi < R
    bound = (1.0 + eps) * R + field.solver_error
    worst_r = float(field.r[inside].max()) if np.any(inside) else 0.0
    shell = (psi >= R) & (psi <= (1.0 + eps) * R) & (psi > 0)
    worst_ratio = float((field.r[shell] / psi[shell]).max()) if np.any(shell) \
        else float("nan")
    ok = worst_r <= bound
    return Finding(check="ball-sandwich",
                   status="PASS" if ok else "FAIL",
                   values={"R": R, "eps": eps, "max_r_inside": worst_r,
                           "worst_shell_ratio": worst_ratio},
                   tolerances={"bound": bound})
