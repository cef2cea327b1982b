"""Analytic immersion charts (minimal test surfaces plus controls) and
closed-form cone entries.

Charts are immutable; eval/jacobian/second_derivs act on (m, 2) parameter
arrays and return (m, N), (m, N, 2), (m, N, 2, 2). Derivatives are analytic
for every built-in chart; central differences fill in when a custom chart
omits them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .density import unit_ball_volume
from .errors import DegeneracyError, DomainError

_METRIC_FLOOR = 1e-12


@dataclass(frozen=True)
class Domain:
    """Parameter domain: an axis-aligned rectangle or a centered disk."""

    kind: str  # "rect" | "disk"
    bounds: tuple = ()  # rect: ((t0,t1),(s0,s1))
    radius: float = 0.0  # disk
    s_periodic: bool = False  # rect only: second axis wraps

    def contains(self, u, tol=1e-9):
        u = np.asarray(u, float)
        if self.kind == "rect":
            (t0, t1), (s0, s1) = self.bounds
            ok_t = (u[..., 0] >= t0 - tol) & (u[..., 0] <= t1 + tol)
            if self.s_periodic:
                return ok_t
            ok_s = (u[..., 1] >= s0 - tol) & (u[..., 1] <= s1 + tol)
            return ok_t & ok_s
        return u[..., 0] ** 2 + u[..., 1] ** 2 <= (self.radius + tol) ** 2

    @property
    def diameter(self):
        if self.kind == "rect":
            (t0, t1), (s0, s1) = self.bounds
            return math.hypot(t1 - t0, s1 - s0)
        return 2.0 * self.radius


@dataclass(frozen=True)
class RowLayout:
    """Row/column structure consumed by the structured mesher.

    t indexes rows, s indexes columns; param(t, s) maps to chart parameters.
    row_scale/col_scale convert unit parameter steps to intrinsic lengths,
    as functions of t alone (all built-in charts have t-separable metrics).
    """

    t_range: tuple
    s_range: tuple
    s_period: Optional[float]
    param: Callable
    row_scale: Callable
    col_scale: Callable
    collapse_start: bool = False  # first row degenerates to a point
    collapse_end: bool = False


@dataclass(frozen=True)
class ImmersionChart:
    label: str
    d: int
    N: int
    domain: Domain
    eval: Callable
    jacobian: Callable
    second_derivs: Callable
    is_minimal: bool
    layout: RowLayout
    h_fd: float = 0.0


def _as_points(u):
    pts = np.atleast_2d(np.asarray(u, float))
    if pts.shape[-1] != 2:
        raise DomainError(f"expected 2D parameter points, got shape {pts.shape}")
    return pts


def fd_jacobian(ev, h):
    def jac(pts):
        pts = _as_points(pts)
        m = pts.shape[0]
        cols = []
        for a in range(2):
            dp = np.zeros_like(pts)
            dp[:, a] = h
            cols.append((ev(pts + dp) - ev(pts - dp)) / (2.0 * h))
        return np.stack(cols, axis=2)

    return jac


def fd_second_derivs(jac, h):
    def sec(pts):
        pts = _as_points(pts)
        parts = []
        for a in range(2):
            dp = np.zeros_like(pts)
            dp[:, a] = h
            parts.append((jac(pts + dp) - jac(pts - dp)) / (2.0 * h))
        s = np.stack(parts, axis=3)  # (m,N,2,2): d/du_a of J[:,:,b]
        return 0.5 * (s + np.swapaxes(s, 2, 3))  # symmetrize mixed partials

    return sec


def make_chart(label, d, N, domain, ev, jacobian=None, second_derivs=None,
               is_minimal=False, layout=None, h_fd=None):
    """Build a chart, filling missing derivatives by central differences."""
    if h_fd is None:
        h_fd = 1e-5 * domain.diameter
    if jacobian is None:
        jacobian = fd_jacobian(ev, h_fd)
    if second_derivs is None:
        second_derivs = fd_second_derivs(jacobian, h_fd)
    return ImmersionChart(label=label, d=d, N=N, domain=domain, eval=ev,
                          jacobian=jacobian, second_derivs=second_derivs,
                          is_minimal=is_minimal, layout=layout, h_fd=h_fd)


# ---------------------------------------------------------------------------
# spec'd operations (scalar API; vectorized internals below)
# ---------------------------------------------------------------------------

def evaluate(chart, u):
    """Ambient position i(u); raises DomainError outside the domain."""
    pts = _as_points(u)
    if not np.all(chart.domain.contains(pts)):
        raise DomainError(f"{chart.label}: parameter point {u} outside domain")
    x = chart.eval(pts)
    return x[0] if np.asarray(u).ndim == 1 else x


def metric_at(chart, pts):
    """Pullback metric J^T J at each of (m,2) points, shape (m,2,2)."""
    J = chart.jacobian(_as_points(pts))
    return np.einsum("mni,mnj->mij", J, J)


def pullback_metric(chart, u):
    """Pullback metric at a single point; raises on rank-deficiency."""
    pts = _as_points(u)
    if not np.all(chart.domain.contains(pts)):
        raise DomainError(f"{chart.label}: parameter point {u} outside domain")
    g = metric_at(chart, pts)[0]
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    if det <= _METRIC_FLOOR * max(1.0, g[0, 0] * g[1, 1]):
        raise DegeneracyError(f"{chart.label}: metric degenerate at {u}")
    return g


def mean_curvature_at(chart, pts):
    """Mean curvature vectors at (m,2) points, shape (m,N).

    Trace of the second derivatives against the inverse metric, projected
    onto the normal space; equals the surface Laplacian of the coordinates.
    """
    pts = _as_points(pts)
    J = chart.jacobian(pts)
    S = chart.second_derivs(pts)
    G = np.einsum("mni,mnj->mij", J, J)
    det = G[:, 0, 0] * G[:, 1, 1] - G[:, 0, 1] * G[:, 1, 0]
    if np.any(det <= _METRIC_FLOOR * np.maximum(1.0, G[:, 0, 0] * G[:, 1, 1])):
        raise DegeneracyError(f"{chart.label}: metric degenerate in batch")
    Ginv = np.linalg.inv(G)
    Hfull = np.einsum("mij,mnij->mn", Ginv, S)
    coef = np.einsum("mij,mnj,mn->mi", Ginv, J, Hfull)
    return Hfull - np.einsum("mni,mi->mn", J, coef)


def mean_curvature(chart, u):
    pts = _as_points(u)
    if not np.all(chart.domain.contains(pts)):
        raise DomainError(f"{chart.label}: parameter point {u} outside domain")
    return mean_curvature_at(chart, pts)[0]


def scaled(chart, lam):
    """Chart with the ambient map scaled by lam (same parameter domain)."""
    ev, jac, sec = chart.eval, chart.jacobian, chart.second_derivs
    lay = chart.layout
    lay2 = RowLayout(
        t_range=lay.t_range, s_range=lay.s_range, s_period=lay.s_period,
        param=lay.param,
        row_scale=lambda t: lam * lay.row_scale(t),
        col_scale=lambda t: lam * lay.col_scale(t),
        collapse_start=lay.collapse_start, collapse_end=lay.collapse_end)
    return ImmersionChart(
        label=f"{chart.label}*{lam:g}", d=chart.d, N=chart.N,
        domain=chart.domain,
        eval=lambda p: lam * ev(p),
        jacobian=lambda p: lam * jac(p),
        second_derivs=lambda p: lam * sec(p),
        is_minimal=chart.is_minimal, layout=lay2, h_fd=chart.h_fd)


# ---------------------------------------------------------------------------
# built-in charts
# ---------------------------------------------------------------------------

def plane_chart(half_width=5.0):
    def ev(p):
        p = _as_points(p)
        return np.concatenate([p, np.zeros((p.shape[0], 1))], axis=1)

    def jac(p):
        m = _as_points(p).shape[0]
        J = np.zeros((m, 3, 2))
        J[:, 0, 0] = 1.0
        J[:, 1, 1] = 1.0
        return J

    def sec(p):
        return np.zeros((_as_points(p).shape[0], 3, 2, 2))

    w = half_width
    dom = Domain(kind="rect", bounds=((-w, w), (-w, w)))
    lay = RowLayout(t_range=(-w, w), s_range=(-w, w), s_period=None,
                    param=lambda t, s: np.stack([t, s], axis=-1),
                    row_scale=lambda t: np.ones_like(np.asarray(t, float)),
                    col_scale=lambda t: np.ones_like(np.asarray(t, float)))
    return make_chart("plane", 2, 3, dom, ev, jac, sec, is_minimal=True,
                      layout=lay)


def catenoid_chart(v_max=2.0, label="catenoid"):
    # (v, theta) -> (cosh v cos t, cosh v sin t, v); theta seam at 2*pi
    def ev(p):
        p = _as_points(p)
        v, t = p[:, 0], p[:, 1]
        ch = np.cosh(v)
        return np.stack([ch * np.cos(t), ch * np.sin(t), v], axis=1)

    def jac(p):
        p = _as_points(p)
        v, t = p[:, 0], p[:, 1]
        ch, sh, c, s = np.cosh(v), np.sinh(v), np.cos(t), np.sin(t)
        J = np.empty((p.shape[0], 3, 2))
        J[:, 0, 0] = sh * c
        J[:, 1, 0] = sh * s
        J[:, 2, 0] = 1.0
        J[:, 0, 1] = -ch * s
        J[:, 1, 1] = ch * c
        J[:, 2, 1] = 0.0
        return J

    def sec(p):
        p = _as_points(p)
        v, t = p[:, 0], p[:, 1]
        ch, sh, c, s = np.cosh(v), np.sinh(v), np.cos(t), np.sin(t)
        S = np.zeros((p.shape[0], 3, 2, 2))
        S[:, 0, 0, 0] = ch * c
        S[:, 1, 0, 0] = ch * s
        S[:, 0, 0, 1] = S[:, 0, 1, 0] = -sh * s
        S[:, 1, 0, 1] = S[:, 1, 1, 0] = sh * c
        S[:, 0, 1, 1] = -ch * c
        S[:, 1, 1, 1] = -ch * s
        return S

    dom = Domain(kind="rect", bounds=((-v_max, v_max), (0.0, 2.0 * np.pi)),
                 s_periodic=True)
    lay = RowLayout(t_range=(-v_max, v_max), s_range=(0.0, 2.0 * np.pi),
                    s_period=2.0 * np.pi,
                    param=lambda t, s: np.stack([t, s], axis=-1),
                    row_scale=np.cosh, col_scale=np.cosh)
    return make_chart(label, 2, 3, dom, ev, jac, sec, is_minimal=True,
                      layout=lay)


def helicoid_chart(v_max=2.0, alpha_max=4.5):
    # (v, a) -> (sinh v cos a, sinh v sin a, a): conformal, conjugate to the
    # catenoid. Not periodic in a: turning by 2*pi shifts the height, so the
    # domain is a plain rectangle.
    def ev(p):
        p = _as_points(p)
        v, a = p[:, 0], p[:, 1]
        sh = np.sinh(v)
        return np.stack([sh * np.cos(a), sh * np.sin(a), a], axis=1)

    def jac(p):
        p = _as_points(p)
        v, a = p[:, 0], p[:, 1]
        ch, sh, c, s = np.cosh(v), np.sinh(v), np.cos(a), np.sin(a)
        J = np.empty((p.shape[0], 3, 2))
        J[:, 0, 0] = ch * c
        J[:, 1, 0] = ch * s
        J[:, 2, 0] = 0.0
        J[:, 0, 1] = -sh * s
        J[:, 1, 1] = sh * c
        J[:, 2, 1] = 1.0
        return J

    def sec(p):
        p = _as_points(p)
        v, a = p[:, 0], p[:, 1]
        ch, sh, c, s = np.cosh(v), np.sinh(v), np.cos(a), np.sin(a)
        S = np.zeros((p.shape[0], 3, 2, 2))
        S[:, 0, 0, 0] = sh * c
        S[:, 1, 0, 0] = sh * s
        S[:, 0, 0, 1] = S[:, 0, 1, 0] = -ch * s
        S[:, 1, 0, 1] = S[:, 1, 1, 0] = ch * c
        S[:, 0, 1, 1] = -sh * c
        S[:, 1, 1, 1] = -sh * s
        return S

    dom = Domain(kind="rect", bounds=((-v_max, v_max), (-alpha_max, alpha_max)))
    lay = RowLayout(t_range=(-v_max, v_max), s_range=(-alpha_max, alpha_max),
                    s_period=None,
                    param=lambda t, s: np.stack([t, s], axis=-1),
                    row_scale=np.cosh, col_scale=np.cosh)
    return make_chart("helicoid", 2, 3, dom, ev, jac, sec, is_minimal=True,
                      layout=lay)


def enneper_chart(rho_max=3.0):
    # Cartesian (a, b) over a disk; conformal factor 1 + a^2 + b^2. The end
    # wraps three times around the vertical axis, so ambient-ball areas
    # integrated over the parameter disk carry multiplicity automatically.
    def ev(p):
        p = _as_points(p)
        a, b = p[:, 0], p[:, 1]
        return np.stack([a - a ** 3 / 3.0 + a * b * b,
                         -b + b ** 3 / 3.0 - a * a * b,
                         a * a - b * b], axis=1)

    def jac(p):
        p = _as_points(p)
        a, b = p[:, 0], p[:, 1]
        J = np.empty((p.shape[0], 3, 2))
        J[:, 0, 0] = 1.0 - a * a + b * b
        J[:, 1, 0] = -2.0 * a * b
        J[:, 2, 0] = 2.0 * a
        J[:, 0, 1] = 2.0 * a * b
        J[:, 1, 1] = -1.0 + b * b - a * a
        J[:, 2, 1] = -2.0 * b
        return J

    def sec(p):
        p = _as_points(p)
        a, b = p[:, 0], p[:, 1]
        S = np.zeros((p.shape[0], 3, 2, 2))
        S[:, 0, 0, 0] = -2.0 * a
        S[:, 0, 0, 1] = S[:, 0, 1, 0] = 2.0 * b
        S[:, 0, 1, 1] = 2.0 * a
        S[:, 1, 0, 0] = -2.0 * b
        S[:, 1, 0, 1] = S[:, 1, 1, 0] = -2.0 * a
        S[:, 1, 1, 1] = 2.0 * b
        S[:, 2, 0, 0] = 2.0
        S[:, 2, 1, 1] = -2.0
        return S

    dom = Domain(kind="disk", radius=rho_max)
    lay = RowLayout(
        t_range=(0.0, rho_max), s_range=(0.0, 2.0 * np.pi),
        s_period=2.0 * np.pi,
        param=lambda t, s: np.stack([t * np.cos(s), t * np.sin(s)], axis=-1),
        row_scale=lambda t: 1.0 + np.asarray(t, float) ** 2,
        col_scale=lambda t: (1.0 + np.asarray(t, float) ** 2) * np.asarray(t, float),
        collapse_start=True)
    return make_chart("enneper", 2, 3, dom, ev, jac, sec, is_minimal=True,
                      layout=lay)


def sphere_chart(rho=2.0):
    # Non-minimal control, |H| = 2/rho. Poles are mesh-collapsed rows; the
    # Jacobian is full-rank on the open band between them, which is where
    # all quadrature nodes and samples live.
    def ev(p):
        p = _as_points(p)
        ph, th = p[:, 0], p[:, 1]
        sp = np.sin(ph)
        return rho * np.stack([sp * np.cos(th), sp * np.sin(th), np.cos(ph)],
                              axis=1)

    def jac(p):
        p = _as_points(p)
        ph, th = p[:, 0], p[:, 1]
        sp, cp, st, ct = np.sin(ph), np.cos(ph), np.sin(th), np.cos(th)
        J = np.empty((p.shape[0], 3, 2))
        J[:, 0, 0] = rho * cp * ct
        J[:, 1, 0] = rho * cp * st
        J[:, 2, 0] = -rho * sp
        J[:, 0, 1] = -rho * sp * st
        J[:, 1, 1] = rho * sp * ct
        J[:, 2, 1] = 0.0
        return J

    def sec(p):
        p = _as_points(p)
        ph, th = p[:, 0], p[:, 1]
        sp, cp, st, ct = np.sin(ph), np.cos(ph), np.sin(th), np.cos(th)
        S = np.zeros((p.shape[0], 3, 2, 2))
        S[:, 0, 0, 0] = -rho * sp * ct
        S[:, 1, 0, 0] = -rho * sp * st
        S[:, 2, 0, 0] = -rho * cp
        S[:, 0, 0, 1] = S[:, 0, 1, 0] = -rho * cp * st
        S[:, 1, 0, 1] = S[:, 1, 1, 0] = rho * cp * ct
        S[:, 0, 1, 1] = -rho * sp * ct
        S[:, 1, 1, 1] = -rho * sp * st
        return S

    dom = Domain(kind="rect", bounds=((0.0, np.pi), (0.0, 2.0 * np.pi)),
                 s_periodic=True)
    lay = RowLayout(
        t_range=(0.0, np.pi), s_range=(0.0, 2.0 * np.pi),
        s_period=2.0 * np.pi,
        param=lambda t, s: np.stack([t, s], axis=-1),
        row_scale=lambda t: rho * np.ones_like(np.asarray(t, float)),
        col_scale=lambda t: rho * np.sin(np.asarray(t, float)),
        collapse_start=True, collapse_end=True)
    return make_chart("sphere", 2, 3, dom, ev, jac, sec, is_minimal=False,
                      layout=lay)


# ---------------------------------------------------------------------------
# closed-form cone entries (density oracles for d > 2; singular apex, so
# these are not charts and are never meshed)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticConeEntry:
    label: str
    d: int
    link_area: float
    remark: str = ""

    def __post_init__(self):
        if self.link_area <= 0.0:
            raise ValueError("link_area must be positive")
        if self.link_area / self.d < unit_ball_volume(self.d) - 1e-12:
            raise ValueError(
                f"{self.label}: density {self.link_area / self.d:.6g} below "
                f"the unit-ball volume in dimension {self.d}")


def cone_density(entry):
    """Constant density of the cone from its apex: link area / dimension.

    Radial rays from the apex are geodesics, so geodesic and ambient
    distances agree and the intrinsic and extrinsic densities coincide at
    every radius.
    """
    return entry.link_area / entry.d


def _builtin_cones():
    s3_area = 2.0 * np.pi ** 2 * 2.0 ** -1.5  # round 3-sphere of radius 1/sqrt(2)
    return {
        "plane-cone": AnalyticConeEntry(
            label="plane-cone", d=2, link_area=2.0 * np.pi,
            remark="plane viewed as a cone over the full unit circle"),
        "simons-cone": AnalyticConeEntry(
            label="simons-cone", d=7, link_area=s3_area ** 2,
            remark="cone over S^3(1/sqrt 2) x S^3(1/sqrt 2) in R^8"),
    }


_CHART_BUILDERS = {
    "plane": plane_chart,
    "catenoid": catenoid_chart,
    "catenoid-wide": lambda: catenoid_chart(v_max=4.3, label="catenoid-wide"),
    "helicoid": helicoid_chart,
    "enneper": enneper_chart,
    "sphere": sphere_chart,
}

_chart_cache: dict = {}
CONES = _builtin_cones()


def chart_labels():
    return sorted(_CHART_BUILDERS)


def get_chart(label):
    if label not in _CHART_BUILDERS:
        raise KeyError(f"unknown surface label {label!r}; "
                       f"known: {', '.join(chart_labels())}")
    if label not in _chart_cache:
        _chart_cache[label] = _CHART_BUILDERS[label]()
    return _chart_cache[label]
