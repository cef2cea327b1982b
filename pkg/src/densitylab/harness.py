"""Run configuration, multi-level execution, and report emission.

A run meshes a catalog surface at one or more refinement levels, executes
the requested checks at each level, and writes JSON + CSV artifacts whose
bytes depend only on the configuration (timestamps honor SOURCE_DATE_EPOCH
so archived reports can be reproduced bit for bit).
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import __version__, catalog, density, geodesic, meshing, monotonicity
from . import sampling
from .errors import RangeError
from .findings import Finding

CHECK_IDS = ("profile", "residual", "chord-arc", "identity", "limits",
             "sandwich")

_DEFAULTS = {
    "surface": "plane",
    "base": (0.0, 0.0),
    "target_h": 0.1,
    "levels": 1,
    "grading": "graded",
    "r_min": 0.5,
    "r_factor": 2.0,
    "r_count": 4,
    "eps_list": (0.5,),
    "annulus": (0.5, 2.0),
    "n_t": 16,
    "checks": ("profile",),
    "sandwich_eps": 0.5,
    "sandwich_r": None,
    "chord_arc_r": None,
    "density_r": None,
    "identity_samples": 200,
    "identity_tol": 1e-6,
    "solver": geodesic.FAST_MARCHING,
    "disable_curvature_term": False,
    "out_dir": "out",
    "seed": 0,
    "vertex_budget": meshing.DEFAULT_VERTEX_BUDGET,
}

_TUPLE_KEYS = {"base", "eps_list", "annulus", "checks"}
_INT_KEYS = {"levels", "r_count", "n_t", "identity_samples", "seed",
             "vertex_budget"}
_FLOAT_KEYS = {"target_h", "r_min", "r_factor", "sandwich_eps",
               "identity_tol"}
_OPT_FLOAT_KEYS = {"sandwich_r", "chord_arc_r", "density_r"}
_BOOL_KEYS = {"disable_curvature_term"}


@dataclass
class RunConfig:
    values: dict

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name)

    def as_dict(self):
        out = {}
        for k in sorted(self.values):
            v = self.values[k]
            out[k] = list(v) if isinstance(v, tuple) else v
        return out


def _parse_value(key, raw):
    raw = raw.strip()
    if key in _TUPLE_KEYS:
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if key == "checks":
            bad = [p for p in parts if p not in CHECK_IDS]
            if bad:
                raise ValueError(f"unknown check ids {bad}; known: {CHECK_IDS}")
            return tuple(parts)
        return tuple(float(p) for p in parts)
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _OPT_FLOAT_KEYS:
        return None if raw.lower() in ("", "none", "auto") else float(raw)
    if key in _BOOL_KEYS:
        return raw.lower() in ("1", "true", "yes", "on")
    return raw


def parse_config(path=None, overrides=()):
    """Flat key = value config file plus command-line overrides."""
    values = dict(_DEFAULTS)
    lines = []
    if path is not None:
        with open(path) as fh:
            lines = fh.readlines()
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {raw!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in _DEFAULTS:
            raise ValueError(f"unknown config key {key!r}")
        values[key] = _parse_value(key, val)
    for item in overrides:
        key, val = (p.strip() for p in item.split("=", 1))
        if key not in _DEFAULTS:
            raise ValueError(f"unknown config key {key!r}")
        values[key] = _parse_value(key, val)
    env_out = os.environ.get("DENSITYLAB_OUT")
    if env_out:
        values["out_dir"] = env_out
    if values["levels"] < 1:
        raise ValueError("levels must be >= 1")
    return RunConfig(values)


def _fingerprint():
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    ts = int(epoch) if epoch else int(time.time())
    return {"version": __version__,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(ts))}


@dataclass
class Report:
    config: dict
    fingerprint: dict
    levels: list = dc_field(default_factory=list)
    findings: list = dc_field(default_factory=list)
    orders: dict = dc_field(default_factory=dict)

    @property
    def failed(self):
        return any(f.failed for f in self.findings)

    def as_dict(self):
        return {"config": self.config,
                "fingerprint": self.fingerprint,
                "levels": self.levels,
                "findings": [f.as_dict() for f in self.findings],
                "orders": self.orders,
                "status": "FAIL" if self.failed else "PASS"}


def _schedule(cfg):
    return [cfg.r_min * cfg.r_factor ** k for k in range(cfg.r_count)]


def _level_block(cfg, level, mesh, fld):
    g_int = density.intrinsic_guard(mesh, fld)
    g_ext = density.extrinsic_guard(mesh, fld)
    return {"level": level, "h": mesh.h, "target_h": mesh.target_h,
            "n_vertices": mesh.n_vertices, "n_triangles": mesh.n_triangles,
            "eps_solver": fld.solver_error,
            "guard_int": g_int if math.isfinite(g_int) else "inf",
            "guard_ext": g_ext if math.isfinite(g_ext) else "inf"}


def run(config):
    """Mesh, solve, and execute the configured checks at every level."""
    cfg = config
    chart = catalog.get_chart(cfg.surface)
    report = Report(config=cfg.as_dict(), fingerprint=_fingerprint())
    outdir = cfg.out_dir
    os.makedirs(outdir, exist_ok=True)

    mesh = meshing.triangulate(chart, cfg.target_h, grading=cfg.grading,
                               base_u=tuple(cfg.base),
                               vertex_budget=cfg.vertex_budget)
    residual_rows = []
    for level in range(cfg.levels):
        if level > 0:
            mesh = meshing.refine(mesh, vertex_budget=cfg.vertex_budget)
        fld = geodesic.distance_field(mesh, mesh.anchor_vertex,
                                      method=cfg.solver)
        block = _level_block(cfg, level, mesh, fld)
        findings = []

        profile = None
        if {"profile", "limits", "chord-arc"} & set(cfg.checks):
            guard = density.guard_radius(mesh, fld)
            radii = [R for R in _schedule(cfg)]
            capped = [R for R in radii if R <= 0.95 * guard]
            if len(capped) < len(radii):
                findings.append(Finding(
                    check="schedule-truncated", status="WARN",
                    values={"requested": radii, "kept": capped},
                    message="radius schedule truncated to the guard radius"))
            try:
                profile = density.density_profile(mesh, fld, capped)
            except RangeError as exc:
                findings.append(Finding(check="profile", status="FAIL",
                                        values={}, message=str(exc)))

        if "profile" in cfg.checks and profile is not None:
            findings.extend(profile.findings)
            findings.append(monotonicity.lower_bound_check(profile))
            block["radii"] = [float(R) for R in profile.radii]
            block["m_int"] = [float(v) for v in profile.m_int]
            block["m_ext"] = [float(v) for v in profile.m_ext]
            block["tol_profile"] = profile.tol_profile
            _write_profile_csv(os.path.join(
                outdir, f"profile_L{level}.csv"), profile)

        if "residual" in cfg.checks:
            R1, R2 = cfg.annulus
            try:
                grad = geodesic.gradient_field(mesh, fld)
                rep = monotonicity.monotonicity_residual(
                    mesh, chart, fld, grad, R1, R2, n_t=cfg.n_t,
                    include_curvature_term=not cfg.disable_curvature_term)
                findings.extend(rep.findings)
                block["residual"] = rep.as_dict()
                residual_rows.append((level, mesh.h, rep))
            except RangeError as exc:
                findings.append(Finding(check="residual", status="WARN",
                                        values={"annulus": [R1, R2]},
                                        message=str(exc)))

        if "identity" in cfg.checks:
            pts = sampling.domain_points(chart, cfg.identity_samples,
                                         skip=cfg.seed, margin=0.05)
            defect = monotonicity.laplacian_defect(
                chart, pts,
                include_curvature_term=not cfg.disable_curvature_term)
            worst = float(np.max(defect))
            findings.append(Finding(
                check="laplacian-identity",
                status="PASS" if worst <= cfg.identity_tol else "FAIL",
                values={"max_defect": worst,
                        "samples": cfg.identity_samples},
                tolerances={"identity_tol": cfg.identity_tol}))
            block["identity_max_defect"] = worst

        if "limits" in cfg.checks:
            if profile is not None and profile.radii.size >= 4:
                est_i = density.limit_estimate(profile, "int")
                est_e = density.limit_estimate(profile, "ext")
                findings.append(density.limit_equality_check(
                    est_i, est_e, tol_limit=profile.tol_profile))
                block["limits"] = {
                    "int": "inf" if est_i.is_infinite else est_i.value,
                    "int_bar": est_i.error_bar,
                    "ext": "inf" if est_e.is_infinite else est_e.value,
                    "ext_bar": est_e.error_bar}
            else:
                findings.append(Finding(
                    check="limit-equality", status="WARN", values={},
                    message="fewer than 4 valid radii; limits skipped"))

        if "chord-arc" in cfg.checks:
            guard_i = density.intrinsic_guard(mesh, fld)
            R_ca = cfg.chord_arc_r or 0.95 * guard_i / 8.0
            for eps in cfg.eps_list:
                try:
                    cert = monotonicity.chord_arc_check(mesh, fld, profile,
                                                        R_ca, eps)
                    findings.append(cert.as_finding())
                    block.setdefault("certificates", []).append(
                        cert.as_finding().values)
                except RangeError as exc:
                    findings.append(Finding(
                        check="chord-arc", status="WARN",
                        values={"R": R_ca, "eps": eps}, message=str(exc)))

        if "sandwich" in cfg.checks:
            eps = cfg.sandwich_eps
            guard_i = density.intrinsic_guard(mesh, fld)
            R_sw = cfg.sandwich_r or 0.95 * guard_i / (1.0 + eps)
            try:
                findings.append(density.ball_sandwich_check(mesh, fld,
                                                            R_sw, eps))
            except RangeError as exc:
                findings.append(Finding(check="ball-sandwich", status="WARN",
                                        values={"R": R_sw, "eps": eps},
                                        message=str(exc)))

        for f in findings:
            f.level = level
        report.findings.extend(findings)
        report.levels.append(block)

    if len(residual_rows) >= 2:
        vals = [abs(r.residual) for (_, _, r) in residual_rows]
        report.orders["residual"] = [
            float(np.log2(vals[k] / vals[k + 1])) if vals[k + 1] > 0 else None
            for k in range(len(vals) - 1)]
        _write_residual_csv(os.path.join(outdir, "residuals.csv"),
                            residual_rows)

    with open(os.path.join(outdir, "report.json"), "w") as fh:
        json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def _write_profile_csv(path, profile):
    with open(path, "w") as fh:
        fh.write("# densitylab-csv profile v1\n")
        fh.write("R,m_int,m_ext\n")
        for R, a, b in zip(profile.radii, profile.m_int, profile.m_ext):
            fh.write(f"{float(R)!r},{float(a)!r},{float(b)!r}\n")


def _write_residual_csv(path, rows):
    with open(path, "w") as fh:
        fh.write("# densitylab-csv residual v1\n")
        fh.write("level,h,lhs,error_integral,h_term,residual\n")
        for level, h, rep in rows:
            fh.write(f"{level},{float(h)!r},{float(rep.lhs)!r},"
                     f"{float(rep.error_integral)!r},{float(rep.h_term)!r},"
                     f"{float(rep.residual)!r}\n")


# ---------------------------------------------------------------------------
# convergence driver
# ---------------------------------------------------------------------------

def convergence_study(config, quantity):
    """Per-level (h, value, error, order) table for one check quantity.

    Quantities: mesh-area, geodesic-error (plane charts only),
    intrinsic-density (at density_r or r_min), residual (on the configured
    annulus). Orders are log2 ratios of successive errors; density and area
    get a Richardson-extrapolated value at the measured order.
    """
    cfg = config
    chart = catalog.get_chart(cfg.surface)
    mesh = meshing.triangulate(chart, cfg.target_h, grading=cfg.grading,
                               base_u=tuple(cfg.base),
                               vertex_budget=cfg.vertex_budget)
    values = []
    hs = []
    for level in range(cfg.levels):
        if level > 0:
            mesh = meshing.refine(mesh, vertex_budget=cfg.vertex_budget)
        hs.append(mesh.h)
        if quantity == "mesh-area":
            values.append(mesh.total_area)
            continue
        fld = geodesic.distance_field(mesh, mesh.anchor_vertex,
                                      method=cfg.solver)
        if quantity == "geodesic-error":
            if not cfg.surface.startswith("plane"):
                raise ValueError("geodesic-error needs the plane chart "
                                 "(exact distances)")
            exact = np.linalg.norm(mesh.vertex_x - fld.base_x, axis=1)
            values.append(float(np.max(np.abs(fld.r - exact))))
        elif quantity == "intrinsic-density":
            R = cfg.density_r or cfg.r_min
            values.append(density.intrinsic_density(mesh, fld, R))
        elif quantity == "residual":
            grad = geodesic.gradient_field(mesh, fld)
            rep = monotonicity.monotonicity_residual(
                mesh, chart, fld, grad, *cfg.annulus, n_t=cfg.n_t,
                include_curvature_term=not cfg.disable_curvature_term)
            values.append(rep.residual)
        else:
            raise ValueError(f"unknown quantity {quantity!r}")

    rows = []
    extrapolated = None
    if quantity in ("geodesic-error", "residual"):
        errs = [abs(v) for v in values]
    else:
        # successive differences estimate the error of a converging value
        errs = [abs(values[k + 1] - values[k])
                for k in range(len(values) - 1)] + [None]
    for k, (h, v) in enumerate(zip(hs, values)):
        err = errs[k]
        if k + 1 < len(values) and errs[k] and errs[k + 1]:
            order = float(np.log2(errs[k] / errs[k + 1]))
        else:
            order = None
        rows.append({"level": k, "h": h, "value": v, "error": err,
                     "order": order})
    if quantity in ("mesh-area", "intrinsic-density") and len(values) >= 3:
        d1 = values[-2] - values[-3]
        d2 = values[-1] - values[-2]
        if d1 != 0.0 and d2 != 0.0 and abs(d2) < abs(d1):
            p = np.log2(abs(d1) / abs(d2))
            extrapolated = values[-1] + d2 / (2.0 ** p - 1.0)
        else:
            extrapolated = values[-1]
    return {"quantity": quantity, "rows": rows, "extrapolated": extrapolated}


def list_surfaces():
    """Deterministic text listing of charts and analytic cone entries."""
    lines = []
    for label in catalog.chart_labels():
        ch = catalog.get_chart(label)
        dom = ch.domain
        if dom.kind == "rect":
            (t0, t1), (s0, s1) = dom.bounds
            desc = (f"rect [{t0:g},{t1:g}] x [{s0:g},{s1:g}]"
                    + (" (periodic)" if dom.s_periodic else ""))
        else:
            desc = f"disk radius {dom.radius:g}"
        lines.append(f"{label:<14s} d={ch.d} N={ch.N} "
                     f"minimal={'yes' if ch.is_minimal else 'no '} {desc}")
    for label in sorted(catalog.CONES):
        entry = catalog.CONES[label]
        lines.append(f"{label:<14s} d={entry.d} analytic-only "
                     f"density={catalog.cone_density(entry):.6g} "
                     f"({entry.remark})")
    return "\n".join(lines)
