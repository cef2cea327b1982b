"""Exact sublevel-set areas and centroids for per-triangle linear fields.

Every density and annulus integral in the package reduces to clipping a
triangle against level lines of a linear field. For a linear field the
clipped region is a corner triangle or its complement, so area fractions
and centroids have closed forms; no indicator quadrature, no smoothing.
All routines are vectorized over triangles and work in barycentric
coordinates, which makes them independent of how the triangle is laid out.
"""

import numpy as np

_EPS = 1e-300


def sublevel(f, level):
    """Fraction and barycentric centroid of {f < level} per triangle.

    f: (m, 3) corner values. Returns (frac (m,), bary (m, 3)); bary rows are
    zero where the region is empty. Exact for the linear interpolant.
    """
    f = np.asarray(f, float)
    m = f.shape[0]
    order = np.argsort(f, axis=1, kind="stable")
    fs = np.take_along_axis(f, order, axis=1)
    fa, fb, fc = fs[:, 0], fs[:, 1], fs[:, 2]

    frac = np.zeros(m)
    bary_s = np.zeros((m, 3))  # in sorted-corner coordinates

    full = level >= fc
    frac[full] = 1.0
    bary_s[full] = 1.0 / 3.0

    low = (level > fa) & (level <= fb)
    if np.any(low):
        t_ab = (level - fa[low]) / np.maximum(fb[low] - fa[low], _EPS)
        t_ac = (level - fa[low]) / np.maximum(fc[low] - fa[low], _EPS)
        t_ab = np.clip(t_ab, 0.0, 1.0)
        t_ac = np.clip(t_ac, 0.0, 1.0)
        frac[low] = t_ab * t_ac
        bary_s[low, 0] = 1.0 - (t_ab + t_ac) / 3.0
        bary_s[low, 1] = t_ab / 3.0
        bary_s[low, 2] = t_ac / 3.0

    mid = (level > fb) & (level < fc)
    if np.any(mid):
        s_ca = (fc[mid] - level) / np.maximum(fc[mid] - fa[mid], _EPS)
        s_cb = (fc[mid] - level) / np.maximum(fc[mid] - fb[mid], _EPS)
        s_ca = np.clip(s_ca, 0.0, 1.0)
        s_cb = np.clip(s_cb, 0.0, 1.0)
        cut = s_ca * s_cb
        fr = 1.0 - cut
        # centroid of kept part = (full - cut * corner_at_max) / kept
        exc = np.stack([s_ca / 3.0, s_cb / 3.0, 1.0 - (s_ca + s_cb) / 3.0],
                       axis=1)
        frac[mid] = fr
        bary_s[mid] = (1.0 / 3.0 - exc * cut[:, None]) / fr[:, None]

    bary = np.zeros((m, 3))
    np.put_along_axis(bary, order, bary_s, axis=1)
    return frac, bary


def band(f, lo, hi):
    """Fraction and barycentric centroid of {lo <= f <= hi} per triangle."""
    fr_hi, b_hi = sublevel(f, hi)
    fr_lo, b_lo = sublevel(f, lo)
    frac = fr_hi - fr_lo
    keep = frac > 1e-15
    bary = np.zeros_like(b_hi)
    bary[keep] = (b_hi[keep] * fr_hi[keep, None]
                  - b_lo[keep] * fr_lo[keep, None]) / frac[keep, None]
    frac = np.clip(frac, 0.0, None)
    return frac, bary


def sublevel_area(f, level, tri_area):
    """Total area of {f < level} over all triangles."""
    frac, _ = sublevel(f, level)
    return float(np.dot(frac, tri_area))
