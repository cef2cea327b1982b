import numpy as np

from densitylab import clipping
from densitylab.sampling import unit_square

# ---------------------------------------------------------------------------
# brute-force oracle: Sutherland-Hodgman clip of the reference triangle
# against {f <= level}, areas/centroids by the shoelace formula
# ---------------------------------------------------------------------------

_REF = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def _clip_halfplane(poly, fvals, level):
    out = []
    n = len(poly)
    for i in range(n):
        j = (i + 1) % n
        fi, fj = fvals[i], fvals[j]
        if fi <= level:
            out.append((poly[i], fi))
        if (fi <= level) != (fj <= level):
            t = (level - fi) / (fj - fi)
            out.append((poly[i] + t * (poly[j] - poly[i]),
                        fi + t * (fj - fi)))
    if not out:
        return np.zeros((0, 2)), np.zeros(0)
    pts, vals = zip(*out)
    return np.asarray(pts), np.asarray(vals)


def _poly_area_centroid(poly):
    if len(poly) < 3:
        return 0.0, np.zeros(2)
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * np.sum(cross)
    if abs(area) < 1e-300:
        return 0.0, np.zeros(2)
    cx = np.sum((x + xn) * cross) / (6.0 * area)
    cy = np.sum((y + yn) * cross) / (6.0 * area)
    return abs(area), np.array([cx, cy])


def _oracle_sublevel(fcorner, level):
    poly, vals = _clip_halfplane(_REF, fcorner, level)
    area, cent = _poly_area_centroid(poly)
    frac = area / 0.5
    bary = np.array([1.0 - cent[0] - cent[1], cent[0], cent[1]])
    return frac, bary


def _random_fields(n):
    q = unit_square(2 * n).ravel()[:3 * n].reshape(n, 3)
    return 4.0 * q - 2.0


def test_sublevel_matches_polygon_oracle():
    f = _random_fields(300)
    for level in (-1.5, -0.3, 0.0, 0.4, 1.1, 1.9):
        frac, bary = clipping.sublevel(f, level)
        for k in range(f.shape[0]):
            frac_o, bary_o = _oracle_sublevel(f[k], level)
            assert abs(frac[k] - frac_o) <= 1e-12
            if frac_o > 1e-9:
                assert np.max(np.abs(bary[k] - bary_o)) <= 1e-10


def test_sublevel_exact_for_linear_fields_closed_form():
    # single triangle, corner cut: fraction t_ab * t_ac exactly
    f = np.array([[0.0, 1.0, 2.0]])
    frac, bary = clipping.sublevel(f, 0.5)
    assert abs(frac[0] - 0.5 * 0.25) <= 1e-15
    frac, _ = clipping.sublevel(f, 1.5)
    assert abs(frac[0] - (1.0 - 0.5 * 0.25)) <= 1e-15


def test_sublevel_full_and_empty():
    f = np.array([[0.0, 1.0, 2.0]])
    frac, bary = clipping.sublevel(f, 5.0)
    assert frac[0] == 1.0 and np.allclose(bary[0], 1.0 / 3.0)
    frac, bary = clipping.sublevel(f, -1.0)
    assert frac[0] == 0.0


def test_constant_field():
    f = np.array([[1.0, 1.0, 1.0]])
    assert clipping.sublevel(f, 2.0)[0][0] == 1.0
    assert clipping.sublevel(f, 0.5)[0][0] == 0.0


def test_band_additivity_and_centroid():
    f = _random_fields(200)
    lo, mid, hi = -0.5, 0.4, 1.3
    fr_a, b_a = clipping.band(f, lo, mid)
    fr_b, b_b = clipping.band(f, mid, hi)
    fr_all, b_all = clipping.band(f, lo, hi)
    assert np.max(np.abs(fr_a + fr_b - fr_all)) <= 1e-12
    # first moments add: frac * bary is additive
    m = fr_a[:, None] * b_a + fr_b[:, None] * b_b
    keep = fr_all > 1e-9
    assert np.max(np.abs(m[keep] - fr_all[keep, None] * b_all[keep])) <= 1e-12


def test_sublevel_area_helper():
    f = np.array([[0.0, 1.0, 2.0], [3.0, 3.0, 3.0]])
    areas = np.array([2.0, 4.0])
    # first triangle fraction 1/8, second fully below level 4
    assert abs(clipping.sublevel_area(f, 0.5, areas) - (0.125 * 2.0)) <= 1e-14
    assert abs(clipping.sublevel_area(f, 4.0, areas) - 6.0) <= 1e-14
