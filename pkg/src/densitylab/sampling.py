"""Deterministic quasi-random sampling of chart parameter domains."""

import numpy as np

# Kronecker (R2) sequence driven by the plastic constant: well-spread 2D
# points without any RNG state.
_PLASTIC = 1.32471795724474602596
_A1 = 1.0 / _PLASTIC
_A2 = 1.0 / (_PLASTIC * _PLASTIC)


def unit_square(n, skip=0):
    """First n points (after `skip`) of the R2 sequence in [0,1)^2."""
    k = np.arange(skip + 1, skip + n + 1, dtype=float)
    return np.stack([(0.5 + _A1 * k) % 1.0, (0.5 + _A2 * k) % 1.0], axis=1)


def domain_points(chart, n, skip=0, margin=0.0):
    """Quasi-random parameter points inside a chart's domain.

    margin shrinks the domain toward its center by the given fraction,
    keeping samples away from the boundary (and from collapsed rows).
    """
    q = unit_square(n, skip=skip)
    dom = chart.domain
    if dom.kind == "rect":
        (t0, t1), (s0, s1) = dom.bounds
        tc, sc = 0.5 * (t0 + t1), 0.5 * (s0 + s1)
        th = 0.5 * (t1 - t0) * (1.0 - margin)
        sh = 0.5 * (s1 - s0) * (1.0 - margin)
        t = tc + (2.0 * q[:, 0] - 1.0) * th
        s = sc + (2.0 * q[:, 1] - 1.0) * sh
        return np.stack([t, s], axis=1)
    # disk: area-uniform polar map
    r = dom.radius * (1.0 - margin) * np.sqrt(q[:, 0])
    phi = 2.0 * np.pi * q[:, 1]
    return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)
