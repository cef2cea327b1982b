"""Numba kernels for fast marching on metric triangle meshes.

The solver works purely on intrinsic per-triangle layouts (planar
unfoldings from edge lengths), so the ambient embedding never enters.
Obtuse corners are handled by static virtual splitting: neighbors are
unfolded across the opposite edge until a vertex lands inside the obtuse
wedge, and that vertex then participates in the local update like a regular
triangle mate. Heap ties break by vertex index, which makes the whole
propagation deterministic.
"""

import numpy as np
from numba import njit

INF = np.inf
_MAX_UNFOLD = 16


@njit(cache=True, fastmath=False)
def _two_point_circular(ax, ay, bx, by, kx, ky, da, db):
    """Virtual-source update: place the point source consistent with the
    two corner values and read off its distance to the corner. Exact for
    locally circular wavefronts; INF when the circles do not intersect or
    the characteristic misses the edge."""
    ex = bx - ax
    ey = by - ay
    c = np.sqrt(ex * ex + ey * ey)
    if c <= 0.0:
        return INF
    ex /= c
    ey /= c
    px = (kx - ax) * ex + (ky - ay) * ey
    py = -(kx - ax) * ey + (ky - ay) * ex
    if py < 0.0:
        py = -py
    xs = (da * da + c * c - db * db) / (2.0 * c)
    ys2 = da * da - xs * xs
    if ys2 < 0.0:
        return INF
    ys = np.sqrt(ys2)
    # source sits on the far side of the edge; characteristic K -> S must
    # cross the edge segment
    denom = py + ys
    if denom <= 1e-300:
        return INF
    t = py / denom
    xcross = px + t * (xs - px)
    if xcross < -1e-12 * c or xcross > c * (1.0 + 1e-12):
        return INF
    dx = px - xs
    dy = py + ys
    return np.sqrt(dx * dx + dy * dy)


@njit(cache=True, fastmath=False)
def _two_point(ax, ay, bx, by, kx, ky, da, db):
    """Planar-front update of the corner at (kx, ky) from values da, db."""
    ex = bx - ax
    ey = by - ay
    c = np.sqrt(ex * ex + ey * ey)
    if c <= 0.0:
        return INF
    ex /= c
    ey /= c
    px = (kx - ax) * ex + (ky - ay) * ey
    py = -(kx - ax) * ey + (ky - ay) * ex
    if py < 0.0:
        py = -py
    g1 = (db - da) / c
    gg = 1.0 - g1 * g1
    if gg < 0.0:
        return INF
    g2 = np.sqrt(gg)
    if g2 <= 1e-14:
        return INF
    foot = px - py * g1 / g2
    if foot < -1e-12 * c or foot > c * (1.0 + 1e-12):
        return INF
    cand = da + g1 * px + g2 * py
    lo = da if da > db else db
    if cand < lo - 1e-12:
        return INF
    return cand


@njit(cache=True, fastmath=False)
def _unfold_split(t0, c0, tri_v, P, adj_tri, adj_corner):
    """Walk unfoldings across the edge opposite corner c0 of triangle t0
    until a vertex falls inside the (obtuse) wedge at that corner.

    Returns (vertex_id, ox, oy) in t0's layout frame, or (-1, 0, 0).
    """
    kx = P[t0, c0, 0]
    ky = P[t0, c0, 1]
    i1 = (c0 + 1) % 3
    i2 = (c0 + 2) % 3
    a0x = P[t0, i1, 0] - kx
    a0y = P[t0, i1, 1] - ky
    b0x = P[t0, i2, 0] - kx
    b0y = P[t0, i2, 1] - ky
    w = a0x * b0y - a0y * b0x

    va = tri_v[t0, i1]
    vb = tri_v[t0, i2]
    pax, pay = P[t0, i1, 0], P[t0, i1, 1]
    pbx, pby = P[t0, i2, 0], P[t0, i2, 1]
    cur_t = t0
    cur_c = c0

    for _ in range(_MAX_UNFOLD):
        t2 = adj_tri[cur_t, cur_c]
        if t2 < 0:
            return -1, 0.0, 0.0
        oc = adj_corner[cur_t, cur_c]
        ov = tri_v[t2, oc]
        ca2 = -1
        cb2 = -1
        for c in range(3):
            if c == oc:
                continue
            if tri_v[t2, c] == va:
                ca2 = c
            elif tri_v[t2, c] == vb:
                cb2 = c
        if ca2 < 0 or cb2 < 0:
            return -1, 0.0, 0.0
        dax = P[t2, oc, 0] - P[t2, ca2, 0]
        day = P[t2, oc, 1] - P[t2, ca2, 1]
        la = np.sqrt(dax * dax + day * day)
        dbx = P[t2, oc, 0] - P[t2, cb2, 0]
        dby = P[t2, oc, 1] - P[t2, cb2, 1]
        lb = np.sqrt(dbx * dbx + dby * dby)

        ex = pbx - pax
        ey = pby - pay
        dd = np.sqrt(ex * ex + ey * ey)
        if dd <= 0.0:
            return -1, 0.0, 0.0
        ex /= dd
        ey /= dd
        xo = (la * la + dd * dd - lb * lb) / (2.0 * dd)
        h2 = la * la - xo * xo
        ho = np.sqrt(h2) if h2 > 0.0 else 0.0
        side = (pbx - pax) * (ky - pay) - (pby - pay) * (kx - pax)
        sgn = -1.0 if side > 0.0 else 1.0
        ox = pax + xo * ex + sgn * ho * (-ey)
        oy = pay + xo * ey + sgn * ho * ex

        c1 = a0x * (oy - ky) - a0y * (ox - kx)
        c2 = (ox - kx) * b0y - (oy - ky) * b0x
        if c1 * w >= 0.0 and c2 * w >= 0.0:
            return ov, ox, oy
        if c1 * w < 0.0:
            # beyond the A ray: keep sweeping toward B across edge (o, vb)
            va = ov
            pax, pay = ox, oy
            cur_t = t2
            cur_c = ca2
        else:
            vb = ov
            pbx, pby = ox, oy
            cur_t = t2
            cur_c = cb2
    return -1, 0.0, 0.0


@njit(cache=True, fastmath=False)
def virtual_splits(tri_v, P, adj_tri, adj_corner, obtuse):
    nt = tri_v.shape[0]
    sv = np.full((nt, 3), -1, np.int64)
    sx = np.zeros((nt, 3))
    sy = np.zeros((nt, 3))
    for t in range(nt):
        for c in range(3):
            if obtuse[t, c]:
                v, ox, oy = _unfold_split(t, c, tri_v, P, adj_tri, adj_corner)
                sv[t, c] = v
                sx[t, c] = ox
                sy[t, c] = oy
    return sv, sx, sy


@njit(cache=True, fastmath=False)
def _heap_less(keys, vids, a, b):
    if keys[a] != keys[b]:
        return keys[a] < keys[b]
    return vids[a] < vids[b]


@njit(cache=True, fastmath=False)
def _sift_up(keys, vids, pos):
    while pos > 0:
        parent = (pos - 1) >> 1
        if _heap_less(keys, vids, pos, parent):
            keys[pos], keys[parent] = keys[parent], keys[pos]
            vids[pos], vids[parent] = vids[parent], vids[pos]
            pos = parent
        else:
            break


@njit(cache=True, fastmath=False)
def _sift_down(keys, vids, size, pos):
    while True:
        l = 2 * pos + 1
        if l >= size:
            break
        smallest = l
        r = l + 1
        if r < size and _heap_less(keys, vids, r, l):
            smallest = r
        if _heap_less(keys, vids, smallest, pos):
            keys[pos], keys[smallest] = keys[smallest], keys[pos]
            vids[pos], vids[smallest] = vids[smallest], vids[pos]
            pos = smallest
        else:
            break


@njit(cache=True, fastmath=False)
def _update_corner(t, ck, tri_v, P, r, known, sv, sx, sy):
    k = tri_v[t, ck]
    i1 = (ck + 1) % 3
    i2 = (ck + 2) % 3
    vi = tri_v[t, i1]
    vj = tri_v[t, i2]
    kx = P[t, ck, 0]
    ky = P[t, ck, 1]
    cand = INF
    if known[vi]:
        dx = kx - P[t, i1, 0]
        dy = ky - P[t, i1, 1]
        c1 = r[vi] + np.sqrt(dx * dx + dy * dy)
        if c1 < cand:
            cand = c1
    if known[vj]:
        dx = kx - P[t, i2, 0]
        dy = ky - P[t, i2, 1]
        c1 = r[vj] + np.sqrt(dx * dx + dy * dy)
        if c1 < cand:
            cand = c1
    if known[vi] and known[vj]:
        c1 = _two_point(P[t, i1, 0], P[t, i1, 1], P[t, i2, 0], P[t, i2, 1],
                        kx, ky, r[vi], r[vj])
        if c1 < cand:
            cand = c1
        c1 = _two_point_circular(P[t, i1, 0], P[t, i1, 1], P[t, i2, 0],
                                 P[t, i2, 1], kx, ky, r[vi], r[vj])
        if c1 < cand:
            cand = c1
    ov = sv[t, ck]
    if ov >= 0 and known[ov]:
        ox = sx[t, ck]
        oy = sy[t, ck]
        dx = kx - ox
        dy = ky - oy
        c1 = r[ov] + np.sqrt(dx * dx + dy * dy)
        if c1 < cand:
            cand = c1
        if known[vi]:
            c1 = _two_point(P[t, i1, 0], P[t, i1, 1], ox, oy, kx, ky,
                            r[vi], r[ov])
            if c1 < cand:
                cand = c1
            c1 = _two_point_circular(P[t, i1, 0], P[t, i1, 1], ox, oy,
                                     kx, ky, r[vi], r[ov])
            if c1 < cand:
                cand = c1
        if known[vj]:
            c1 = _two_point(ox, oy, P[t, i2, 0], P[t, i2, 1], kx, ky,
                            r[ov], r[vj])
            if c1 < cand:
                cand = c1
            c1 = _two_point_circular(ox, oy, P[t, i2, 0], P[t, i2, 1],
                                     kx, ky, r[ov], r[vj])
            if c1 < cand:
                cand = c1
    return cand


@njit(cache=True, fastmath=False)
def fast_march(n, base, tri_v, P, inc_ptr, inc_tri, inc_corner,
               sv, sx, sy, trig_ptr, trig_tri, trig_corner,
               init_ids, init_vals):
    """Single-source eikonal distances on the intrinsic triangle geometry.

    init_ids/init_vals seed a patch around the source (the caller supplies
    near-exact distances there); the front then propagates outward from a
    smooth, well-resolved wavefront instead of the singular point source.
    """
    r = np.full(n, INF)
    known = np.zeros(n, np.bool_)
    cap = 32 + 24 * n
    hkeys = np.empty(cap)
    hvids = np.empty(cap, np.int64)
    hsize = 0

    for q in range(init_ids.shape[0]):
        v = init_ids[q]
        if init_vals[q] < r[v]:
            r[v] = init_vals[q]
    r[base] = 0.0
    for q in range(init_ids.shape[0]):
        v = init_ids[q]
        hkeys[hsize] = r[v]
        hvids[hsize] = v
        hsize += 1
        _sift_up(hkeys, hvids, hsize - 1)
    if hsize == 0:
        hkeys[0] = 0.0
        hvids[0] = base
        hsize = 1

    while hsize > 0:
        key = hkeys[0]
        v = hvids[0]
        hsize -= 1
        hkeys[0] = hkeys[hsize]
        hvids[0] = hvids[hsize]
        _sift_down(hkeys, hvids, hsize, 0)
        if known[v] or key > r[v] + 1e-15:
            continue
        known[v] = True
        r[v] = key

        # triangle-mate updates
        for q in range(inc_ptr[v], inc_ptr[v + 1]):
            t = inc_tri[q]
            cv = inc_corner[q]
            for dc in range(1, 3):
                ck = (cv + dc) % 3
                k = tri_v[t, ck]
                if known[k]:
                    continue
                cand = _update_corner(t, ck, tri_v, P, r, known, sv, sx, sy)
                if cand < r[k] - 1e-15:
                    r[k] = cand
                    if hsize >= cap:
                        # drop stale entries and re-heapify
                        m = 0
                        for idx in range(hsize):
                            vid = hvids[idx]
                            if not known[vid] and hkeys[idx] <= r[vid] + 1e-15:
                                hkeys[m] = hkeys[idx]
                                hvids[m] = hvids[idx]
                                m += 1
                        hsize = m
                        for idx in range(hsize // 2 - 1, -1, -1):
                            _sift_down(hkeys, hvids, hsize, idx)
                    hkeys[hsize] = cand
                    hvids[hsize] = k
                    hsize += 1
                    _sift_up(hkeys, hvids, hsize - 1)
        # virtual-split updates triggered by this vertex
        for q in range(trig_ptr[v], trig_ptr[v + 1]):
            t = trig_tri[q]
            ck = trig_corner[q]
            k = tri_v[t, ck]
            if known[k]:
                continue
            cand = _update_corner(t, ck, tri_v, P, r, known, sv, sx, sy)
            if cand < r[k] - 1e-15:
                r[k] = cand
                if hsize >= cap:
                    m = 0
                    for idx in range(hsize):
                        vid = hvids[idx]
                        if not known[vid] and hkeys[idx] <= r[vid] + 1e-15:
                            hkeys[m] = hkeys[idx]
                            hvids[m] = hvids[idx]
                            m += 1
                    hsize = m
                    for idx in range(hsize // 2 - 1, -1, -1):
                        _sift_down(hkeys, hvids, hsize, idx)
                hkeys[hsize] = cand
                hvids[hsize] = k
                hsize += 1
                _sift_up(hkeys, hvids, hsize - 1)
    return r
