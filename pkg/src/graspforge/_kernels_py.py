"""Vectorised numpy kernels.

This is the fallback backend when the compiled extension is unavailable, and
it also supplies the batched primitives used by the brute-force checks.

Triangle-triangle tests use the edge-crossing formulation: two triangles
intersect iff some edge of one meets the other (coplanar pairs reduce to 2D
segment/triangle overlap).
"""
from __future__ import annotations

import numpy as np

COPLANAR_EPS = 1e-9
_INSIDE_TOL = 1e-9


def _dot(a, b):
    return np.einsum("...k,...k->...", a, b)


def _orient2(a, b, c):
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])


def _on_seg2(a, b, p, tol):
    return ((np.minimum(a[..., 0], b[..., 0]) - tol <= p[..., 0]) & (p[..., 0] <= np.maximum(a[..., 0], b[..., 0]) + tol)
            & (np.minimum(a[..., 1], b[..., 1]) - tol <= p[..., 1]) & (p[..., 1] <= np.maximum(a[..., 1], b[..., 1]) + tol))


def _seg_seg_2d(a, b, c, d):
    tol = 1e-12
    o1, o2 = _orient2(a, b, c), _orient2(a, b, d)
    o3, o4 = _orient2(c, d, a), _orient2(c, d, b)
    z1, z2, z3, z4 = (np.abs(o) <= tol for o in (o1, o2, o3, o4))
    proper = (((o1 > tol) & (o2 < -tol)) | ((o1 < -tol) & (o2 > tol))) & \
             (((o3 > tol) & (o4 < -tol)) | ((o3 < -tol) & (o4 > tol)))
    touch = (z1 & _on_seg2(a, b, c, 1e-9)) | (z2 & _on_seg2(a, b, d, 1e-9)) | \
            (z3 & _on_seg2(c, d, a, 1e-9)) | (z4 & _on_seg2(c, d, b, 1e-9))
    return proper | touch


def _point_in_tri_2d(p, a, b, c):
    tol = 1e-12
    d1, d2, d3 = _orient2(a, b, p), _orient2(b, c, p), _orient2(c, a, p)
    neg = (d1 < -tol) | (d2 < -tol) | (d3 < -tol)
    pos = (d1 > tol) | (d2 > tol) | (d3 > tol)
    return ~(neg & pos)


def _drop_axis(n):
    return np.argmax(np.abs(n), axis=-1)


def _project(x, axis):
    keep = np.array([[1, 2], [0, 2], [0, 1]])[np.ravel(axis)]
    return np.take_along_axis(x, keep, axis=-1)


def seg_tri_intersect(p, q, v0, v1, v2):
    """Closed segment [p, q] vs closed triangle, broadcast over leading dims."""
    p, q, v0, v1, v2 = np.broadcast_arrays(*(np.asarray(x, float) for x in (p, q, v0, v1, v2)))
    n = np.cross(v1 - v0, v2 - v0)
    nn = np.linalg.norm(n, axis=-1)
    nh = n / np.where(nn > 0, nn, 1.0)[..., None]
    dp = _dot(p - v0, nh)
    dq = _dot(q - v0, nh)
    dp = np.where(np.abs(dp) <= COPLANAR_EPS, 0.0, dp)
    dq = np.where(np.abs(dq) <= COPLANAR_EPS, 0.0, dq)
    coplanar = (dp == 0) & (dq == 0)
    crosses = (dp * dq <= 0) & ~coplanar

    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(crosses, dp / (dp - dq), 0.0)
    x = p + (q - p) * s[..., None]
    inside = np.ones(dp.shape, dtype=bool)
    for a, b in ((v0, v1), (v1, v2), (v2, v0)):
        e = b - a
        side = _dot(np.cross(e, x - a), nh)
        inside &= side >= -_INSIDE_TOL * np.linalg.norm(e, axis=-1)
    hit = crosses & inside

    if coplanar.any():
        idx = np.flatnonzero(coplanar.ravel())
        ax = _drop_axis(n.reshape(-1, 3)[idx])
        P = _project(p.reshape(-1, 3)[idx], ax)
        Q = _project(q.reshape(-1, 3)[idx], ax)
        A = _project(v0.reshape(-1, 3)[idx], ax)
        B = _project(v1.reshape(-1, 3)[idx], ax)
        C = _project(v2.reshape(-1, 3)[idx], ax)
        co = _point_in_tri_2d(P, A, B, C) | _point_in_tri_2d(Q, A, B, C)
        co |= _seg_seg_2d(P, Q, A, B) | _seg_seg_2d(P, Q, B, C) | _seg_seg_2d(P, Q, C, A)
        flat = hit.ravel().copy()
        flat[idx] = co
        hit = flat.reshape(hit.shape)
    return hit


def tri_tri_batch(ta: np.ndarray, tb: np.ndarray) -> np.ndarray:
    """Pairwise intersection of (N,3,3) triangle arrays ``ta[i]`` vs ``tb[i]``."""
    ta = np.asarray(ta, float)
    tb = np.asarray(tb, float)
    if len(ta) == 0:
        return np.zeros(0, dtype=bool)
    hit = np.zeros(len(ta), dtype=bool)
    for i in range(3):
        j = (i + 1) % 3
        hit |= seg_tri_intersect(ta[:, i], ta[:, j], tb[:, 0], tb[:, 1], tb[:, 2])
        hit |= seg_tri_intersect(tb[:, i], tb[:, j], ta[:, 0], ta[:, 1], ta[:, 2])
    return hit


def point_tri_dist(p, a, b, c):
    """Distance from points to triangles (broadcast), region-based closest point."""
    p, a, b, c = np.broadcast_arrays(*(np.asarray(x, float) for x in (p, a, b, c)))
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = _dot(ab, ap), _dot(ac, ap)
    bp = p - b
    d3, d4 = _dot(ab, bp), _dot(ac, bp)
    cp = p - c
    d5, d6 = _dot(ab, cp), _dot(ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = va + vb + vc
        v = vb / denom
        w = vc / denom
        closest = a + ab * v[..., None] + ac * w[..., None]
        # edge regions
        e_ab = a + ab * (d1 / (d1 - d3))[..., None]
        e_ac = a + ac * (d2 / (d2 - d6))[..., None]
        e_bc = b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)))[..., None]
    m = lambda cond, pt: np.where(cond[..., None], pt, closest)
    # apply from lowest to highest priority so earlier regions win
    closest = m((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0), e_bc)
    closest = m((vb <= 0) & (d2 >= 0) & (d6 <= 0), e_ac)
    closest = m((d6 >= 0) & (d5 <= d6), c)
    closest = m((vc <= 0) & (d1 >= 0) & (d3 <= 0), e_ab)
    closest = m((d3 >= 0) & (d4 <= d3), b)
    closest = m((d1 <= 0) & (d2 <= 0), a)
    return np.linalg.norm(p - closest, axis=-1)


def seg_seg_dist(p1, q1, p2, q2):
    """Distance between closed segments (broadcast)."""
    p1, q1, p2, q2 = np.broadcast_arrays(*(np.asarray(x, float) for x in (p1, q1, p2, q2)))
    d1, d2, r = q1 - p1, q2 - p2, p1 - p2
    a, e, f = _dot(d1, d1), _dot(d2, d2), _dot(d2, r)
    c, b = _dot(d1, r), _dot(d1, d2)
    tiny = 1e-18
    denom = a * e - b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom > tiny, np.clip((b * f - c * e) / denom, 0, 1), 0.0)
        s = np.where(a <= tiny, 0.0, s)
        t = np.where(e > tiny, (b * s + f) / e, 0.0)
        s_t0 = np.where(a > tiny, np.clip(-c / a, 0, 1), 0.0)
        s_t1 = np.where(a > tiny, np.clip((b - c) / a, 0, 1), 0.0)
    s = np.where(t < 0, s_t0, np.where(t > 1, s_t1, s))
    t = np.clip(t, 0, 1)
    c1 = p1 + d1 * s[..., None]
    c2 = p2 + d2 * t[..., None]
    return np.linalg.norm(c1 - c2, axis=-1)


def seg_tri_dist(p, q, tris: np.ndarray) -> np.ndarray:
    """Distance from segment [p, q] to each triangle of (T,3,3)."""
    tris = np.asarray(tris, float)
    v0, v1, v2 = tris[:, 0], tris[:, 1], tris[:, 2]
    d = np.minimum(point_tri_dist(p, v0, v1, v2), point_tri_dist(q, v0, v1, v2))
    for a, b in ((v0, v1), (v1, v2), (v2, v0)):
        d = np.minimum(d, seg_seg_dist(p, q, a, b))
    return np.where(seg_tri_intersect(p, q, v0, v1, v2), 0.0, d)


def point_segments_min_dist(points, seg_a, seg_b, chunk: int = 4096) -> np.ndarray:
    """For every point, the distance to the nearest of the segments."""
    points = np.asarray(points, float).reshape(-1, 3)
    seg_a = np.asarray(seg_a, float).reshape(-1, 3)
    seg_b = np.asarray(seg_b, float).reshape(-1, 3)
    out = np.full(len(points), np.inf)
    if len(seg_a) == 0 or len(points) == 0:
        return out
    d = seg_b - seg_a
    dd = np.maximum(_dot(d, d), 1e-300)
    step = max(1, chunk // max(1, len(seg_a)) * 64)
    for s in range(0, len(points), step):
        p = points[s:s + step, None, :]
        t = np.clip(_dot(p - seg_a, d) / dd, 0.0, 1.0)
        diff = p - (seg_a + d * t[..., None])
        out[s:s + step] = np.sqrt(_dot(diff, diff).min(axis=1))
    return out


# ---------------------------------------------------------------- BVH queries

def _leaf_tri_pairs(la, lb, a_start, a_count, b_start, b_count):
    ca, cb = a_count[la], b_count[lb]
    reps = ca * cb
    pair = np.repeat(np.arange(len(la)), reps)
    off = np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps)
    ia = a_start[la][pair] + off // cb[pair]
    ib = b_start[lb][pair] + off % cb[pair]
    return ia, ib


def bvh_collide(a_lo, a_hi, a_left, a_right, a_start, a_count, a_tris,
                b_lo, b_hi, b_left, b_right, b_start, b_count, b_tris) -> bool:
    """Dual-tree traversal; both trees' boxes and triangles share one frame."""
    fa = np.zeros(1, dtype=np.int64)
    fb = np.zeros(1, dtype=np.int64)
    leaf_a, leaf_b = [], []
    while len(fa):
        ok = np.all((a_lo[fa] <= b_hi[fb]) & (b_lo[fb] <= a_hi[fa]), axis=1)
        fa, fb = fa[ok], fb[ok]
        a_leaf = a_left[fa] < 0
        b_leaf = b_left[fb] < 0
        both = a_leaf & b_leaf
        leaf_a.append(fa[both])
        leaf_b.append(fb[both])
        split_a = ~both & (b_leaf | (~a_leaf & (a_count[fa] >= b_count[fb])))
        split_b = ~both & ~split_a
        na = fa[split_a]
        nb = fb[split_b]
        fa = np.concatenate([a_left[na], a_right[na], fa[split_b], fa[split_b]])
        fb = np.concatenate([fb[split_a], fb[split_a], b_left[nb], b_right[nb]])
    la = np.concatenate(leaf_a)
    lb = np.concatenate(leaf_b)
    if len(la) == 0:
        return False
    ia, ib = _leaf_tri_pairs(la, lb, a_start, a_count, b_start, b_count)
    # prune triangle pairs by their own boxes before the exact test
    ta, tb = a_tris[ia], b_tris[ib]
    ok = np.all((ta.min(axis=1) <= tb.max(axis=1)) & (tb.min(axis=1) <= ta.max(axis=1)), axis=1)
    return bool(tri_tri_batch(ta[ok], tb[ok]).any())


def bvh_capsule(lo, hi, left, right, start, count, tris, p, q, radius) -> bool:
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    cap_lo = np.minimum(p, q) - radius
    cap_hi = np.maximum(p, q) + radius
    front = np.zeros(1, dtype=np.int64)
    leaves = []
    while len(front):
        ok = np.all((lo[front] <= cap_hi) & (cap_lo <= hi[front]), axis=1)
        front = front[ok]
        is_leaf = left[front] < 0
        leaves.append(front[is_leaf])
        inner = front[~is_leaf]
        front = np.concatenate([left[inner], right[inner]])
    leaves = np.concatenate(leaves)
    if len(leaves) == 0:
        return False
    c = count[leaves]
    idx = np.repeat(start[leaves], c) + (np.arange(c.sum()) - np.repeat(np.cumsum(c) - c, c))
    d = seg_tri_dist(p, q, tris[idx])
    return bool(np.any((d < radius) | (d == 0.0)))
