# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled collision kernels. Signatures mirror ``_kernels_py``."""
import numpy as np
from libc.math cimport fabs, sqrt
from libc.stdlib cimport malloc, realloc, free

cdef double COPLANAR_EPS = 1e-9
cdef double INSIDE_TOL = 1e-9


cdef inline void sub3(const double* a, const double* b, double* o) noexcept nogil:
    o[0] = a[0] - b[0]; o[1] = a[1] - b[1]; o[2] = a[2] - b[2]

cdef inline void cross3(const double* a, const double* b, double* o) noexcept nogil:
    o[0] = a[1] * b[2] - a[2] * b[1]
    o[1] = a[2] * b[0] - a[0] * b[2]
    o[2] = a[0] * b[1] - a[1] * b[0]

cdef inline double dot3(const double* a, const double* b) noexcept nogil:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]

cdef inline double clamp01(double x) noexcept nogil:
    return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)


# ------------------------------------------------------------------ 2D helpers

cdef inline double orient2(double ax, double ay, double bx, double by, double cx, double cy) noexcept nogil:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)

cdef inline bint on_seg2(double ax, double ay, double bx, double by, double px, double py) noexcept nogil:
    cdef double tol = 1e-9
    return (min(ax, bx) - tol <= px <= max(ax, bx) + tol) and (min(ay, by) - tol <= py <= max(ay, by) + tol)

cdef bint seg_seg_2d(double ax, double ay, double bx, double by,
                     double cx, double cy, double dx, double dy) noexcept nogil:
    cdef double tol = 1e-12
    cdef double o1 = orient2(ax, ay, bx, by, cx, cy)
    cdef double o2 = orient2(ax, ay, bx, by, dx, dy)
    cdef double o3 = orient2(cx, cy, dx, dy, ax, ay)
    cdef double o4 = orient2(cx, cy, dx, dy, bx, by)
    if ((o1 > tol and o2 < -tol) or (o1 < -tol and o2 > tol)) and \
       ((o3 > tol and o4 < -tol) or (o3 < -tol and o4 > tol)):
        return True
    if fabs(o1) <= tol and on_seg2(ax, ay, bx, by, cx, cy): return True
    if fabs(o2) <= tol and on_seg2(ax, ay, bx, by, dx, dy): return True
    if fabs(o3) <= tol and on_seg2(cx, cy, dx, dy, ax, ay): return True
    if fabs(o4) <= tol and on_seg2(cx, cy, dx, dy, bx, by): return True
    return False

cdef bint point_in_tri_2d(double px, double py, double ax, double ay, double bx, double by,
                          double cx, double cy) noexcept nogil:
    cdef double tol = 1e-12
    cdef double d1 = orient2(ax, ay, bx, by, px, py)
    cdef double d2 = orient2(bx, by, cx, cy, px, py)
    cdef double d3 = orient2(cx, cy, ax, ay, px, py)
    cdef bint neg = d1 < -tol or d2 < -tol or d3 < -tol
    cdef bint pos = d1 > tol or d2 > tol or d3 > tol
    return not (neg and pos)

cdef inline void drop_axis(const double* n, int* i0, int* i1) noexcept nogil:
    cdef double a = fabs(n[0]), b = fabs(n[1]), c = fabs(n[2])
    if a >= b and a >= c:
        i0[0] = 1; i1[0] = 2
    elif b >= c:
        i0[0] = 0; i1[0] = 2
    else:
        i0[0] = 0; i1[0] = 1

cdef bint coplanar_tri_tri(const double* n, const double* v0, const double* v1, const double* v2,
                           const double* u0, const double* u1, const double* u2) noexcept nogil:
    cdef int i0, i1, i, j
    drop_axis(n, &i0, &i1)
    cdef const double* V[3]
    cdef const double* U[3]
    V[0] = v0; V[1] = v1; V[2] = v2
    U[0] = u0; U[1] = u1; U[2] = u2
    for i in range(3):
        for j in range(3):
            if seg_seg_2d(V[i][i0], V[i][i1], V[(i + 1) % 3][i0], V[(i + 1) % 3][i1],
                          U[j][i0], U[j][i1], U[(j + 1) % 3][i0], U[(j + 1) % 3][i1]):
                return True
    if point_in_tri_2d(v0[i0], v0[i1], u0[i0], u0[i1], u1[i0], u1[i1], u2[i0], u2[i1]):
        return True
    if point_in_tri_2d(u0[i0], u0[i1], v0[i0], v0[i1], v1[i0], v1[i1], v2[i0], v2[i1]):
        return True
    return False


# ----------------------------------------------------- Möller interval overlap

cdef inline bint compute_interval(double vv0, double vv1, double vv2, double d0, double d1, double d2,
                                  double* lo, double* hi) noexcept nogil:
    # returns False when the triangle is coplanar with the other plane
    cdef double a, b
    if d0 * d1 > 0.0:
        a = vv2 + (vv0 - vv2) * d2 / (d2 - d0)
        b = vv2 + (vv1 - vv2) * d2 / (d2 - d1)
    elif d0 * d2 > 0.0:
        a = vv1 + (vv0 - vv1) * d1 / (d1 - d0)
        b = vv1 + (vv2 - vv1) * d1 / (d1 - d2)
    elif d1 * d2 > 0.0 or d0 != 0.0:
        a = vv0 + (vv1 - vv0) * d0 / (d0 - d1)
        b = vv0 + (vv2 - vv0) * d0 / (d0 - d2)
    elif d1 != 0.0:
        a = vv1 + (vv0 - vv1) * d1 / (d1 - d0)
        b = vv1 + (vv2 - vv1) * d1 / (d1 - d2)
    elif d2 != 0.0:
        a = vv2 + (vv0 - vv2) * d2 / (d2 - d0)
        b = vv2 + (vv1 - vv2) * d2 / (d2 - d1)
    else:
        return False
    if a > b:
        a, b = b, a
    lo[0] = a; hi[0] = b
    return True

cdef bint tri_tri(const double* v0, const double* v1, const double* v2,
                  const double* u0, const double* u1, const double* u2) noexcept nogil:
    cdef double e1[3], e2[3], n1[3], n2[3], d[3], t[3]
    cdef double nl, d1, d2, du0, du1, du2, dv0, dv1, dv2
    sub3(v1, v0, e1); sub3(v2, v0, e2); cross3(e1, e2, n1)
    nl = sqrt(dot3(n1, n1))
    if nl == 0.0:
        return False
    n1[0] /= nl; n1[1] /= nl; n1[2] /= nl
    d1 = -dot3(n1, v0)
    du0 = dot3(n1, u0) + d1
    du1 = dot3(n1, u1) + d1
    du2 = dot3(n1, u2) + d1
    if fabs(du0) < COPLANAR_EPS: du0 = 0.0
    if fabs(du1) < COPLANAR_EPS: du1 = 0.0
    if fabs(du2) < COPLANAR_EPS: du2 = 0.0
    if du0 * du1 > 0.0 and du0 * du2 > 0.0:
        return False

    sub3(u1, u0, e1); sub3(u2, u0, e2); cross3(e1, e2, n2)
    nl = sqrt(dot3(n2, n2))
    if nl == 0.0:
        return False
    n2[0] /= nl; n2[1] /= nl; n2[2] /= nl
    d2 = -dot3(n2, u0)
    dv0 = dot3(n2, v0) + d2
    dv1 = dot3(n2, v1) + d2
    dv2 = dot3(n2, v2) + d2
    if fabs(dv0) < COPLANAR_EPS: dv0 = 0.0
    if fabs(dv1) < COPLANAR_EPS: dv1 = 0.0
    if fabs(dv2) < COPLANAR_EPS: dv2 = 0.0
    if dv0 * dv1 > 0.0 and dv0 * dv2 > 0.0:
        return False

    cross3(n1, n2, d)
    cdef int k = 0
    cdef double mx = fabs(d[0])
    if fabs(d[1]) > mx:
        mx = fabs(d[1]); k = 1
    if fabs(d[2]) > mx:
        k = 2
    cdef double lo1, hi1, lo2, hi2
    if not compute_interval(v0[k], v1[k], v2[k], dv0, dv1, dv2, &lo1, &hi1):
        return coplanar_tri_tri(n1, v0, v1, v2, u0, u1, u2)
    if not compute_interval(u0[k], u1[k], u2[k], du0, du1, du2, &lo2, &hi2):
        return coplanar_tri_tri(n1, v0, v1, v2, u0, u1, u2)
    return not (hi1 < lo2 or hi2 < lo1)


def tri_tri_pairs(double[:, :, ::1] ta, double[:, :, ::1] tb):
    cdef Py_ssize_t i, n = ta.shape[0]
    out = np.zeros(n, dtype=bool)
    cdef unsigned char[::1] o = out.view(np.uint8)
    for i in range(n):
        o[i] = tri_tri(&ta[i, 0, 0], &ta[i, 1, 0], &ta[i, 2, 0], &tb[i, 0, 0], &tb[i, 1, 0], &tb[i, 2, 0])
    return out


# ------------------------------------------------------------ distance queries

cdef double point_tri_dist(const double* p, const double* a, const double* b, const double* c) noexcept nogil:
    cdef double ab[3], ac[3], ap[3], bp[3], cp[3], x[3], r[3]
    cdef double d1, d2, d3, d4, d5, d6, va, vb, vc, v, w, denom
    cdef int i
    sub3(b, a, ab); sub3(c, a, ac); sub3(p, a, ap)
    d1 = dot3(ab, ap); d2 = dot3(ac, ap)
    if d1 <= 0.0 and d2 <= 0.0:
        sub3(p, a, r); return sqrt(dot3(r, r))
    sub3(p, b, bp)
    d3 = dot3(ab, bp); d4 = dot3(ac, bp)
    if d3 >= 0.0 and d4 <= d3:
        return sqrt(dot3(bp, bp))
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        for i in range(3): x[i] = a[i] + v * ab[i]
        sub3(p, x, r); return sqrt(dot3(r, r))
    sub3(p, c, cp)
    d5 = dot3(ab, cp); d6 = dot3(ac, cp)
    if d6 >= 0.0 and d5 <= d6:
        return sqrt(dot3(cp, cp))
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        for i in range(3): x[i] = a[i] + w * ac[i]
        sub3(p, x, r); return sqrt(dot3(r, r))
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        for i in range(3): x[i] = b[i] + w * (c[i] - b[i])
        sub3(p, x, r); return sqrt(dot3(r, r))
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    for i in range(3): x[i] = a[i] + ab[i] * v + ac[i] * w
    sub3(p, x, r)
    return sqrt(dot3(r, r))

cdef double seg_seg_dist(const double* p1, const double* q1, const double* p2, const double* q2) noexcept nogil:
    cdef double d1[3], d2[3], r[3], c1[3], c2[3]
    cdef double a, e, f, c, b, denom, s, t
    cdef double tiny = 1e-18
    cdef int i
    sub3(q1, p1, d1); sub3(q2, p2, d2); sub3(p1, p2, r)
    a = dot3(d1, d1); e = dot3(d2, d2); f = dot3(d2, r)
    if a <= tiny and e <= tiny:
        return sqrt(dot3(r, r))
    if a <= tiny:
        s = 0.0
        t = clamp01(f / e)
    else:
        c = dot3(d1, r)
        if e <= tiny:
            t = 0.0
            s = clamp01(-c / a)
        else:
            b = dot3(d1, d2)
            denom = a * e - b * b
            s = clamp01((b * f - c * e) / denom) if denom > tiny else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = clamp01(-c / a)
            elif t > 1.0:
                t = 1.0
                s = clamp01((b - c) / a)
    for i in range(3):
        c1[i] = p1[i] + d1[i] * s
        c2[i] = p2[i] + d2[i] * t
    sub3(c1, c2, r)
    return sqrt(dot3(r, r))

cdef bint seg_tri_intersect(const double* p, const double* q, const double* v0, const double* v1,
                            const double* v2) noexcept nogil:
    cdef double e1[3], e2[3], n[3], x[3], tmp[3], ex[3], c[3]
    cdef double nl, dp, dq, s, el
    cdef int i, i0, i1
    sub3(v1, v0, e1); sub3(v2, v0, e2); cross3(e1, e2, n)
    nl = sqrt(dot3(n, n))
    if nl == 0.0:
        return False
    n[0] /= nl; n[1] /= nl; n[2] /= nl
    sub3(p, v0, tmp); dp = dot3(tmp, n)
    sub3(q, v0, tmp); dq = dot3(tmp, n)
    if fabs(dp) <= COPLANAR_EPS: dp = 0.0
    if fabs(dq) <= COPLANAR_EPS: dq = 0.0
    if dp == 0.0 and dq == 0.0:
        drop_axis(n, &i0, &i1)
        if point_in_tri_2d(p[i0], p[i1], v0[i0], v0[i1], v1[i0], v1[i1], v2[i0], v2[i1]): return True
        if point_in_tri_2d(q[i0], q[i1], v0[i0], v0[i1], v1[i0], v1[i1], v2[i0], v2[i1]): return True
        if seg_seg_2d(p[i0], p[i1], q[i0], q[i1], v0[i0], v0[i1], v1[i0], v1[i1]): return True
        if seg_seg_2d(p[i0], p[i1], q[i0], q[i1], v1[i0], v1[i1], v2[i0], v2[i1]): return True
        if seg_seg_2d(p[i0], p[i1], q[i0], q[i1], v2[i0], v2[i1], v0[i0], v0[i1]): return True
        return False
    if dp * dq > 0.0:
        return False
    s = dp / (dp - dq)
    for i in range(3):
        x[i] = p[i] + (q[i] - p[i]) * s
    cdef const double* A[3]
    A[0] = v0; A[1] = v1; A[2] = v2
    for i in range(3):
        sub3(A[(i + 1) % 3], A[i], ex)
        sub3(x, A[i], tmp)
        cross3(ex, tmp, c)
        el = sqrt(dot3(ex, ex))
        if dot3(c, n) < -INSIDE_TOL * el:
            return False
    return True

cdef double seg_tri_dist(const double* p, const double* q, const double* v0, const double* v1,
                         const double* v2) noexcept nogil:
    if seg_tri_intersect(p, q, v0, v1, v2):
        return 0.0
    cdef double d = point_tri_dist(p, v0, v1, v2)
    d = min(d, point_tri_dist(q, v0, v1, v2))
    d = min(d, seg_seg_dist(p, q, v0, v1))
    d = min(d, seg_seg_dist(p, q, v1, v2))
    d = min(d, seg_seg_dist(p, q, v2, v0))
    return d


def seg_tri_dist_batch(p, q, double[:, :, ::1] tris):
    cdef double[::1] pp = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef Py_ssize_t i, n = tris.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = seg_tri_dist(&pp[0], &qq[0], &tris[i, 0, 0], &tris[i, 1, 0], &tris[i, 2, 0])
    return out


def point_segments_min_dist(points, seg_a, seg_b):
    cdef double[:, ::1] P = np.ascontiguousarray(np.reshape(points, (-1, 3)), dtype=np.float64)
    cdef double[:, ::1] A = np.ascontiguousarray(np.reshape(seg_a, (-1, 3)), dtype=np.float64)
    cdef double[:, ::1] B = np.ascontiguousarray(np.reshape(seg_b, (-1, 3)), dtype=np.float64)
    cdef Py_ssize_t i, j, n = P.shape[0], m = A.shape[0]
    out = np.full(n, np.inf)
    cdef double[::1] o = out
    cdef double dx, dy, dz, wx, wy, wz, dd, t, best, dist2
    with nogil:
        for i in range(n):
            best = 1e300
            for j in range(m):
                dx = B[j, 0] - A[j, 0]; dy = B[j, 1] - A[j, 1]; dz = B[j, 2] - A[j, 2]
                wx = P[i, 0] - A[j, 0]; wy = P[i, 1] - A[j, 1]; wz = P[i, 2] - A[j, 2]
                dd = dx * dx + dy * dy + dz * dz
                t = (wx * dx + wy * dy + wz * dz) / dd if dd > 0.0 else 0.0
                t = clamp01(t)
                wx -= t * dx; wy -= t * dy; wz -= t * dz
                dist2 = wx * wx + wy * wy + wz * wz
                if dist2 < best:
                    best = dist2
            if m > 0:
                o[i] = sqrt(best)
    return out


# ------------------------------------------------------------ BVH traversals

cdef inline bint box_overlap(const double* alo, const double* ahi, const double* blo, const double* bhi) noexcept nogil:
    return (alo[0] <= bhi[0] and blo[0] <= ahi[0] and alo[1] <= bhi[1] and blo[1] <= ahi[1]
            and alo[2] <= bhi[2] and blo[2] <= ahi[2])

cdef inline bint tri_box_overlap(const double* t, const double* ulo, const double* uhi) noexcept nogil:
    # t points at a 3x3 row-major triangle; compare its AABB
    cdef int k
    for k in range(3):
        if min(t[k], min(t[3 + k], t[6 + k])) > uhi[k]: return False
        if max(t[k], max(t[3 + k], t[6 + k])) < ulo[k]: return False
    return True


def bvh_collide(double[:, ::1] a_lo, double[:, ::1] a_hi, long[::1] a_left, long[::1] a_right,
                long[::1] a_start, long[::1] a_count, double[:, :, ::1] a_tris,
                double[:, ::1] b_lo, double[:, ::1] b_hi, long[::1] b_left, long[::1] b_right,
                long[::1] b_start, long[::1] b_count, double[:, :, ::1] b_tris):
    cdef Py_ssize_t cap = 256, top = 0
    cdef long* stack = <long*> malloc(2 * cap * sizeof(long))
    cdef long ia, ib, i, j
    cdef bint hit = False, go_a
    cdef double tlo[3]
    cdef double thi[3]
    cdef int k
    if stack == NULL:
        raise MemoryError()
    with nogil:
        stack[0] = 0; stack[1] = 0; top = 1
        while top > 0 and not hit:
            top -= 1
            ia = stack[2 * top]; ib = stack[2 * top + 1]
            if not box_overlap(&a_lo[ia, 0], &a_hi[ia, 0], &b_lo[ib, 0], &b_hi[ib, 0]):
                continue
            if a_left[ia] < 0 and b_left[ib] < 0:
                for i in range(a_start[ia], a_start[ia] + a_count[ia]):
                    for k in range(3):
                        tlo[k] = min(a_tris[i, 0, k], min(a_tris[i, 1, k], a_tris[i, 2, k]))
                        thi[k] = max(a_tris[i, 0, k], max(a_tris[i, 1, k], a_tris[i, 2, k]))
                    for j in range(b_start[ib], b_start[ib] + b_count[ib]):
                        if not tri_box_overlap(&b_tris[j, 0, 0], tlo, thi):
                            continue
                        if tri_tri(&a_tris[i, 0, 0], &a_tris[i, 1, 0], &a_tris[i, 2, 0],
                                   &b_tris[j, 0, 0], &b_tris[j, 1, 0], &b_tris[j, 2, 0]):
                            hit = True
                            break
                    if hit:
                        break
                continue
            if top + 2 > cap:
                cap *= 2
                stack = <long*> realloc(stack, 2 * cap * sizeof(long))
            go_a = b_left[ib] < 0 or (a_left[ia] >= 0 and a_count[ia] >= b_count[ib])
            if go_a:
                stack[2 * top] = a_right[ia]; stack[2 * top + 1] = ib; top += 1
                stack[2 * top] = a_left[ia]; stack[2 * top + 1] = ib; top += 1
            else:
                stack[2 * top] = ia; stack[2 * top + 1] = b_right[ib]; top += 1
                stack[2 * top] = ia; stack[2 * top + 1] = b_left[ib]; top += 1
    free(stack)
    return hit


def bvh_capsule(double[:, ::1] lo, double[:, ::1] hi, long[::1] left, long[::1] right,
                long[::1] start, long[::1] count, double[:, :, ::1] tris, p, q, double radius):
    cdef double[::1] pp = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef double clo[3]
    cdef double chi[3]
    cdef int k
    for k in range(3):
        clo[k] = min(pp[k], qq[k]) - radius
        chi[k] = max(pp[k], qq[k]) + radius
    cdef Py_ssize_t cap = 128, top = 0
    cdef long* stack = <long*> malloc(cap * sizeof(long))
    cdef long n, i
    cdef bint hit = False
    cdef double d
    if stack == NULL:
        raise MemoryError()
    with nogil:
        stack[0] = 0; top = 1
        while top > 0 and not hit:
            top -= 1
            n = stack[top]
            if not box_overlap(&lo[n, 0], &hi[n, 0], clo, chi):
                continue
            if left[n] < 0:
                for i in range(start[n], start[n] + count[n]):
                    d = seg_tri_dist(&pp[0], &qq[0], &tris[i, 0, 0], &tris[i, 1, 0], &tris[i, 2, 0])
                    if d < radius or d == 0.0:
                        hit = True
                        break
                continue
            if top + 2 > cap:
                cap *= 2
                stack = <long*> realloc(stack, cap * sizeof(long))
            stack[top] = right[n]; top += 1
            stack[top] = left[n]; top += 1
    free(stack)
    return hit
