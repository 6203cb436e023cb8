"""BVH-accelerated mesh/mesh and capsule/mesh intersection tests."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels_py, kernels
from .mesh import TriangleMesh

LEAF_SIZE = 4

@dataclass(frozen=True, eq=False)
class Bvh:
    """Flattened AABB tree; node 0 is the root, ``left < 0`` marks a leaf.

    ``tris`` holds the triangle corners permuted into leaf order, so leaf ``n``
    covers ``tris[start[n]:start[n] + count[n]]``; ``order`` maps back to mesh
    triangle indices.
    """

    lo: np.ndarray
    hi: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    order: np.ndarray
    tris: np.ndarray
    leaf_size: int = LEAF_SIZE

    @classmethod
    def build(cls, corners: np.ndarray, leaf_size: int = LEAF_SIZE) -> "Bvh":
        """Median split on the longest centroid axis, built one tree level at a time.

        Nodes are numbered breadth-first. Sorting is stable, so equal keys keep
        their index order and the build is deterministic.
        """
        corners = np.ascontiguousarray(corners, dtype=np.float64)
        n = len(corners)
        tmin = corners.min(axis=1)
        tmax = corners.max(axis=1)
        cent = 0.5 * (tmin + tmax)
        order = np.arange(n)
        start, count, left, right = [0], [n], [-1], [-1]
        level = np.array([0] if n else [], dtype=np.int64)
        while len(level):
            s = np.asarray(start)[level]
            c = np.asarray(count)[level]
            split = c > leaf_size
            level, s, c = level[split], s[split], c[split]
            if not len(level):
                break
            clo = _segment_reduce(np.minimum, cent[order], s, c)
            chi = _segment_reduce(np.maximum, cent[order], s, c)
            axis = np.argmax(chi - clo, axis=1)
            seg = np.repeat(np.arange(len(level)), c)
            pos = np.concatenate([np.arange(a, a + k) for a, k in zip(s.tolist(), c.tolist())])
            keys = cent[order[pos], axis[seg]]
            perm = np.lexsort((keys, seg))
            order[pos] = order[pos[perm]]
            half = c // 2
            first = len(start)
            ids = first + 2 * np.arange(len(level))
            for node, l, a, k, h in zip(level.tolist(), ids.tolist(), s.tolist(), c.tolist(), half.tolist()):
                left[node], right[node] = l, l + 1
                start += [a, a + h]
                count += [h, k - h]
                left += [-1, -1]
                right += [-1, -1]
            level = np.arange(first, len(start), dtype=np.int64)

        as_i = lambda x: np.ascontiguousarray(x, dtype=np.int64)
        st, ct = as_i(start if n else []), as_i(count if n else [])
        lo = _segment_reduce(np.minimum, tmin[order], st, ct) if n else np.zeros((0, 3))
        hi = _segment_reduce(np.maximum, tmax[order], st, ct) if n else np.zeros((0, 3))
        return cls(
            lo=np.ascontiguousarray(lo, dtype=np.float64),
            hi=np.ascontiguousarray(hi, dtype=np.float64),
            left=as_i(left if n else []), right=as_i(right if n else []), start=st, count=ct,
            order=as_i(order), tris=np.ascontiguousarray(corners[order]), leaf_size=leaf_size,
        )

    def posed(self, pose: Optional[np.ndarray]) -> "Bvh":
        """Same tree with triangles moved by ``pose``; node boxes are refit conservatively."""
        if pose is None:
            return self
        R, t = pose[:3, :3], pose[:3, 3]
        c = 0.5 * (self.lo + self.hi)
        h = 0.5 * (self.hi - self.lo)
        c2 = c @ R.T + t
        h2 = h @ np.abs(R).T
        tris = np.ascontiguousarray(self.tris @ R.T + t)
        return Bvh(np.ascontiguousarray(c2 - h2), np.ascontiguousarray(c2 + h2), self.left, self.right,
                   self.start, self.count, self.order, tris, self.leaf_size)

    def arrays(self):
        return self.lo, self.hi, self.left, self.right, self.start, self.count, self.tris

def _segment_reduce(ufunc, rows: np.ndarray, starts: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """``ufunc.reduce`` over each non-empty slice ``rows[s:s+c]``."""
    padded = np.vstack([rows, rows[:1]])  # sentinel so an end index may equal len(rows)
    idx = np.empty(2 * len(starts), dtype=np.int64)
    idx[0::2] = starts
    idx[1::2] = starts + counts
    return ufunc.reduceat(padded, idx, axis=0)[0::2]


def bvh_of(mesh: TriangleMesh) -> Bvh:
    """Build (once) and return the BVH of an immutable mesh."""
    cached = mesh.__dict__.get("_bvh")
    if cached is None:
        cached = Bvh.build(mesh.corners)
        mesh.__dict__["_bvh"] = cached
    return cached

@dataclass(frozen=True)
class Capsule:
    endpoint_a: np.ndarray
    endpoint_b: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("capsule radius must be non-negative")
        object.__setattr__(self, "endpoint_a", np.asarray(self.endpoint_a, dtype=np.float64))
        object.__setattr__(self, "endpoint_b", np.asarray(self.endpoint_b, dtype=np.float64))

def _relative(pose_a, pose_b):
    if pose_b is None:
        return pose_a
    inv_b = np.eye(4)
    inv_b[:3, :3] = pose_b[:3, :3].T
    inv_b[:3, 3] = -pose_b[:3, :3].T @ pose_b[:3, 3]
    return inv_b if pose_a is None else inv_b @ pose_a

def check_collision(mesh_a: TriangleMesh, mesh_b: TriangleMesh, pose_a=None, pose_b=None,
                    bvh_a: Optional[Bvh] = None, bvh_b: Optional[Bvh] = None) -> bool:
    """True iff some triangle of A touches some triangle of B (surfaces only).

    Poses are 4x4 rigid transforms to a common frame; work is done in B's frame.
    Prebuilt trees may be passed to skip the cache lookup.
    """
    ta = (bvh_a or bvh_of(mesh_a)).posed(_relative(pose_a, pose_b))
    tb = bvh_b or bvh_of(mesh_b)
    return bool(kernels.bvh_collide(*ta.arrays(), *tb.arrays()))

def check_capsule(capsule: Capsule, mesh: TriangleMesh, pose=None, bvh: Optional[Bvh] = None) -> bool:
    """True iff some triangle lies closer than ``radius`` to the capsule axis.

    A zero radius reduces to segment/mesh intersection.
    """
    p, q = capsule.endpoint_a, capsule.endpoint_b
    if pose is not None:
        inv = _relative(None, pose)
        p = inv[:3, :3] @ p + inv[:3, 3]
        q = inv[:3, :3] @ q + inv[:3, 3]
    tree = bvh or bvh_of(mesh)
    return bool(kernels.bvh_capsule(*tree.arrays(), p, q, float(capsule.radius)))

# --------------------------------------------------------------- brute force

def brute_force_collision(mesh_a: TriangleMesh, mesh_b: TriangleMesh, pose_a=None, pose_b=None,
                          chunk: int = 200_000) -> bool:
    """All-pairs triangle test without any spatial pruning."""
    ca = mesh_a.corners
    if pose_a is not None:
        ca = ca @ pose_a[:3, :3].T + pose_a[:3, 3]
    cb = mesh_b.corners
    if pose_b is not None:
        cb = cb @ pose_b[:3, :3].T + pose_b[:3, 3]
    na, nb = len(ca), len(cb)
    rows = max(1, chunk // nb)
    for s in range(0, na, rows):
        blk = ca[s:s + rows]
        ia = np.repeat(np.arange(len(blk)), nb)
        ib = np.tile(np.arange(nb), len(blk))
        if _kernels_py.tri_tri_batch(blk[ia], cb[ib]).any():
            return True
    return False

def brute_force_capsule(capsule: Capsule, mesh: TriangleMesh, pose=None) -> bool:
    corners = mesh.corners
    if pose is not None:
        corners = corners @ pose[:3, :3].T + pose[:3, 3]
    d = _kernels_py.seg_tri_dist(capsule.endpoint_a, capsule.endpoint_b, corners)
    return bool(np.any((d < capsule.radius) | (d == 0.0)))
