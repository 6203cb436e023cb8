"""Superimposed segmentation: peel a mesh into overlapping near-planar facets."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .mesh import TriangleMesh, write_obj

ANGLE_TOL = 1e-9


@dataclass
class Facet:
    seed_triangle: int
    members: tuple
    avg_normal: np.ndarray
    boundary_edges: np.ndarray  # (k, 2, 3) segment endpoints
    boundary_vertex_pairs: np.ndarray  # (k, 2) vertex indices
    area: float = 0.0
    promoted_by: str = "angle"  # "angle" (normal clears theta_fct) or "coverage"
    curvature_radius: Optional[float] = None
    _member_set: frozenset = field(default=frozenset(), repr=False)

    def __contains__(self, tri) -> bool:
        return int(tri) in self._member_set


def angles_to(normals: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Angle in radians between each row of ``normals`` and ``n`` (atan2 form, stable near 0)."""
    n = np.asarray(n, dtype=np.float64)
    c = normals[..., [1, 2, 0]] * n[[2, 0, 1]] - normals[..., [2, 0, 1]] * n[[1, 2, 0]]
    return np.arctan2(np.sqrt(np.einsum("...k,...k->...", c, c)), normals @ n)


def _components(mesh: TriangleMesh) -> np.ndarray:
    label = np.full(mesh.n_faces, -1, dtype=np.int64)
    k = 0
    for s in range(mesh.n_faces):
        if label[s] >= 0:
            continue
        label[s] = k
        stack = [s]
        while stack:
            t = stack.pop()
            for nb in mesh.adjacency[t]:
                if label[nb] < 0:
                    label[nb] = k
                    stack.append(nb)
        k += 1
    return label


def grow_facet(mesh: TriangleMesh, seed: int, theta_pln: float, angles: Optional[np.ndarray] = None) -> list:
    """Breadth-first region growing around ``seed`` against the seed normal.

    ``angles`` may carry precomputed angles of every face normal to the seed's.
    """
    if angles is None:
        angles = angles_to(mesh.face_normals, mesh.face_normals[seed])
    ok = angles <= theta_pln + ANGLE_TOL
    members = [seed]
    seen = {seed}
    queue = deque([seed])
    while queue:
        t = queue.popleft()
        for nb in mesh.adjacency[t]:
            if nb not in seen:
                seen.add(nb)
                if ok[nb]:
                    members.append(nb)
                    queue.append(nb)
    return members


def make_facet(mesh: TriangleMesh, seed: int, members, promoted_by: str = "angle") -> Facet:
    members = tuple(int(m) for m in members)
    idx = np.asarray(members)
    w = mesh.face_areas[idx]
    avg = (mesh.face_normals[idx] * w[:, None]).sum(axis=0)
    norm = np.linalg.norm(avg)
    avg = avg / norm if norm > 1e-12 else mesh.face_normals[seed].copy()

    tri = mesh.triangles[idx]
    edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    edges.sort(axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    pairs = uniq[counts == 1]
    return Facet(
        seed_triangle=int(seed),
        members=members,
        avg_normal=avg,
        boundary_edges=mesh.vertices[pairs].reshape(-1, 2, 3),
        boundary_vertex_pairs=pairs.reshape(-1, 2),
        area=float(w.sum()),
        promoted_by=promoted_by,
        _member_set=frozenset(members),
    )


def segment(mesh: TriangleMesh, theta_pln: float, theta_fct: float, seed_scan: str = "reachable") -> list:
    """Cluster ``mesh`` into superimposed facets (angles in radians).

    Each facet grows from its seed over edge-adjacent triangles whose normal is
    within ``theta_pln`` of the seed normal. The next seed is the lowest-index
    triangle in the scan range whose normal is more than ``theta_fct`` away from
    every earlier seed. ``seed_scan`` picks the range: ``"reachable"`` (every
    triangle edge-connected to an existing facet) or ``"ring"`` (facet members
    and their direct neighbours). When no triangle qualifies, the lowest-index
    triangle not yet in any facet is promoted so that the facets cover the mesh.
    """
    if not 0 <= theta_pln <= np.pi:
        raise ValueError("theta_pln must lie in [0, pi]")
    if not 0 < theta_fct <= np.pi:
        raise ValueError("theta_fct must lie in (0, pi]")
    if seed_scan not in ("reachable", "ring"):
        raise ValueError(f"unknown seed_scan {seed_scan!r}")
    n = mesh.n_faces
    if n == 0:
        return []

    normals = mesh.face_normals
    min_angle = np.full(n, np.inf)  # angle to the closest seed normal so far
    covered = np.zeros(n, dtype=bool)
    in_range = np.zeros(n, dtype=bool)
    comp = _components(mesh) if seed_scan == "reachable" else None

    facets = []
    seed, kind = 0, "angle"
    while True:
        ang = angles_to(normals, normals[seed])
        members = grow_facet(mesh, seed, theta_pln, ang)
        facets.append(make_facet(mesh, seed, members, kind))
        covered[members] = True
        np.minimum(min_angle, ang, out=min_angle)
        if comp is not None:
            in_range |= comp == comp[seed]
        else:
            in_range[members] = True
            for t in members:
                in_range[list(mesh.adjacency[t])] = True

        cand = np.flatnonzero(in_range & (min_angle > theta_fct + ANGLE_TOL))
        if len(cand):
            seed, kind = int(cand[0]), "angle"
            continue
        rest = np.flatnonzero(~covered)
        if not len(rest):
            break
        seed, kind = int(rest[0]), "coverage"
    return facets


def facet_colors(n: int, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.15, 1.0, size=(n, 3))


def export_facets_obj(path, mesh: TriangleMesh, facets, offset: float = 0.0, seed: int = 0) -> None:
    """One OBJ group per facet, randomly coloured; ``offset`` explodes facets along their normal."""
    groups = []
    for i, f in enumerate(facets):
        idx = np.asarray(f.members)
        used, local = np.unique(mesh.triangles[idx], return_inverse=True)
        v = mesh.vertices[used] + offset * f.avg_normal
        groups.append((f"facet_{i}", v, local.reshape(-1, 3)))
    write_obj(path, groups, colors=facet_colors(len(facets), seed))
