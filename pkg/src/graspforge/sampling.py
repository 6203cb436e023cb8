"""Contact sampling over the whole surface, distribution to facets, and refinement."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .mesh import TriangleMesh, write_obj

DEFAULT_DENSITY = 0.01  # samples per mm^2


@dataclass(frozen=True)
class Samples:
    positions: np.ndarray
    triangle_ids: np.ndarray

    def __len__(self) -> int:
        return len(self.triangle_ids)


@dataclass(frozen=True, eq=False)
class ContactPoint:
    position: np.ndarray
    normal: np.ndarray
    facet_id: int
    triangle_id: int
    sample_id: int = -1


def sample_counts(areas: np.ndarray, density: float) -> np.ndarray:
    """Per-triangle counts whose running total tracks the running expected total.

    The rounding residual of each triangle is carried into the next, so the
    grand total is ``round(sum(areas) * density)``.
    """
    cum = np.cumsum(np.asarray(areas, float) * density)
    reached = np.floor(cum + 0.5).astype(np.int64)
    return np.diff(reached, prepend=0)


def sample_surface(mesh: TriangleMesh, density: float = DEFAULT_DENSITY, rng_seed: int = 0) -> Samples:
    """Stratified area-weighted sampling of the full mesh surface."""
    if density <= 0:
        raise ValueError("density must be positive")
    counts = sample_counts(mesh.face_areas, density)
    tri = np.repeat(np.arange(mesh.n_faces), counts)
    rng = np.random.default_rng(rng_seed)
    r = rng.random((len(tri), 2))
    s = np.sqrt(r[:, 0])
    corners = mesh.corners[tri]
    pos = ((1 - s)[:, None] * corners[:, 0]
           + (s * (1 - r[:, 1]))[:, None] * corners[:, 1]
           + (s * r[:, 1])[:, None] * corners[:, 2])
    return Samples(pos, tri)


def distribute(samples: Samples, facets) -> list:
    """Copy each sample into every facet that owns its triangle."""
    owners: dict = {}
    for fi, f in enumerate(facets):
        for t in f.members:
            owners.setdefault(t, []).append(fi)
    out = [[] for _ in facets]
    for si, (p, t) in enumerate(zip(samples.positions, samples.triangle_ids.tolist())):
        for fi in owners.get(t, ()):
            out[fi].append(ContactPoint(p, facets[fi].avg_normal, fi, t, si))
    return out


def positions(points) -> np.ndarray:
    return np.array([c.position for c in points], dtype=np.float64).reshape(-1, 3)


def boundary_distances(facet, points) -> np.ndarray:
    edges = facet.boundary_edges
    return kernels.point_segments_min_dist(positions(points), edges[:, 0], edges[:, 1])


def refine_boundary(facet, points, t_bdry: float) -> list:
    """Drop points closer than ``t_bdry`` to the facet boundary (3D segment distance)."""
    if t_bdry < 0:
        raise ValueError("t_bdry must be non-negative")
    points = list(points)
    if t_bdry == 0 or not points or len(facet.boundary_edges) == 0:
        return points
    keep = boundary_distances(facet, points) >= t_bdry
    return [c for c, k in zip(points, keep) if k]


def refine_rnn(points, t_rnn: float) -> list:
    """Greedy radius thinning in input order.

    A point survives iff no previously kept point is closer than ``t_rnn``.
    """
    if t_rnn < 0:
        raise ValueError("t_rnn must be non-negative")
    points = list(points)
    if t_rnn == 0 or len(points) < 2:
        return points
    grid: dict = {}
    kept = []
    r2 = t_rnn * t_rnn
    for c in points:
        p = np.asarray(c.position if isinstance(c, ContactPoint) else c, float)
        cell = tuple(np.floor(p / t_rnn).astype(np.int64).tolist())
        clash = False
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    for q in grid.get((cell[0] + dx, cell[1] + dy, cell[2] + dz), ()):
                        d = p - q
                        if d @ d < r2:
                            clash = True
                            break
                    if clash:
                        break
                if clash:
                    break
        if not clash:
            grid.setdefault(cell, []).append(p)
            kept.append(c)
    return kept


@dataclass
class ContactSet:
    """Per-facet contacts after each refinement stage, for export and stats."""
    distributed: list
    after_boundary: list
    refined: list

    def counts(self) -> dict:
        n = lambda lists: sum(len(x) for x in lists)
        return {"distributed": n(self.distributed), "after_boundary": n(self.after_boundary),
                "refined": n(self.refined)}


def prepare_contacts(mesh: TriangleMesh, facets, density: float, rng_seed: int, t_bdry: float,
                     t_rnn: float, timer=None) -> ContactSet:
    """Sample, distribute and refine; ``timer`` is an optional stage-timing context factory."""
    timer = timer or _no_timer
    with timer("sampling"):
        samples = sample_surface(mesh, density, rng_seed)
        dist = distribute(samples, facets)
    with timer("remove_bad_1"):
        bdry = [refine_boundary(f, pts, t_bdry) for f, pts in zip(facets, dist)]
    with timer("remove_bad_2"):
        refined = [refine_rnn(pts, t_rnn) for pts in bdry]
    return ContactSet(dist, bdry, refined)


class _NullCtx:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _no_timer(_name):
    return _NullCtx()


def export_samples_obj(path, contacts: ContactSet, facet_ids: Optional[list] = None) -> None:
    """Point cloud: white = removed near the boundary, grey = thinned, red = survivors."""
    ids = range(len(contacts.distributed)) if facet_ids is None else facet_ids
    groups, colors = [], []
    for i in ids:
        after = {id(c) for c in contacts.after_boundary[i]}
        final = {id(c) for c in contacts.refined[i]}
        buckets = {"boundary_removed": [], "rnn_removed": [], "kept": []}
        for c in contacts.distributed[i]:
            key = "kept" if id(c) in final else ("rnn_removed" if id(c) in after else "boundary_removed")
            buckets[key].append(c.position)
        for key, rgb in (("boundary_removed", (1, 1, 1)), ("rnn_removed", (0.5, 0.5, 0.5)), ("kept", (1, 0, 0))):
            if buckets[key]:
                groups.append((f"facet_{i}_{key}", np.array(buckets[key]), np.zeros((0, 3), int)))
                colors.append(rgb)
    write_obj(path, groups, colors=colors)
