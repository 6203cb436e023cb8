"""Triangle mesh loading, cleaning and basic geometric queries.

All lengths are millimetres. A :class:`TriangleMesh` is immutable once built;
its arrays are flagged read-only so it can be shared between workers.
"""
from __future__ import annotations

import logging
import struct
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)

WELD_TOL = 1e-6
RAY_EPS = 1e-6
_AREA_EPS = 1e-12


class MeshError(Exception):
    """Base class for mesh loading failures."""


class ParseError(MeshError):
    pass


class EmptyMesh(MeshError):
    pass


class MeshWarning(UserWarning):
    """Emitted for recoverable defects (degenerate faces, open edges)."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    face_normals: np.ndarray
    face_areas: np.ndarray
    adjacency: tuple
    com: np.ndarray
    watertight: bool = True
    issues: tuple = ()
    _edge_faces: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_arrays(cls, vertices, triangles, weld_tol: float = WELD_TOL, quiet: bool = False) -> "TriangleMesh":
        """Weld, drop degenerate faces and index the result.

        Raises :class:`EmptyMesh` when nothing survives cleaning.
        """
        v = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        f = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        issues = []
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ParseError("triangle references a vertex index out of range")

        v, f = _weld(v, f, weld_tol)

        cross = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
        dbl_area = np.linalg.norm(cross, axis=1)
        repeated = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
        keep = (~repeated) & (dbl_area > 2 * _AREA_EPS)
        n_bad = int((~keep).sum())
        if n_bad:
            issues.append(f"dropped {n_bad} degenerate triangle(s)")
        f, cross, dbl_area = f[keep], cross[keep], dbl_area[keep]
        if len(f) == 0:
            raise EmptyMesh("mesh has no valid triangles")

        # drop vertices no longer referenced, keeping first-use order stable
        used = np.zeros(len(v), dtype=bool)
        used[f.ravel()] = True
        remap = np.cumsum(used) - 1
        v = v[used]
        f = remap[f]

        normals = cross / dbl_area[:, None]
        areas = 0.5 * dbl_area
        adjacency, edge_faces, open_edges, nonmanifold = _adjacency(f)
        watertight = open_edges == 0 and nonmanifold == 0
        if open_edges:
            issues.append(f"not watertight: {open_edges} open edge(s)")
        if nonmanifold:
            issues.append(f"{nonmanifold} edge(s) shared by more than two triangles")

        com, used_volume = _center_of_mass(v, f, areas)
        if not used_volume:
            issues.append("volume ill-defined; com is the surface centroid")

        if issues and not quiet:
            for msg in issues:
                warnings.warn(msg, MeshWarning, stacklevel=2)

        return cls(
            vertices=_frozen(v),
            triangles=_frozen(f),
            face_normals=_frozen(normals),
            face_areas=_frozen(areas),
            adjacency=adjacency,
            com=_frozen(com),
            watertight=watertight,
            issues=tuple(issues),
            _edge_faces=edge_faces,
        )

    @property
    def n_faces(self) -> int:
        return len(self.triangles)

    @cached_property
    def corners(self) -> np.ndarray:
        """(n_faces, 3, 3) triangle corner coordinates."""
        return _frozen(self.vertices[self.triangles])

    @cached_property
    def centroids(self) -> np.ndarray:
        return _frozen(self.corners.mean(axis=1))

    @property
    def total_area(self) -> float:
        return float(self.face_areas.sum())

    def edge_faces(self, a: int, b: int) -> tuple:
        return self._edge_faces.get((min(a, b), max(a, b)), ())

    def transformed(self, pose: np.ndarray) -> "TriangleMesh":
        return TriangleMesh.from_arrays(transform_points(pose, self.vertices), self.triangles, quiet=True)


def _weld(v: np.ndarray, f: np.ndarray, tol: float):
    if len(v) == 0:
        return v, f
    keys = np.round(v / tol).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    # renumber unique vertices by first occurrence so output order follows input order
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return v[first[order]], rank[inverse][f]


def _adjacency(f: np.ndarray):
    n = len(f)
    edges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    edges.sort(axis=1)
    owner = np.tile(np.arange(n), 3)
    order = np.lexsort((owner, edges[:, 1], edges[:, 0]))
    edges, owner = edges[order], owner[order]
    brk = np.ones(len(edges), dtype=bool)
    brk[1:] = np.any(edges[1:] != edges[:-1], axis=1)
    starts = np.flatnonzero(brk)
    counts = np.diff(np.append(starts, len(edges)))

    neigh = [set() for _ in range(n)]
    edge_faces = {}
    for s, c in zip(starts.tolist(), counts.tolist()):
        faces = tuple(owner[s:s + c].tolist())
        edge_faces[(int(edges[s, 0]), int(edges[s, 1]))] = faces
        if c > 1:
            for a in faces:
                for b in faces:
                    if a != b:
                        neigh[a].add(b)
    adjacency = tuple(tuple(sorted(s)) for s in neigh)
    return adjacency, edge_faces, int((counts == 1).sum()), int((counts > 2).sum())


def _center_of_mass(v: np.ndarray, f: np.ndarray, areas: np.ndarray):
    a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    # shift to the bbox centre to keep the signed volumes well conditioned
    origin = 0.5 * (v.min(axis=0) + v.max(axis=0))
    a, b, c = a - origin, b - origin, c - origin
    vol = np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0
    total = vol.sum()
    extent = float(np.ptp(v, axis=0).max()) or 1.0
    if total > 1e-9 * extent ** 3:
        com = (vol[:, None] * (a + b + c)).sum(axis=0) / (4.0 * total)
        return com + origin, True
    centroids = (a + b + c) / 3.0
    return (areas[:, None] * centroids).sum(axis=0) / areas.sum() + origin, False


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64)
        d = np.asarray(self.direction, dtype=np.float64)
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("ray direction must be unit length")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class RayHit:
    point: np.ndarray
    triangle: int
    distance: float


def ray_triangle_params(origins, directions, corners) -> np.ndarray:
    """Möller-Trumbore for every (ray, triangle) combination.

    ``origins``/``directions`` are (R, 3), ``corners`` is (T, 3, 3). Returns an
    (R, T) array of line parameters, NaN where the line misses the triangle.
    """
    o = np.atleast_2d(origins)[:, None, :]
    d = np.atleast_2d(directions)[:, None, :]
    v0 = corners[None, :, 0]
    e1 = corners[None, :, 1] - v0
    e2 = corners[None, :, 2] - v0
    p = np.cross(d, e2)
    det = np.einsum("rtk,rtk->rt", e1, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        s = o - v0
        u = np.einsum("rtk,rtk->rt", s, p) * inv
        q = np.cross(s, e1)
        w = np.einsum("rtk,rtk->rt", d, q) * inv
        t = np.einsum("rtk,rtk->rt", e2, q) * inv
        tol = 1e-12
        ok = (np.abs(det) > 1e-14) & (u >= -tol) & (w >= -tol) & (u + w <= 1 + tol)
    return np.where(ok, t, np.nan)


def ray_cast(mesh: TriangleMesh, ray: Ray, facet=None, eps: float = RAY_EPS) -> Optional[RayHit]:
    """Nearest hit with distance above ``eps``, or None.

    With ``facet`` only that facet's member triangles are tested.
    """
    idx = np.arange(mesh.n_faces) if facet is None else np.asarray(facet.members)
    t = ray_triangle_params(ray.origin, ray.direction, mesh.corners[idx])[0]
    t = np.where(t > eps, t, np.inf)
    k = int(np.argmin(t))
    if not np.isfinite(t[k]):
        return None
    dist = float(t[k])
    return RayHit(ray.origin + dist * ray.direction, int(idx[k]), dist)


def line_gap(mesh: TriangleMesh, point, direction, tris: Optional[Sequence[int]] = None) -> float:
    """Smallest |t| at which the line ``point + t*direction`` meets the mesh."""
    corners = mesh.corners if tris is None else mesh.corners[np.asarray(tris)]
    t = ray_triangle_params(np.asarray(point, float), np.asarray(direction, float), corners)[0]
    t = np.abs(t[~np.isnan(t)])
    return float(t.min()) if t.size else np.inf


def transform_points(pose: np.ndarray, pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=np.float64)
    return pts @ pose[:3, :3].T + pose[:3, 3]


def make_pose(rotation=None, translation=None) -> np.ndarray:
    pose = np.eye(4)
    if rotation is not None:
        pose[:3, :3] = rotation
    if translation is not None:
        pose[:3, 3] = translation
    return pose


# --------------------------------------------------------------------- readers

def load_mesh(path, format: Optional[str] = None) -> TriangleMesh:
    """Read an STL (ascii or binary) or OBJ file.

    ``format`` is one of ``stl-ascii``, ``stl-binary``, ``obj``; when omitted
    it is inferred from the extension and, for STL, the file contents.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    fmt = format or _guess_format(path, data)
    if fmt == "obj":
        v, f = _parse_obj(data)
    elif fmt == "stl-binary":
        v, f = _parse_stl_binary(data)
    elif fmt == "stl-ascii":
        v, f = _parse_stl_ascii(data)
    else:
        raise ParseError(f"unknown mesh format {fmt!r}")
    log.debug("loaded %s: %d vertices, %d triangles", path, len(v), len(f))
    return TriangleMesh.from_arrays(v, f)


def _guess_format(path: Path, data: bytes) -> str:
    ext = path.suffix.lower()
    if ext == ".obj":
        return "obj"
    if ext == ".stl":
        if len(data) >= 84:
            n = struct.unpack_from("<I", data, 80)[0]
            if 84 + 50 * n == len(data):
                return "stl-binary"
        if data.lstrip()[:5].lower() == b"solid":
            return "stl-ascii"
        return "stl-binary"
    raise ParseError(f"cannot infer mesh format from {path.name}")


def _parse_obj(data: bytes):
    verts, faces = [], []
    for lineno, raw in enumerate(data.decode("utf-8", errors="replace").splitlines(), 1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        try:
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
                if len(verts[-1]) != 3:
                    raise ValueError("vertex needs 3 coordinates")
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    i = int(tok.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                if len(idx) < 3:
                    raise ValueError("face needs at least 3 vertices")
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
    return np.array(verts, dtype=np.float64).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)


def _parse_stl_binary(data: bytes):
    if len(data) < 84:
        raise ParseError("binary STL shorter than its header")
    n = struct.unpack_from("<I", data, 80)[0]
    if len(data) < 84 + 50 * n:
        raise ParseError(f"binary STL truncated: expected {n} triangles")
    rec = np.dtype([("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
    tri = np.frombuffer(data, dtype=rec, count=n, offset=84)["v"].astype(np.float64)
    return tri.reshape(-1, 3), np.arange(3 * n, dtype=np.int64).reshape(-1, 3)


def _parse_stl_ascii(data: bytes):
    verts = []
    for lineno, raw in enumerate(data.decode("ascii", errors="replace").splitlines(), 1):
        parts = raw.split()
        if parts and parts[0] == "vertex":
            try:
                verts.append([float(x) for x in parts[1:4]])
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}") from exc
    if len(verts) % 3:
        raise ParseError("ascii STL vertex count is not a multiple of 3")
    v = np.array(verts, dtype=np.float64).reshape(-1, 3)
    return v, np.arange(len(v), dtype=np.int64).reshape(-1, 3)


# --------------------------------------------------------------------- writers

def write_obj(path, mesh_or_groups, colors=None) -> None:
    """Write one mesh, or a list of ``(name, vertices, triangles)`` groups."""
    if isinstance(mesh_or_groups, TriangleMesh):
        groups = [("mesh", mesh_or_groups.vertices, mesh_or_groups.triangles)]
    else:
        groups = list(mesh_or_groups)
    lines = []
    base = 1
    for gi, (name, v, f) in enumerate(groups):
        lines.append(f"g {name}")
        rgb = None if colors is None else colors[gi]
        for p in np.asarray(v, float):
            s = f"v {p[0]:.6f} {p[1]:.6f} {p[2]:.6f}"
            if rgb is not None:
                s += f" {rgb[0]:.3f} {rgb[1]:.3f} {rgb[2]:.3f}"
            lines.append(s)
        for t in np.asarray(f, int).reshape(-1, 3):
            lines.append(f"f {t[0] + base} {t[1] + base} {t[2] + base}")
        base += len(v)
    Path(path).write_text("\n".join(lines) + "\n")


def write_stl_binary(path, mesh: TriangleMesh) -> None:
    out = bytearray(b"graspforge".ljust(80, b"\0"))
    out += struct.pack("<I", mesh.n_faces)
    for n, tri in zip(mesh.face_normals, mesh.corners):
        out += struct.pack("<3f", *n) + struct.pack("<9f", *tri.ravel()) + b"\0\0"
    Path(path).write_bytes(bytes(out))
