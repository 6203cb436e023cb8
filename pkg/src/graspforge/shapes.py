"""Procedural meshes used as fixtures, benchmarks and demo objects."""
from __future__ import annotations

import numpy as np

from .mesh import TriangleMesh

# outward-facing quads of the unit cube, as corner indices into _CUBE_V
_CUBE_V = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
_CUBE_QUADS = [
    (0, 1, 3, 2),  # -x
    (4, 6, 7, 5),  # +x
    (0, 4, 5, 1),  # -y
    (2, 3, 7, 6),  # +y
    (0, 2, 6, 4),  # -z
    (1, 5, 7, 3),  # +z
]


def _quads_to_tris(quads):
    tris = []
    for a, b, c, d in quads:
        tris += [(a, b, c), (a, c, d)]
    return np.array(tris, dtype=np.int64)


def box_arrays(size=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)):
    v = _CUBE_V * np.asarray(size, float) + np.asarray(origin, float)
    return v, _quads_to_tris(_CUBE_QUADS)


def box(size=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned box with its minimum corner at ``origin``."""
    return TriangleMesh.from_arrays(*box_arrays(size, origin))


def cube(edge: float = 40.0, origin=(0.0, 0.0, 0.0)) -> TriangleMesh:
    return box((edge, edge, edge), origin)


def tetrahedron(edge: float = 40.0) -> TriangleMesh:
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    v *= edge / (2 * np.sqrt(2))
    f = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return TriangleMesh.from_arrays(v, f)


def icosphere(subdivisions: int = 2, radius: float = 1.0) -> TriangleMesh:
    t = (1 + 5 ** 0.5) / 2
    v = [[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0], [0, -1, t], [0, 1, t],
         [0, -1, -t], [0, 1, -t], [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]]
    f = [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11], [1, 5, 9], [5, 11, 4],
         [11, 10, 2], [10, 7, 6], [7, 1, 8], [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8],
         [3, 8, 9], [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    v = [np.array(p, float) / np.linalg.norm(p) for p in v]
    for _ in range(subdivisions):
        cache = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                p = v[a] + v[b]
                v.append(p / np.linalg.norm(p))
                cache[key] = len(v) - 1
            return cache[key]

        nf = []
        for a, b, c in f:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            nf += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        f = nf
    return TriangleMesh.from_arrays(np.array(v) * radius, np.array(f))


def uv_sphere_arrays(radius: float, n_lat: int, n_lon: int, center=(0.0, 0.0, 0.0)):
    verts = [[0.0, 0.0, radius]]
    for i in range(1, n_lat):
        th = np.pi * i / n_lat
        for j in range(n_lon):
            ph = 2 * np.pi * j / n_lon
            verts.append([radius * np.sin(th) * np.cos(ph), radius * np.sin(th) * np.sin(ph), radius * np.cos(th)])
    verts.append([0.0, 0.0, -radius])
    bottom = len(verts) - 1
    ring = lambda i, j: 1 + (i - 1) * n_lon + (j % n_lon)
    tris = []
    for j in range(n_lon):
        tris.append([0, ring(1, j), ring(1, j + 1)])
    for i in range(1, n_lat - 1):
        for j in range(n_lon):
            a, b, c, d = ring(i, j), ring(i + 1, j), ring(i + 1, j + 1), ring(i, j + 1)
            tris += [[a, b, c], [a, c, d]]
    for j in range(n_lon):
        tris.append([bottom, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)])
    return np.array(verts) + np.asarray(center, float), np.array(tris)


def uv_sphere(radius: float = 50.0, n_lat: int = 32, n_lon: int = 64) -> TriangleMesh:
    return TriangleMesh.from_arrays(*uv_sphere_arrays(radius, n_lat, n_lon))


def cylinder_arrays(radius: float, height: float, segments: int, origin=(0.0, 0.0, 0.0)):
    """Closed cylinder along +z standing on ``origin``."""
    ang = 2 * np.pi * np.arange(segments) / segments
    ring = np.stack([radius * np.cos(ang), radius * np.sin(ang), np.zeros(segments)], axis=1)
    v = np.vstack([ring, ring + [0, 0, height], [[0, 0, 0], [0, 0, height]]])
    cb, ct = 2 * segments, 2 * segments + 1
    tris = []
    for j in range(segments):
        k = (j + 1) % segments
        tris += [[j, k, segments + k], [j, segments + k, segments + j]]
        tris += [[cb, k, j], [ct, segments + j, segments + k]]
    return v + np.asarray(origin, float), np.array(tris)


def cylinder(radius: float = 20.0, height: float = 60.0, segments: int = 32) -> TriangleMesh:
    return TriangleMesh.from_arrays(*cylinder_arrays(radius, height, segments))


def torus_arrays(major: float, minor: float, n_major: int, n_minor: int, center=(0.0, 0.0, 0.0)):
    """Torus around the y axis (ring lies in the xz plane)."""
    u = 2 * np.pi * np.arange(n_major) / n_major
    w = 2 * np.pi * np.arange(n_minor) / n_minor
    uu, ww = np.meshgrid(u, w, indexing="ij")
    rr = major + minor * np.cos(ww)
    v = np.stack([rr * np.cos(uu), minor * np.sin(ww), rr * np.sin(uu)], axis=-1).reshape(-1, 3)
    idx = lambda i, j: (i % n_major) * n_minor + (j % n_minor)
    tris = []
    for i in range(n_major):
        for j in range(n_minor):
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            tris += [[a, d, c], [a, c, b]]
    return v + np.asarray(center, float), np.array(tris)


def combine_arrays(parts):
    vs, fs, base = [], [], 0
    for v, f in parts:
        vs.append(np.asarray(v, float))
        fs.append(np.asarray(f) + base)
        base += len(v)
    return np.vstack(vs), np.vstack(fs)


def combine(*parts) -> TriangleMesh:
    """Union of closed components as one triangle soup (no boolean ops)."""
    arrays = [(p.vertices, p.triangles) if isinstance(p, TriangleMesh) else p for p in parts]
    return TriangleMesh.from_arrays(*combine_arrays(arrays), quiet=True)


def sphere_with_handle(level: float = 1.0, radius: float = 40.0) -> TriangleMesh:
    """A ball with a ring handle; ``level`` scales the tessellation density.

    level 1.0 gives roughly 10k triangles; triangle count grows with level**2.
    Ball and ring always get even segment counts so that both have exactly
    opposite faces, as a usual tessellation does.
    """
    n_lon = max(8, 2 * int(round(34 * level)))
    n_lat = max(4, n_lon // 2)
    n_major = max(6, 2 * int(round(38 * level)))
    n_minor = max(4, 2 * int(round(19 * level)))
    major, minor = 22.0, 6.0
    # ring centre sits outside the ball so the inner part of the ring dips into it
    handle_center = (radius + major - 2.0 * minor, 0.0, 0.0)
    return combine(
        uv_sphere_arrays(radius, n_lat, n_lon),
        torus_arrays(major, minor, n_major, n_minor, center=handle_center),
    )


def t_shape(stem=(20.0, 40.0, 60.0), bar=(70.0, 40.0, 15.0)) -> TriangleMesh:
    """Upright stem capped by a wider bar; the bar overhangs both stem faces."""
    sx, sy, sz = stem
    bx, by, bz = bar
    return combine(
        box_arrays(stem, (-sx / 2, -sy / 2, 0.0)),
        box_arrays(bar, (-bx / 2, -by / 2, sz)),
    )


def ridge_block(half_angle_deg: float, width: float = 40.0, depth: float = 60.0, height: float = 60.0) -> TriangleMesh:
    """Block whose +x side is a shallow roof with its ridge along y at z = height/2.

    The -x side is flat. Moving ``s`` along z away from the ridge, the +x surface
    recedes by ``|s| * tan(half_angle)``.
    """
    t = np.tan(np.radians(half_angle_deg))
    h2 = height / 2
    x0, x1 = 0.0, width
    xr = x1 - h2 * t  # x of the roof's lower edges
    y0, y1 = -depth / 2, depth / 2
    v = np.array([
        [x0, y0, -h2], [x0, y1, -h2], [x0, y1, h2], [x0, y0, h2],  # 0-3 flat -x side
        [xr, y0, -h2], [xr, y1, -h2], [xr, y1, h2], [xr, y0, h2],  # 4-7 roof feet
        [x1, y0, 0.0], [x1, y1, 0.0],                              # 8-9 ridge
    ])
    f = [
        [0, 2, 1], [0, 3, 2],            # -x
        [4, 5, 9], [4, 9, 8],            # lower roof half
        [8, 9, 6], [8, 6, 7],            # upper roof half
        [0, 1, 5], [0, 5, 4],            # bottom
        [3, 7, 6], [3, 6, 2],            # top
        [0, 4, 8], [0, 8, 7], [0, 7, 3],  # -y
        [1, 2, 6], [1, 6, 9], [1, 9, 5],  # +y
    ]
    return TriangleMesh.from_arrays(v, np.array(f))


def cube_in_open_box(edge: float = 40.0, gap: float = 2.0, wall: float = 5.0):
    """Cube standing in a snug open-top box with walls flush with the cube top.

    Returns ``(mesh, n_cube_faces)``; the cube's triangles come first.
    """
    inner = edge + 2 * gap
    lo = -gap - wall
    outer = inner + 2 * wall
    parts = [box_arrays((edge, edge, edge), (0.0, 0.0, 0.0))]
    margin = 1.0  # keep wall corners off the floor's corner vertices
    parts.append(box_arrays((outer + 2 * margin, outer + 2 * margin, wall), (lo - margin, lo - margin, -wall)))
    parts.append(box_arrays((wall, outer, edge), (lo, lo, 0.0)))
    parts.append(box_arrays((wall, outer, edge), (edge + gap, lo, 0.0)))
    parts.append(box_arrays((edge + 2 * gap, wall, edge), (-gap, lo, 0.0)))
    parts.append(box_arrays((edge + 2 * gap, wall, edge), (-gap, edge + gap, 0.0)))
    return combine(*parts), 12
