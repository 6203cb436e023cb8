from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import DEG
from graspforge import shapes
from graspforge.segmentation import angles_to, export_facets_obj, grow_facet, segment


def test_cube_six_faces(cube):
    facets = segment(cube, 20 * DEG, 20 * DEG)
    assert len(facets) == 6
    normals = np.array([f.avg_normal for f in facets])
    assert {tuple(np.round(n).astype(int)) for n in normals} == {
        (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)}
    for f in facets:
        assert len(f.members) == 2
        assert f.area == pytest.approx(1600)
        assert len(f.boundary_edges) == 4


def test_zero_planarity_gives_single_triangles(icosphere):
    facets = segment(icosphere, 0.0, 1e-3)
    assert len(facets) == icosphere.n_faces
    assert all(len(f.members) == 1 for f in facets)


@pytest.mark.parametrize("scan", ["reachable", "ring"])
def test_coverage_and_planarity(small_handle, scan):
    theta = 20 * DEG
    facets = segment(small_handle, theta, theta, scan)
    covered = set()
    for f in facets:
        covered.update(f.members)
        ang = angles_to(small_handle.face_normals[list(f.members)], small_handle.face_normals[f.seed_triangle])
        assert ang.max() <= theta + 1e-9
        assert f.seed_triangle in f
    assert covered == set(range(small_handle.n_faces))


def test_angle_seeds_clear_threshold(small_handle):
    theta_fct = 25 * DEG
    facets = segment(small_handle, 20 * DEG, theta_fct)
    seen = []
    for f in facets:
        n = small_handle.face_normals[f.seed_triangle]
        if f.promoted_by == "angle" and seen:
            assert min(math.acos(np.clip(n @ m, -1, 1)) for m in seen) > theta_fct - 1e-9
        seen.append(n)


def test_facets_grow_connected(small_handle):
    facets = segment(small_handle, 20 * DEG, 20 * DEG)
    for f in facets[:20]:
        members = set(f.members)
        stack, reached = [f.seed_triangle], {f.seed_triangle}
        while stack:
            t = stack.pop()
            for nb in small_handle.adjacency[t]:
                if nb in members and nb not in reached:
                    reached.add(nb)
                    stack.append(nb)
        assert reached == members


@given(st.floats(1, 40))
def test_planarity_monotone(theta_deg):
    mesh = shapes.icosphere(2, 30.0)
    small = set(grow_facet(mesh, 0, theta_deg * DEG))
    large = set(grow_facet(mesh, 0, (theta_deg + 5) * DEG))
    assert small <= large


def test_deterministic(small_handle):
    a = segment(small_handle, 20 * DEG, 20 * DEG)
    b = segment(small_handle, 20 * DEG, 20 * DEG)
    assert [f.members for f in a] == [f.members for f in b]


def test_invalid_arguments(cube):
    with pytest.raises(ValueError):
        segment(cube, -1.0, 0.3)
    with pytest.raises(ValueError):
        segment(cube, 0.3, 0.0)
    with pytest.raises(ValueError):
        segment(cube, 0.3, 0.3, "spiral")


def test_export(tmp_path, cube):
    path = tmp_path / "f.obj"
    export_facets_obj(path, cube, segment(cube, 0.3, 0.3))
    assert path.read_text().count("\ng ") + 1 >= 6
