from __future__ import annotations

import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from graspforge import shapes
from graspforge.mesh import (EmptyMesh, MeshWarning, ParseError, Ray, TriangleMesh, load_mesh, ray_cast,
                             write_obj, write_stl_binary)
from oracles import ray_hit_scalar


def test_cube_basics(cube):
    assert cube.n_faces == 12
    assert cube.watertight
    assert cube.total_area == pytest.approx(6 * 40 * 40)
    np.testing.assert_allclose(cube.com, [20, 20, 20], atol=1e-9)
    # outward normals: dot with centroid offset is positive
    assert np.all(np.einsum("ij,ij->i", cube.face_normals, cube.centroids - cube.com) > 0)


def test_arrays_are_read_only(cube):
    with pytest.raises(ValueError):
        cube.vertices[0, 0] = 1.0
    with pytest.raises(ValueError):
        cube.corners[0, 0, 0] = 1.0


@pytest.mark.parametrize("writer, suffix", [(write_obj, ".obj"), (write_stl_binary, ".stl")])
def test_round_trip(tmp_path, t_shape, writer, suffix):
    path = tmp_path / f"m{suffix}"
    writer(path, t_shape)
    back = load_mesh(path)
    assert back.n_faces == t_shape.n_faces
    assert back.total_area == pytest.approx(t_shape.total_area, rel=1e-5)
    np.testing.assert_allclose(back.com, t_shape.com, atol=1e-3)


def test_ascii_stl(tmp_path):
    text = """solid t
facet normal 0 0 1
 outer loop
  vertex 0 0 0
  vertex 1 0 0
  vertex 0 1 0
 endloop
endfacet
endsolid t
"""
    p = tmp_path / "a.stl"
    p.write_text(text)
    with pytest.warns(MeshWarning):
        m = load_mesh(p)
    assert m.n_faces == 1 and not m.watertight


def test_welding_merges_soup():
    # two triangles sharing an edge, written as a soup
    v = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]]
    m = TriangleMesh.from_arrays(v, [[0, 1, 2], [3, 4, 5]], quiet=True)
    assert len(m.vertices) == 4
    assert m.adjacency[0] == (1,) or list(m.adjacency[0]) == [1]


def test_degenerate_faces_warn():
    v = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [2, 0, 0]]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        m = TriangleMesh.from_arrays(v, [[0, 1, 2], [0, 1, 3]])
    assert any("degenerate" in str(w.message) for w in caught)
    assert m.n_faces == 1


def test_empty_and_bad_input(tmp_path):
    with pytest.raises(EmptyMesh):
        TriangleMesh.from_arrays([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]], quiet=True)
    with pytest.raises(ParseError):
        TriangleMesh.from_arrays([[0, 0, 0]], [[0, 1, 2]])
    bad = tmp_path / "bad.obj"
    bad.write_text("v 0 0 x\n")
    with pytest.raises(ParseError):
        load_mesh(bad)
    with pytest.raises(ParseError):
        load_mesh(tmp_path / "missing.stl")
    trunc = tmp_path / "t.stl"
    trunc.write_bytes(b"\0" * 80 + (5).to_bytes(4, "little") + b"\0" * 20)
    with pytest.raises(ParseError):
        load_mesh(trunc)


def test_ray_cast_cube(cube):
    hit = ray_cast(cube, Ray([20, 20, -10], [0, 0, 1]))
    assert hit.distance == pytest.approx(10)
    np.testing.assert_allclose(hit.point, [20, 20, 0])
    # from inside, the start surface is skipped by eps
    hit = ray_cast(cube, Ray([20, 20, 0], [0, 0, 1]))
    assert hit.distance == pytest.approx(40)
    assert ray_cast(cube, Ray([100, 100, 100], [0, 0, 1])) is None
    with pytest.raises(ValueError):
        Ray([0, 0, 0], [0, 0, 2])


@given(st.floats(-30, 30), st.floats(-30, 30), st.floats(-1, 1), st.floats(-1, 1))
def test_ray_cast_matches_scalar_oracle(x, y, dx, dy):
    mesh = shapes.icosphere(1, 20.0)
    d = np.array([dx, dy, 1.0])
    d /= np.linalg.norm(d)
    o = np.array([x, y, -50.0])
    hit = ray_cast(mesh, Ray(o, d))
    ts = [ray_hit_scalar(o, d, tri) for tri in mesh.corners]
    ts = [t for t in ts if t is not None and t > 1e-6]
    if hit is None:
        assert not ts
    else:
        assert ts and hit.distance == pytest.approx(min(ts), abs=1e-7)


def test_transformed_moves_com(cube):
    pose = np.eye(4)
    pose[:3, 3] = [1, 2, 3]
    moved = cube.transformed(pose)
    np.testing.assert_allclose(moved.com, cube.com + [1, 2, 3])
