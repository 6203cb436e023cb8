from __future__ import annotations

import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import capsule_hits, posed, random_pose, sat_collision, tri_overlap_sat
from graspforge import _kernels_py, kernels, shapes
from graspforge.collision import (Bvh, Capsule, brute_force_capsule, brute_force_collision, bvh_of,
                                  check_capsule, check_collision)
from graspforge.mesh import make_pose

UNIT = shapes.cube(1.0)


def shifted(x, y=0.0, z=0.0):
    return make_pose(translation=[x, y, z])


@pytest.mark.parametrize("dx, expect", [(0.5, True), (1.0, True), (1.0 + 1e-9, False), (2.0, False)])
def test_unit_cube_examples(dx, expect):
    assert check_collision(UNIT, UNIT, shifted(dx)) is expect
    assert check_collision(UNIT, UNIT, None, shifted(dx)) is expect


def test_nested_surfaces_do_not_touch():
    # surface test: a small cube strictly inside a large one never touches it
    big = shapes.cube(10.0, origin=(-5, -5, -5))
    small = shapes.cube(1.0, origin=(-0.5, -0.5, -0.5))
    assert not check_collision(small, big)
    assert not brute_force_collision(small, big)


@given(st.integers(0, 2**32 - 1))
def test_symmetric_and_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    a, b = shapes.icosphere(1, 10.0), shapes.t_shape()
    pa, pb = random_pose(rng, 40), random_pose(rng, 10)
    got = check_collision(a, b, pa, pb)
    assert got == check_collision(b, a, pb, pa)
    assert got == brute_force_collision(a, b, pa, pb)


def test_capsule_examples():
    cap = lambda x, r: Capsule([x, 0.5, -1.0], [x, 0.5, 2.0], r)
    assert check_capsule(cap(0.5, 0.1), UNIT)  # pierces
    assert check_capsule(cap(1.05, 0.1), UNIT)  # 0.05 from +x face
    assert not check_capsule(cap(1.2, 0.1), UNIT)
    assert not check_capsule(cap(1.1, 0.1), UNIT)  # exactly at radius: strict
    # zero radius: segment intersection, including touching
    assert check_capsule(Capsule([1.0, 0.5, -1], [1.0, 0.5, 2], 0.0), UNIT)
    assert not check_capsule(Capsule([1.0 + 1e-6, 0.5, -1], [1.0 + 1e-6, 0.5, 2], 0.0), UNIT)
    with pytest.raises(ValueError):
        Capsule([0, 0, 0], [1, 0, 0], -1.0)


def test_capsule_pose():
    pose = shifted(10)
    c = Capsule([10.5, 0.5, -1], [10.5, 0.5, 2], 0.1)
    assert check_capsule(c, UNIT, pose)
    assert not check_capsule(c, UNIT)


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 6.0))
def test_capsule_matches_oracle(seed, r):
    rng = np.random.default_rng(seed)
    mesh = shapes.sphere_with_handle(0.2)
    p, q = rng.uniform(-60, 60, 3), rng.uniform(-60, 60, 3)
    c = Capsule(p, q, r)
    assert check_capsule(c, mesh) == capsule_hits(p, q, r, mesh.corners) == brute_force_capsule(c, mesh)


def _check_tree(tree: Bvh, corners):
    assert sorted(tree.order.tolist()) == list(range(len(corners)))
    np.testing.assert_array_equal(tree.tris, corners[tree.order])
    for n in range(len(tree.lo)):
        tris = tree.tris[tree.start[n]:tree.start[n] + tree.count[n]].reshape(-1, 3)
        assert np.all(tris >= tree.lo[n] - 1e-12) and np.all(tris <= tree.hi[n] + 1e-12)
        if tree.left[n] < 0:
            assert tree.count[n] <= tree.leaf_size
        else:
            l, r = tree.left[n], tree.right[n]
            assert tree.start[l] == tree.start[n]
            assert tree.start[r] == tree.start[l] + tree.count[l]
            assert tree.count[l] + tree.count[r] == tree.count[n]


@pytest.mark.parametrize("leaf", [1, 4, 16])
def test_bvh_invariants(small_handle, leaf):
    _check_tree(Bvh.build(small_handle.corners, leaf), small_handle.corners)


def test_posed_tree_bounds(small_handle):
    pose = random_pose(np.random.default_rng(1), 20)
    tree = bvh_of(small_handle).posed(pose)
    np.testing.assert_allclose(tree.tris, posed(small_handle.corners, pose)[tree.order])
    for n in range(len(tree.lo)):
        tris = tree.tris[tree.start[n]:tree.start[n] + tree.count[n]].reshape(-1, 3)
        assert np.all(tris >= tree.lo[n] - 1e-9) and np.all(tris <= tree.hi[n] + 1e-9)


@given(st.integers(0, 2**32 - 1))
def test_tri_tri_matches_sat(seed):
    rng = np.random.default_rng(seed)
    ta = rng.uniform(-1, 1, (64, 3, 3))
    tb = rng.uniform(-1, 1, (64, 3, 3))
    got = _kernels_py.tri_tri_batch(ta, tb)
    want = np.array([tri_overlap_sat(a, b) for a, b in zip(ta, tb)])
    np.testing.assert_array_equal(got, want)


cy = kernels.compiled()


@pytest.mark.skipif(cy is None, reason="compiled kernels not built")
def test_backend_parity(small_handle, t_shape):
    rng = np.random.default_rng(7)
    ta, tb = bvh_of(small_handle), bvh_of(t_shape)
    for _ in range(300):
        pa = random_pose(rng, 50)
        posed_a = ta.posed(pa)
        assert bool(cy.bvh_collide(*posed_a.arrays(), *tb.arrays())) == bool(
            _kernels_py.bvh_collide(*posed_a.arrays(), *tb.arrays()))
        p, q = rng.uniform(-60, 60, 3), rng.uniform(-60, 60, 3)
        r = float(rng.uniform(0, 5))
        assert bool(cy.bvh_capsule(*ta.arrays(), p, q, r)) == bool(_kernels_py.bvh_capsule(*ta.arrays(), p, q, r))
    pts = rng.uniform(-50, 50, (500, 3))
    a, b = rng.uniform(-50, 50, (40, 3)), rng.uniform(-50, 50, (40, 3))
    np.testing.assert_allclose(cy.point_segments_min_dist(pts, a, b), _kernels_py.point_segments_min_dist(pts, a, b))


def test_hand_vs_object_is_fast():
    mesh = shapes.sphere_with_handle(1.0)
    hand = shapes.box((110, 40, 30), (-55, -20, 45))
    bvh_of(mesh)
    bvh_of(hand)
    rng = np.random.default_rng(0)
    times = []
    for _ in range(200):
        pose = random_pose(rng, 30)
        t0 = time.perf_counter()
        check_collision(hand, mesh, pose)
        times.append(time.perf_counter() - t0)
    assert np.median(times) < 5e-3
