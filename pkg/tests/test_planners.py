from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import DEG, make_params
from oracles import brute_pairs, posed, sat_collision
from graspforge import gripper, shapes
from graspforge.planners import (REASONS, ContactPair, PlanReport, evaluate_pairs, find_parallel_pairs,
                                 plan_suction, plan_three_finger, plan_two_finger, prepare)

TWO = gripper.bundled("two_finger")
THREE = gripper.bundled("three_finger")
CUP = gripper.bundled("suction")


def test_pairs_match_brute_force(t_shape):
    params = make_params()
    facets, contacts = prepare(t_shape, params)
    got = find_parallel_pairs(t_shape, facets, contacts.refined, params.theta_parl, TWO.opening_range)
    want = brute_pairs(t_shape, facets, contacts.refined, params.theta_parl, TWO.opening_range)
    key = lambda i, j, a, d: (i, j, a.sample_id, round(d, 6))
    assert sorted(key(p.facet_a, p.facet_b, p.contact_a, p.distance) for p in got) == sorted(
        key(i, j, a, d) for i, j, a, b, d in want)


def test_tetrahedron_has_no_pairs():
    assert plan_two_finger(shapes.tetrahedron(40.0), make_params(), TWO) == []


def test_narrow_stroke_gives_nothing(cube):
    narrow = gripper.parse_profile("[gripper]\nkind = two_finger\n[stroke]\nopening_min = 0\nopening_max = 30\n")
    report = PlanReport()
    assert plan_two_finger(cube, make_params(), narrow, report) == []
    assert report.counters["pairs"] == 0


def test_parallel_threshold_bounds(cube):
    params = make_params(theta_parl=180 * DEG)
    facets, contacts = prepare(cube, params)
    pairs = find_parallel_pairs(cube, facets, contacts.refined, params.theta_parl, TWO.opening_range)
    assert pairs  # exactly opposite faces still qualify at 180 degrees
    for p in pairs:
        assert np.dot(p.axis, facets[p.facet_a].avg_normal) == pytest.approx(-1)


def test_t_shape_stroke_counters(t_shape):
    report = PlanReport()
    params = make_params()
    grasps = plan_two_finger(t_shape, params, TWO, report)
    c = report.counters
    assert c["StrokeCollision"] > 0
    assert c["StrokeCollision"] % params.n_da == 0
    stroke_pairs = c["StrokeCollision"] // params.n_da
    assert c["hand_checks"] == (c["pairs"] - stroke_pairs - c["OutOfStroke"] // params.n_da) * params.n_da
    assert c["accepted"] == len(grasps)
    assert sum(c[r] for r in REASONS) + len(grasps) == c["pairs"] * params.n_da


def test_accepted_grasps_are_collision_free(t_shape):
    grasps = plan_two_finger(t_shape, make_params(n_da=4), TWO)
    assert grasps
    for g in grasps[::7]:
        corners = posed(TWO.hand_corners(g.jaw_width) @ TWO.tool_from_canonical.T, g.pose)
        assert not sat_collision(corners, t_shape.corners)


def test_suction_on_cube(cube):
    grasps = plan_suction(cube, make_params(), CUP)
    normals = {tuple(np.round(g.contacts[0].normal).astype(int)) for g in grasps}
    assert len(normals) == 6


def test_suction_in_open_box():
    mesh, n_cube = shapes.cube_in_open_box()
    grasps = plan_suction(mesh, make_params(), CUP)
    on_cube = [g for g in grasps if g.contacts[0].triangle_id < n_cube]
    assert on_cube
    # the walls hide every cube face except the top
    for g in on_cube:
        np.testing.assert_allclose(g.contacts[0].normal, [0, 0, 1], atol=1e-12)


def test_heavy_object_is_unstable(cube):
    report = PlanReport()
    assert plan_two_finger(cube, make_params(mass=5.0), TWO, report) == []
    assert report.counters["Unstable"] > 0


def test_keep_rejected_records_reasons(t_shape):
    report = PlanReport(keep_rejected=True)
    plan_two_finger(t_shape, make_params(), TWO, report)
    reasons = {g.reason for g in report.rejected}
    assert "StrokeCollision" in reasons
    assert all(not g.accepted for g in report.rejected)


def test_ridge_pad_gap():
    # f2/f3 straddle a shallow roof; at rolls 0 and 4 they lean off it
    mesh = shapes.ridge_block(np.degrees(np.arctan(3.5 / 20)))
    from graspforge.sampling import ContactPoint
    a = ContactPoint(np.array([0.0, 0.0, 0.0]), np.array([-1.0, 0, 0]), 0, 0)
    b = ContactPoint(np.array([40.0, 0.0, 0.0]), np.array([1.0, 0, 0]), 1, 0)
    pair = ContactPair(a, b, 0, 1, np.array([1.0, 0, 0]), 40.0)
    tight = evaluate_pairs(mesh, make_params(t_dct=3.0), THREE, [pair], [1e6, 1e6])
    loose = evaluate_pairs(mesh, make_params(t_dct=4.0), THREE, [pair], [1e6, 1e6])
    assert sorted(g.rotation_index for g in tight) == [1, 2, 3, 5, 6, 7]
    assert sorted(g.rotation_index for g in loose) == list(range(8))


def test_three_finger_puck():
    puck = shapes.cylinder(30.0, 30.0, 48)
    grasps = plan_three_finger(puck, make_params(t_dct=0.0), THREE)
    assert grasps
    for g in grasps:
        pads = gripper.pad_centers(THREE, g.pose, g.jaw_width)
        assert np.all(np.isfinite(pads))


def test_jobs_do_not_change_output(t_shape):
    params = make_params()
    a = plan_two_finger(t_shape, params, TWO, jobs=1)
    b = plan_two_finger(t_shape, params, TWO, jobs=2)
    assert len(a) == len(b)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.pose, y.pose)
        assert x.item == y.item and x.rotation_index == y.rotation_index


@settings(max_examples=8)
@given(st.integers(1, 12))
def test_grasp_count_scales_with_rolls(n_da):
    cube = shapes.cube(40.0)
    # every roll about the axis is equivalent on a cube
    assert len(plan_two_finger(cube, make_params(n_da=n_da), TWO)) == 31 * n_da


def test_invalid_params():
    with pytest.raises(ValueError):
        make_params(n_da=0)
    with pytest.raises(ValueError):
        make_params(theta_parl=-1.0)
    with pytest.raises(ValueError):
        plan_suction(shapes.cube(40.0), make_params(), TWO)
