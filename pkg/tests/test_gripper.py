from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from graspforge import gripper
from graspforge.gripper import (OutOfStroke, ProfileError, bundled, load_profile, pad_centers, parse_profile,
                                pose_at_contact, pose_at_pair, stroke_segments_world)
from graspforge.sampling import ContactPoint

unit_vectors = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)).filter(
    lambda v: np.linalg.norm(v) > 1e-3).map(lambda v: np.array(v) / np.linalg.norm(v))


def _rigid(pose):
    R = pose[:3, :3]
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0)


@pytest.mark.parametrize("name", gripper.KINDS)
def test_bundled_profiles(name):
    m = bundled(name)
    assert m.kind == name
    assert m.hand_corners(20.0).shape[1:] == (3, 3)
    assert load_profile(name) == m


def test_profile_from_env_dir(tmp_path, monkeypatch):
    (tmp_path / "tiny.ini").write_text("[gripper]\nname = tiny\nkind = two_finger\n[stroke]\n"
                                       "opening_min = 0\nopening_max = 30\n")
    monkeypatch.setenv(gripper.PROFILE_ENV, str(tmp_path))
    m = load_profile("tiny")
    assert m.name == "tiny" and m.opening_range == (0.0, 30.0)
    m2 = load_profile(tmp_path / "tiny.ini")
    assert m2 == m


@pytest.mark.parametrize("text", ["[stroke]\nopening_max = 3\n", "[gripper]\nkind = pliers\n",
                                  "[gripper]\nkind = two_finger\n[stroke]\nopening_min = 50\nopening_max = 10\n",
                                  "not an ini"])
def test_bad_profiles(text):
    with pytest.raises(ProfileError):
        parse_profile(text)


def test_missing_profile():
    with pytest.raises(ProfileError):
        load_profile("no_such_gripper")


@given(unit_vectors)
def test_suction_pose_faces_normal(n):
    m = bundled("suction")
    c = ContactPoint(np.array([1.0, 2.0, 3.0]), n, 0, 0)
    for k in range(8):
        pose = pose_at_contact(m, c, k, 8)
        _rigid(pose)
        approach = pose[:3, :3] @ m.tool_from_canonical @ [0, 0, 1]
        np.testing.assert_allclose(approach, -n, atol=1e-12)
        np.testing.assert_allclose(pose[:3, 3], [1, 2, 3])


@given(unit_vectors, st.floats(1, 80))
def test_pair_pose_pads_on_contacts(axis, width):
    for name in ("two_finger", "three_finger"):
        m = bundled(name)
        a = np.array([5.0, -3.0, 2.0])
        b = a + width * axis
        rolls = set()
        for k in range(8):
            pose, w = pose_at_pair(m, a, b, k, 8)
            _rigid(pose)
            assert w == pytest.approx(width)
            pads = pad_centers(m, pose, w)
            np.testing.assert_allclose(pads[0], a, atol=1e-9)
            if name == "two_finger":
                np.testing.assert_allclose(pads[1], b, atol=1e-9)
            else:
                np.testing.assert_allclose(0.5 * (pads[1] + pads[2]), b, atol=1e-9)
                assert np.linalg.norm(pads[1] - pads[2]) == pytest.approx(m.finger_gap)
            rolls.add(tuple(np.round(pose[:3, 2], 9)))
        assert len(rolls) == 8


def test_out_of_stroke():
    m = bundled("two_finger")
    with pytest.raises(OutOfStroke):
        pose_at_pair(m, [0, 0, 0], [90, 0, 0], 0, 8)
    with pytest.raises(ValueError):
        pose_at_pair(m, [0, 0, 0], [10, 0, 0], 8, 8)
    with pytest.raises(ValueError):
        pose_at_pair(bundled("suction"), [0, 0, 0], [10, 0, 0], 0, 8)


def test_hand_clears_its_contacts():
    # retracted by the clearance, the pads do not reach the contact plane
    m = bundled("two_finger")
    pose, w = pose_at_pair(m, [0, 0, 0], [40, 0, 0], 0, 8)
    corners = m.hand_corners(w) @ m.tool_from_canonical.T @ pose[:3, :3].T + pose[:3, 3]
    x = corners[..., 0]
    inside = (x > 0) & (x < 40)
    assert not inside.all(axis=1).any()
    assert x.min() <= -m.clearance + 1e-9 or x.max() >= 40 + m.clearance - 1e-9


def test_stroke_segments_run_outward():
    m = bundled("two_finger")
    pose, w = pose_at_pair(m, [0, 0, 0], [40, 0, 0], 0, 8)
    segs = stroke_segments_world(m, pose, w)
    assert len(segs) == 2
    for s in segs:
        # inner end sits outside the contact by the pad circumradius plus clearance
        inner = min(s, key=lambda p: abs(p[0] - 20))
        assert abs(inner[0] - 20) == pytest.approx(20 + m.stroke_radius + m.clearance)
