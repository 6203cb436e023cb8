"""Parametric end-effector models and grasp pose placement.

Geometry is generated in a canonical hand frame: the jaws close along +x, the
hand approaches the object along +z, and the grasp centre (midpoint of the pad
centres, or the cup rim centre for suction) is the origin. ``approach_axis``
and ``closing_axis`` say where those canonical axes point in the tool frame.
"""
from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np

from . import shapes
from .mesh import load_mesh

KINDS = ("suction", "two_finger", "three_finger")
CLEARANCE = 0.1  # mm the pads (or cup rim) are backed off the surface
PROFILE_ENV = "GRASPFORGE_PROFILE_DIR"
_BUNDLED = Path(__file__).parent / "profiles"


class OutOfStroke(ValueError):
    pass


class ProfileError(ValueError):
    pass


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def _cross(a, b) -> np.ndarray:
    # np.cross has a large fixed overhead; poses are built per candidate
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


@dataclass(frozen=True)
class GripperModel:
    name: str
    kind: str
    palm_box: tuple = (110.0, 40.0, 30.0)  # along closing x, across y, along approach z
    pad_box: tuple = (20.0, 8.0, 20.0)  # width (y), thickness (x), height (z)
    finger_length: float = 60.0  # pad centre to palm face, along approach
    opening_range: tuple = (0.0, 85.0)
    approach_axis: tuple = (0.0, 0.0, 1.0)
    closing_axis: tuple = (1.0, 0.0, 0.0)
    suction_radius: float = 10.0
    suction_length: float = 40.0
    finger_gap: float = 40.0  # centre distance between f2 and f3
    clearance: float = CLEARANCE
    palm_mesh: Optional[tuple] = field(default=None, repr=False)  # (vertices, triangles) override

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ProfileError(f"kind must be one of {KINDS}, got {self.kind!r}")
        lo, hi = self.opening_range
        if not (0 <= lo < hi):
            raise ProfileError("opening_range must satisfy 0 <= min < max")
        dims = list(self.palm_box) + list(self.pad_box) + [self.finger_length, self.suction_radius,
                                                             self.suction_length, self.finger_gap]
        if any(d <= 0 for d in dims):
            raise ProfileError("all dimensions must be positive")
        a, c = _unit(self.approach_axis), _unit(self.closing_axis)
        if abs(a @ c) > 1e-9:
            raise ProfileError("approach_axis and closing_axis must be orthogonal")

    @property
    def tool_from_canonical(self) -> np.ndarray:
        c = _unit(self.closing_axis)
        a = _unit(self.approach_axis)
        return np.column_stack([c, _cross(a, c), a])

    @property
    def canonical_to_tool_t(self) -> np.ndarray:
        m = self.__dict__.get("_m_t")
        if m is None:
            m = self.tool_from_canonical.T.copy()
            object.__setattr__(self, "_m_t", m)
        return m

    @property
    def stroke_radius(self) -> float:
        """Circumradius of a pad face; radius of the stroke capsules."""
        w, _, h = self.pad_box
        return 0.5 * float(np.hypot(w, h))

    def pad_offsets(self, jaw_width: float) -> np.ndarray:
        """Canonical pad centres: f1 first, then f2 (and f3)."""
        half = 0.5 * jaw_width
        if self.kind == "three_finger":
            g = 0.5 * self.finger_gap
            return np.array([[-half, 0, 0], [half, g, 0], [half, -g, 0]], dtype=float)
        if self.kind == "two_finger":
            return np.array([[-half, 0, 0], [half, 0, 0]], dtype=float)
        return np.zeros((1, 3))

    def hand_parts(self, jaw_width: float = 0.0) -> list:
        """``(name, vertices, triangles)`` parts in the canonical frame."""
        eps = self.clearance
        parts = []
        if self.kind == "suction":
            L = self.suction_length
            parts.append(("cup", *shapes.cylinder_arrays(self.suction_radius, L, 24, (0, 0, -eps - L))))
            pw, pd, ph = self.palm_box
            palm_z = -eps - L
        else:
            pw, pd, ph = self.pad_box[0], self.pad_box[1], self.pad_box[2]
            for i, c in enumerate(self.pad_offsets(jaw_width)):
                s = 1.0 if c[0] > 0 else -1.0
                x_in = c[0] + s * eps
                x_out = x_in + s * self.pad_box[1]
                size = (abs(x_out - x_in), self.pad_box[0], self.finger_length + self.pad_box[2] / 2)
                origin = (min(x_in, x_out), c[1] - self.pad_box[0] / 2, -self.finger_length)
                parts.append((f"finger_{i + 1}", *shapes.box_arrays(size, origin)))
            pw, pd, ph = self.palm_box
            palm_z = -self.finger_length
        if self.palm_mesh is not None:
            v, f = self.palm_mesh
            parts.append(("palm", np.asarray(v, float) + [0, 0, palm_z], np.asarray(f)))
        else:
            parts.append(("palm", *shapes.box_arrays((pw, pd, ph), (-pw / 2, -pd / 2, palm_z - ph))))
        return parts

    def hand_corners(self, jaw_width: float = 0.0) -> np.ndarray:
        """(T,3,3) triangle corners of the whole hand in the tool frame."""
        M = self.tool_from_canonical
        tris = [v[f] for _, v, f in self.hand_parts(jaw_width)]
        return np.concatenate(tris) @ M.T

    def stroke_segments(self, jaw_width: float) -> np.ndarray:
        """Canonical (k, 2, 3) finger-travel segments from the pads out to full opening.

        Each starts one capsule radius plus clearance outside its pad so the
        capsule clears the contacted surface itself.
        """
        r = self.stroke_radius
        inner = 0.5 * jaw_width + r + self.clearance
        outer = max(0.5 * self.opening_range[1], inner)
        segs = []
        for c in self.pad_offsets(jaw_width):
            s = 1.0 if c[0] > 0 else -1.0
            segs.append([[s * inner, c[1], c[2]], [s * outer, c[1], c[2]]])
        return np.array(segs, dtype=float)


# ------------------------------------------------------------------ poses

def _reference(axis: np.ndarray) -> np.ndarray:
    """Unit vector perpendicular to ``axis``: global +x projected, else global +y."""
    for g in (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])):
        r = g - (g @ axis) * axis
        n = np.linalg.norm(r)
        if n > 1e-6:
            return r / n
    raise AssertionError("unreachable")


def _roll(ref: np.ndarray, axis: np.ndarray, angle_index: int, n_da: int) -> np.ndarray:
    phi = 2.0 * np.pi * angle_index / n_da
    return np.cos(phi) * ref + np.sin(phi) * _cross(axis, ref)


def _pose(model: GripperModel, x_w, z_w, origin) -> np.ndarray:
    y_w = _cross(z_w, x_w)
    canon = np.empty((3, 3))
    canon[:, 0], canon[:, 1], canon[:, 2] = x_w, y_w, z_w
    pose = np.eye(4)
    pose[:3, :3] = canon @ model.canonical_to_tool_t
    pose[:3, 3] = origin
    return pose


def pose_at_contact(model: GripperModel, contact, angle_index: int, n_da: int) -> np.ndarray:
    """Suction pose: approach against the contact normal, rolled about it."""
    if model.kind != "suction":
        raise ValueError("pose_at_contact needs a suction model")
    if not 0 <= angle_index < n_da:
        raise ValueError("angle_index out of range")
    n = _unit(contact.normal)
    z_w = -n
    x_w = _roll(_reference(n), z_w, angle_index, n_da)
    return _pose(model, x_w, z_w, np.asarray(contact.position, float))


def pose_at_pair(model: GripperModel, pos_a, pos_b, angle_index: int, n_da: int):
    """Gripper pose closing f1 on ``pos_a`` and f2 (or the f2/f3 midpoint) on ``pos_b``.

    Returns ``(pose, jaw_width)``; raises :class:`OutOfStroke` when the pair
    does not fit the opening range.
    """
    if model.kind == "suction":
        raise ValueError("pose_at_pair needs a finger gripper")
    if not 0 <= angle_index < n_da:
        raise ValueError("angle_index out of range")
    a = np.asarray(pos_a, float)
    b = np.asarray(pos_b, float)
    d = b - a
    width = math.sqrt(d @ d)
    lo, hi = model.opening_range
    if not lo <= width <= hi:
        raise OutOfStroke(f"jaw width {width:.3f} outside [{lo}, {hi}]")
    x_w = (b - a) / width
    z_w = _roll(_reference(x_w), x_w, angle_index, n_da)
    return _pose(model, x_w, z_w, 0.5 * (a + b)), width


def pad_centers(model: GripperModel, pose: np.ndarray, jaw_width: float) -> np.ndarray:
    M = model.tool_from_canonical
    return model.pad_offsets(jaw_width) @ M.T @ pose[:3, :3].T + pose[:3, 3]


def stroke_segments_world(model: GripperModel, pose: np.ndarray, jaw_width: float) -> np.ndarray:
    M = model.tool_from_canonical
    segs = model.stroke_segments(jaw_width)
    return segs @ M.T @ pose[:3, :3].T + pose[:3, 3]


# --------------------------------------------------------------- profiles

def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(",", " ").split())


def parse_profile(text: str, base_dir: Optional[Path] = None) -> GripperModel:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ProfileError(str(exc)) from exc
    if "gripper" not in cp:
        raise ProfileError("profile needs a [gripper] section")
    g = cp["gripper"]
    kw = {"name": g.get("name", "gripper"), "kind": g.get("kind", "")}
    try:
        if "approach_axis" in g:
            kw["approach_axis"] = _floats(g["approach_axis"])
        if "closing_axis" in g:
            kw["closing_axis"] = _floats(g["closing_axis"])
        if "clearance" in g:
            kw["clearance"] = g.getfloat("clearance")
        if "palm" in cp:
            p = cp["palm"]
            kw["palm_box"] = (p.getfloat("width"), p.getfloat("depth"), p.getfloat("height"))
        if "finger" in cp:
            f = cp["finger"]
            kw["pad_box"] = (f.getfloat("pad_width"), f.getfloat("pad_thickness"), f.getfloat("pad_height"))
            kw["finger_length"] = f.getfloat("length")
        if "stroke" in cp:
            s = cp["stroke"]
            kw["opening_range"] = (s.getfloat("opening_min"), s.getfloat("opening_max"))
        if "suction" in cp:
            s = cp["suction"]
            kw["suction_radius"] = s.getfloat("radius")
            kw["suction_length"] = s.getfloat("body_length")
        if "three_finger" in cp:
            kw["finger_gap"] = cp["three_finger"].getfloat("finger_gap")
        if "meshes" in cp and "palm" in cp["meshes"]:
            path = Path(cp["meshes"]["palm"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            m = load_mesh(path)
            kw["palm_mesh"] = (m.vertices, m.triangles)
    except (TypeError, ValueError) as exc:
        raise ProfileError(f"bad profile value: {exc}") from exc
    return GripperModel(**kw)


def find_profile(name_or_path) -> Path:
    """Resolve a profile path, a name in ``$GRASPFORGE_PROFILE_DIR``, or a bundled name."""
    p = Path(name_or_path)
    if p.is_file():
        return p
    dirs = []
    if os.environ.get(PROFILE_ENV):
        dirs.append(Path(os.environ[PROFILE_ENV]))
    dirs.append(_BUNDLED)
    for d in dirs:
        for cand in (d / str(name_or_path), d / f"{name_or_path}.ini"):
            if cand.is_file():
                return cand
    raise ProfileError(f"gripper profile {name_or_path!r} not found")


def load_profile(name_or_path) -> GripperModel:
    path = find_profile(name_or_path)
    return parse_profile(path.read_text(), base_dir=path.parent)


@lru_cache(maxsize=None)
def bundled(name: str) -> GripperModel:
    return parse_profile((_BUNDLED / f"{name}.ini").read_text())
