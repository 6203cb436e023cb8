"""Grasp-list, pair-list and facet serialization plus debug scene export.

Grasp lists are JSON lines: one header object, then one object per grasp.
Floats are rounded to :data:`DECIMALS` places so that write, read and write
again gives the same bytes.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .mesh import write_obj
from .planners import ContactPair, Grasp
from .sampling import ContactPoint
from .stability import StabilityReport

FORMAT = "graspforge-grasps"
VERSION = 1
DECIMALS = 9


def _num(x):
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return None
    return round(x, DECIMALS) + 0.0  # + 0.0 folds -0.0 into 0.0


def _vec(a) -> list:
    return [_num(v) for v in np.ravel(a)]


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=False)


def contact_record(c: ContactPoint) -> dict:
    return {"position": _vec(c.position), "normal": _vec(c.normal), "facet": int(c.facet_id),
            "triangle": int(c.triangle_id), "sample": int(c.sample_id)}


def grasp_record(g: Grasp) -> dict:
    s = g.stability
    return {
        "rotation": _vec(g.rotation),
        "translation": _vec(g.translation),
        "jaw_width": _num(g.jaw_width),
        "contacts": [contact_record(c) for c in g.contacts],
        "rotation_index": int(g.rotation_index),
        "item": int(g.item),
        "margin": None if s is None else _num(s.margin),
        "stability": None if s is None else {"c": _num(s.c), "R": _num(s.R), "e_n": _num(s.e_n),
                                             "stable": bool(s.stable)},
        "reason": g.reason,
    }


def _contact(d: dict) -> ContactPoint:
    return ContactPoint(np.array(d["position"], float), np.array(d["normal"], float), d["facet"],
                        d["triangle"], d.get("sample", -1))


def grasp_from_record(d: dict) -> Grasp:
    s = d.get("stability")
    stab = None
    if s is not None:
        margin = d.get("margin")
        stab = StabilityReport(c=s["c"], R=s["R"], e_n=s["e_n"],
                               margin=float("nan") if margin is None else margin, stable=s["stable"])
    return Grasp(
        rotation=np.array(d["rotation"], float).reshape(3, 3),
        translation=np.array(d["translation"], float),
        jaw_width=d["jaw_width"],
        contacts=tuple(_contact(c) for c in d["contacts"]),
        rotation_index=d["rotation_index"],
        stability=stab,
        reason=d.get("reason", ""),
        item=d.get("item", -1),
    )


def write_grasps(path, grasps, meta: Optional[dict] = None) -> None:
    """Write a grasp list; ``meta`` lands in the header line and must be JSON-able."""
    header = {"format": FORMAT, "version": VERSION, "count": len(grasps)}
    header.update(meta or {})
    lines = [_dumps(header)] + [_dumps(grasp_record(g)) for g in grasps]
    Path(path).write_text("\n".join(lines) + "\n")


def read_grasps(path):
    """Return ``(header, grasps)``."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty grasp list")
    header = json.loads(lines[0])
    if header.get("format") != FORMAT:
        raise ValueError(f"{path}: not a grasp list")
    if header.get("version") != VERSION:
        raise ValueError(f"{path}: unsupported version {header.get('version')}")
    return header, [grasp_from_record(json.loads(ln)) for ln in lines[1:]]


def write_pairs(path, pairs) -> None:
    recs = [{"facet_a": p.facet_a, "facet_b": p.facet_b, "distance": _num(p.distance), "axis": _vec(p.axis),
             "contact_a": contact_record(p.contact_a), "contact_b": contact_record(p.contact_b)}
            for p in pairs]
    Path(path).write_text("".join(_dumps(r) + "\n" for r in recs))


def read_pairs(path) -> list:
    out = []
    for ln in Path(path).read_text().splitlines():
        if ln.strip():
            d = json.loads(ln)
            out.append(ContactPair(_contact(d["contact_a"]), _contact(d["contact_b"]), d["facet_a"],
                                   d["facet_b"], np.array(d["axis"], float), d["distance"]))
    return out


def facet_records(facets) -> list:
    return [{"seed": f.seed_triangle, "promoted_by": f.promoted_by, "area": _num(f.area),
             "normal": _vec(f.avg_normal), "curvature_radius": _num(f.curvature_radius),
             "members": list(f.members)} for f in facets]


def write_facets(path, facets) -> None:
    Path(path).write_text("".join(_dumps(r) + "\n" for r in facet_records(facets)))


# ------------------------------------------------------------ debug scene

ACCEPTED_RGB = (1.0, 1.0, 1.0)
REJECTED_RGB = (1.0, 0.0, 0.0)
OBJECT_RGB = (0.6, 0.6, 0.6)


def export_scene(path, mesh, model, grasps, rejected=(), max_hands: int = 200) -> None:
    """Object in grey, accepted hands white, rejected hands red (at most ``max_hands`` of each)."""
    groups = [("object", mesh.vertices, mesh.triangles)]
    colors = [OBJECT_RGB]
    M = model.tool_from_canonical
    for tag, items, rgb in (("accepted", grasps, ACCEPTED_RGB), ("rejected", rejected, REJECTED_RGB)):
        for i, g in enumerate(list(items)[:max_hands]):
            for name, v, f in model.hand_parts(g.jaw_width):
                world = v @ M.T @ g.rotation.T + g.translation
                label = f"{tag}_{i}_{name}" + (f"_{g.reason}" if g.reason else "")
                groups.append((label, world, f))
                colors.append(rgb)
    write_obj(path, groups, colors=colors)
