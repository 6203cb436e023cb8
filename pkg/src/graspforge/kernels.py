"""Backend selection for the collision kernels.

The compiled extension is used when it imports; set ``GRASPFORGE_PURE=1`` to
force the numpy fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py as py

bvh_collide = py.bvh_collide
bvh_capsule = py.bvh_capsule
point_segments_min_dist = py.point_segments_min_dist
BACKEND = "python"

if os.environ.get("GRASPFORGE_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as c
    except ImportError:  # pragma: no cover - depends on the build
        c = None
    if c is not None:
        bvh_collide = c.bvh_collide
        bvh_capsule = c.bvh_capsule
        point_segments_min_dist = c.point_segments_min_dist
        BACKEND = "cython"


def compiled():
    """The compiled module, or None."""
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels
