"""graspforge: grasp planning for suction cups and parallel grippers on triangle meshes."""
from __future__ import annotations

from .collision import Bvh, Capsule, check_capsule, check_collision
from .gripper import GripperModel, OutOfStroke, load_profile, pose_at_contact, pose_at_pair
from .mesh import EmptyMesh, MeshError, ParseError, Ray, TriangleMesh, load_mesh, ray_cast
from .planners import (ContactPair, Grasp, PlannerParams, PlanReport, find_parallel_pairs, plan_suction,
                       plan_three_finger, plan_two_finger)
from .sampling import ContactPoint, sample_surface
from .segmentation import Facet, segment
from .stability import PhysicalParams, StabilityReport, check_stability, eccentricity

__version__ = "0.1.0"

__all__ = [
    "Bvh", "Capsule", "ContactPair", "ContactPoint", "EmptyMesh", "Facet", "Grasp", "GripperModel",
    "MeshError", "OutOfStroke", "ParseError", "PhysicalParams", "PlanReport", "PlannerParams", "Ray",
    "StabilityReport", "TriangleMesh", "check_capsule", "check_collision", "check_stability",
    "eccentricity", "find_parallel_pairs", "load_mesh", "load_profile", "plan_suction",
    "plan_three_finger", "plan_two_finger", "pose_at_contact", "pose_at_pair", "ray_cast",
    "sample_surface", "segment",
]
