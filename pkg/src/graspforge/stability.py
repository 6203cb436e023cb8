"""Soft-finger contact stability gate.

A pad pressed ``h_max`` deep into a surface of curvature radius ``R`` forms a
contact disk of radius ``a = sqrt(2 R h_max - h_max^2)``. With a paraboloidal
penetration profile the ratio of maximum frictional torque to maximum
tangential force is ``e_n = 8 a / 15`` (the foundation stiffness cancels).
A grasp is accepted when the gripping torque can resist the worst-case gravity
torque about the contact centre:

    (m g c)^2 <= e_n^2 (mu^2 f_n^2 - (m g)^2)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

R_MAX = 1e6
_FLAT_ANGLE = 1e-6


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicalParams:
    mass: float  # kg
    gravity: float = 9.81  # m/s^2
    friction_mu: float = 0.5
    grip_force: float = 20.0  # N, per jaw for grippers
    h_max: float = 1.5  # mm

    def __post_init__(self):
        for name in ("mass", "gravity", "friction_mu", "grip_force", "h_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.friction_mu > 2:
            raise ValueError("friction_mu above 2 is not physical")

    @property
    def weight(self) -> float:
        return self.mass * self.gravity


@dataclass(frozen=True)
class StabilityReport:
    c: float
    R: float
    e_n: float
    margin: float
    stable: bool

    def to_dict(self) -> dict:
        return {"c": self.c, "R": self.R, "e_n": self.e_n, "margin": self.margin, "stable": self.stable}


def curvature_radius(facet, mesh, r_max: float = R_MAX, mode: str = "max") -> float:
    """Facet curvature radius from member/seed centroid distance over normal angle.

    ``mode="max"`` takes the largest ratio; ``"min"`` is the conservative
    variant. Members nearly parallel to the seed are skipped; an all-flat facet
    gets ``r_max``, and results are capped there.
    """
    if mode not in ("max", "min"):
        raise ValueError(f"unknown mode {mode!r}")
    seed = facet.seed_triangle
    others = np.array([m for m in facet.members if m != seed], dtype=np.int64)
    if len(others) == 0:
        return float(r_max)
    cent = mesh.centroids
    d = np.linalg.norm(cent[others] - cent[seed], axis=1)
    n0 = mesh.face_normals[seed]
    nn = mesh.face_normals[others]
    theta = np.arctan2(np.linalg.norm(np.cross(nn, n0), axis=1), nn @ n0)
    use = theta >= _FLAT_ANGLE
    if not use.any():
        return float(r_max)
    ratio = d[use] / theta[use]
    r = ratio.max() if mode == "max" else ratio.min()
    return float(min(r, r_max))


def eccentricity(R: float, h_max: float) -> float:
    if not h_max > 0:
        raise DomainError("h_max must be positive")
    if h_max >= R:
        raise DomainError(f"h_max ({h_max}) must be smaller than R ({R})")
    return 8.0 / 15.0 * np.sqrt(2.0 * R * h_max - h_max * h_max)


def check_stability(contact_center, com, R: float, phys: PhysicalParams) -> StabilityReport:
    """Evaluate the torque-resistance condition; lengths in mm, forces in N."""
    if R <= phys.h_max:
        raise DomainError(f"curvature radius {R} does not exceed h_max {phys.h_max}")
    c = float(np.linalg.norm(np.asarray(contact_center, float) - np.asarray(com, float)))
    e_n = eccentricity(R, phys.h_max)
    mg = phys.weight
    headroom = (phys.friction_mu * phys.grip_force) ** 2 - mg * mg
    margin = float(e_n * e_n * headroom - (mg * c) ** 2)
    stable = headroom > 0 and margin >= 0
    return StabilityReport(c=c, R=float(R), e_n=float(e_n), margin=margin, stable=bool(stable))


def threshold_distance(R: float, phys: PhysicalParams) -> float:
    """Largest com distance that still passes, or 0 when friction cannot carry the weight."""
    mg = phys.weight
    headroom = (phys.friction_mu * phys.grip_force) ** 2 - mg * mg
    if headroom <= 0:
        return 0.0
    return eccentricity(R, phys.h_max) * np.sqrt(headroom) / mg
