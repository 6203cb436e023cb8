"""Run configuration: defaults, INI files and command-line overrides.

Precedence is flags > config file > defaults. Angles are degrees here and
radians everywhere else.

Example file::

    [run]
    object_mesh = part.stl
    gripper = two_finger
    planner = two_finger
    output = grasps.jsonl

    [params]
    theta_parl = 165
    n_da = 12

    [physics]
    mass = 0.35
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .planners import PlannerParams
from .stability import PhysicalParams

# name -> (section, type, default); angle defaults in degrees
DEFAULTS = {
    "theta_pln": ("params", float, 20.0),
    "theta_fct": ("params", float, 20.0),
    "theta_parl": ("params", float, 160.0),
    "t_bdry": ("params", float, 2.0),
    "t_rnn": ("params", float, 3.0),
    "t_dct": ("params", float, 3.0),
    "n_da": ("params", int, 8),
    "density": ("params", float, 0.01),
    "seed": ("params", int, 0),
    "seed_scan": ("params", str, "reachable"),
    "h_max": ("physics", float, 1.5),
    "mass": ("physics", float, None),
    "mu": ("physics", float, 0.5),
    "grip_force": ("physics", float, 20.0),
    "gravity": ("physics", float, 9.81),
    "object_mesh": ("run", str, None),
    "gripper": ("run", str, None),
    "planner": ("run", str, None),
    "output": ("run", str, None),
    "export_debug": ("run", bool, False),
    "jobs": ("run", int, 1),
}
ANGLES = ("theta_pln", "theta_fct", "theta_parl")
PLANNER_KINDS = ("suction", "two_finger", "three_finger")


class ConfigError(ValueError):
    pass


def read_config_file(path) -> dict:
    """Values present in an INI file, converted to their declared types."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    known = {(sec, name) for name, (sec, _, _) in DEFAULTS.items()}
    out = {}
    for sec in cp.sections():
        for name, raw in cp[sec].items():
            if (sec, name) not in known:
                raise ConfigError(f"unknown key [{sec}] {name}")
            typ = DEFAULTS[name][1]
            try:
                out[name] = cp[sec].getboolean(name) if typ is bool else typ(raw)
            except ValueError as exc:
                raise ConfigError(f"[{sec}] {name}: {exc}") from exc
    # relative paths in a config file are relative to the file
    for key in ("object_mesh", "output"):
        if key in out and not Path(out[key]).is_absolute() and not out[key].startswith("shape:"):
            out[key] = str(path.parent / out[key])
    return out


def merge(file_values: dict, flag_values: dict) -> dict:
    values = {k: d for k, (_, _, d) in DEFAULTS.items()}
    values.update(file_values)
    values.update({k: v for k, v in flag_values.items() if v is not None})
    return values


def physical_params(values: dict, need_mass: bool = True) -> PhysicalParams:
    mass = values.get("mass")
    if mass is None:
        if need_mass:
            raise ConfigError("object mass is required for planning (--mass or [physics] mass)")
        mass = 1.0  # placeholder; stages before planning never read it
    return PhysicalParams(mass=mass, gravity=values["gravity"], friction_mu=values["mu"],
                          grip_force=values["grip_force"], h_max=values["h_max"])


def planner_params(values: dict, need_mass: bool = True) -> PlannerParams:
    try:
        return PlannerParams(
            phys=physical_params(values, need_mass),
            theta_pln=math.radians(values["theta_pln"]),
            theta_fct=math.radians(values["theta_fct"]),
            theta_parl=math.radians(values["theta_parl"]),
            t_bdry=values["t_bdry"], t_rnn=values["t_rnn"], t_dct=values["t_dct"],
            n_da=values["n_da"], density=values["density"], rng_seed=values["seed"],
            seed_scan=values["seed_scan"],
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class RunConfig:
    object_mesh: str
    gripper_profile: Optional[str]
    planner: Optional[str]
    params: PlannerParams
    output: Optional[str] = None
    export_debug: bool = False
    jobs: int = 1

    @classmethod
    def from_values(cls, values: dict, need_mass: bool = True) -> "RunConfig":
        mesh = values.get("object_mesh")
        if not mesh:
            raise ConfigError("no object mesh given")
        if not mesh.startswith("shape:") and not Path(mesh).is_file():
            raise ConfigError(f"object mesh {mesh} not found")
        planner = values.get("planner")
        if planner is not None and planner not in PLANNER_KINDS:
            raise ConfigError(f"planner must be one of {PLANNER_KINDS}")
        if values["jobs"] < 1:
            raise ConfigError("jobs must be at least 1")
        return cls(object_mesh=mesh, gripper_profile=values.get("gripper"), planner=planner,
                   params=planner_params(values, need_mass), output=values.get("output"),
                   export_debug=bool(values["export_debug"]), jobs=values["jobs"])
