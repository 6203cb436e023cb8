"""Command-line front end: ``graspforge {segment,sample,pairs,plan,stats}``.

Every subcommand runs the pipeline up to its stage, writes its artifact and
prints a one-line JSON summary. Failures print a one-line JSON error to
stderr and exit with status 1.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import io, shapes
from .config import ConfigError, RunConfig, merge, read_config_file
from .gripper import load_profile
from .mesh import load_mesh
from .planners import PLANNERS, PlanReport, find_parallel_pairs, prepare
from .sampling import export_samples_obj
from .segmentation import export_facets_obj, segment

log = logging.getLogger("graspforge")

SHAPES = {
    "cube": lambda *a: shapes.cube(*a),
    "sphere_with_handle": lambda *a: shapes.sphere_with_handle(*a),
    "t_shape": lambda *a: shapes.t_shape(),
    "cylinder": lambda *a: shapes.cylinder(*a),
    "icosphere": lambda *a: shapes.icosphere(int(a[0]) if a else 2, *a[1:]),
    "tetrahedron": lambda *a: shapes.tetrahedron(*a),
    "cube_in_open_box": lambda *a: shapes.cube_in_open_box(*a)[0],
}


def _number(text: str):
    """``48`` stays an int (segment counts), ``0.5`` becomes a float."""
    try:
        return int(text)
    except ValueError:
        return float(text)


def open_mesh(source: str):
    """A mesh file, or ``shape:NAME[:ARG...]`` for a built-in fixture."""
    if source.startswith("shape:"):
        name, *args = source[len("shape:"):].split(":")
        if name not in SHAPES:
            raise ConfigError(f"unknown shape {name!r}; choose from {sorted(SHAPES)}")
        return SHAPES[name](*[_number(a) for a in args])
    return load_mesh(source)


def _flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("mesh", nargs="?", help="object mesh (STL/OBJ) or shape:NAME")
    p.add_argument("--config", help="INI run configuration")
    p.add_argument("-o", "--output", help="artifact path")
    p.add_argument("--gripper", help="gripper profile path or bundled name")
    p.add_argument("--planner", choices=sorted(PLANNERS))
    g = p.add_argument_group("pipeline parameters (defaults in brackets)")
    g.add_argument("--theta-pln", type=float, help="facet planarity, degrees [20]")
    g.add_argument("--theta-fct", type=float, help="facet superimposition, degrees [20]")
    g.add_argument("--theta-parl", type=float, help="facet-pair parallelism, degrees [160]")
    g.add_argument("--t-bdry", type=float, help="boundary clearance, mm [2]")
    g.add_argument("--t-rnn", type=float, help="sample spacing, mm [3]")
    g.add_argument("--t-dct", type=float, help="three-finger pad gap, mm [3]")
    g.add_argument("--h-max", type=float, help="pad penetration depth, mm [1.5]")
    g.add_argument("--n-da", type=int, help="roll angles per candidate [8]")
    g.add_argument("--density", type=float, help="samples per mm^2 [0.01]")
    g.add_argument("--seed", type=int, help="sampling seed [0]")
    g.add_argument("--seed-scan", choices=("reachable", "ring"), help="segmentation seed scan [reachable]")
    g.add_argument("--mass", type=float, help="object mass, kg (required to plan)")
    g.add_argument("--mu", type=float, help="friction coefficient [0.5]")
    g.add_argument("--grip-force", type=float, help="grip or suction force, N [20]")
    p.add_argument("--jobs", type=int, help="worker processes for candidate checks [1]")
    p.add_argument("--export-debug", action="store_const", const=True, help="also write OBJ debug scenes")
    p.add_argument("--log-level", default="WARNING")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graspforge", description="Grasp planning on triangle meshes.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("segment", "cluster the mesh into facets"),
                       ("sample", "sample and refine contact points"),
                       ("pairs", "find opposing contact pairs"),
                       ("plan", "plan grasps and write a grasp list"),
                       ("stats", "plan and report per-stage timings")):
        sp = sub.add_parser(name, help=text)
        _flags(sp)
        if name == "stats":
            sp.add_argument("--json", action="store_true", help="print the table as JSON")
    return parser


def _values(args) -> dict:
    file_values = read_config_file(args.config) if args.config else {}
    flags = {k: getattr(args, k, None) for k in (
        "theta_pln", "theta_fct", "theta_parl", "t_bdry", "t_rnn", "t_dct", "h_max", "n_da", "density",
        "seed", "seed_scan", "mass", "mu", "grip_force", "gripper", "planner", "output", "export_debug", "jobs")}
    flags["object_mesh"] = args.mesh
    return merge(file_values, flags)


def _debug_path(cfg: RunConfig, suffix: str) -> Path:
    base = Path(cfg.output) if cfg.output else Path("graspforge")
    return base.with_name(base.stem + suffix)


def _emit(summary: dict) -> None:
    print(json.dumps(summary, separators=(",", ":")))


def _resolve_gripper(cfg: RunConfig):
    planner = cfg.planner
    model = load_profile(cfg.gripper_profile or planner or "two_finger")
    planner = planner or model.kind
    if model.kind != planner:
        raise ConfigError(f"gripper {model.name!r} is {model.kind}, planner is {planner}")
    return model, planner


def cmd_segment(cfg: RunConfig) -> dict:
    mesh = open_mesh(cfg.object_mesh)
    p = cfg.params
    facets = segment(mesh, p.theta_pln, p.theta_fct, p.seed_scan)
    if cfg.output:
        io.write_facets(cfg.output, facets)
    if cfg.export_debug:
        export_facets_obj(_debug_path(cfg, ".facets.obj"), mesh, facets)
    return {"triangles": mesh.n_faces, "facets": len(facets),
            "coverage_seeds": sum(f.promoted_by == "coverage" for f in facets)}


def cmd_sample(cfg: RunConfig) -> dict:
    mesh = open_mesh(cfg.object_mesh)
    report = PlanReport()
    facets, contacts = prepare(mesh, cfg.params, report)
    if cfg.output:
        lines = []
        for fi, pts in enumerate(contacts.refined):
            for c in pts:
                lines.append(json.dumps(io.contact_record(c), separators=(",", ":")))
        Path(cfg.output).write_text("".join(ln + "\n" for ln in lines))
    if cfg.export_debug:
        export_samples_obj(_debug_path(cfg, ".samples.obj"), contacts)
    return {"facets": len(facets), **contacts.counts()}


def cmd_pairs(cfg: RunConfig) -> dict:
    mesh = open_mesh(cfg.object_mesh)
    model, planner = _resolve_gripper(cfg)
    if planner == "suction":
        raise ConfigError("pairs needs a finger gripper")
    facets, contacts = prepare(mesh, cfg.params)
    pairs = find_parallel_pairs(mesh, facets, contacts.refined, cfg.params.theta_parl, model.opening_range)
    if cfg.output:
        io.write_pairs(cfg.output, pairs)
    return {"pairs": len(pairs)}


def _plan(cfg: RunConfig):
    mesh = open_mesh(cfg.object_mesh)
    model, planner = _resolve_gripper(cfg)
    report = PlanReport(keep_rejected=cfg.export_debug)
    grasps = PLANNERS[planner](mesh, cfg.params, model, report, jobs=cfg.jobs)
    return mesh, model, planner, report, grasps


def _meta(cfg: RunConfig, model, planner) -> dict:
    p = cfg.params
    return {"planner": planner, "gripper": model.name, "mesh": Path(cfg.object_mesh).name,
            "seed": p.rng_seed, "n_da": p.n_da}


def cmd_plan(cfg: RunConfig) -> dict:
    mesh, model, planner, report, grasps = _plan(cfg)
    if cfg.output:
        io.write_grasps(cfg.output, grasps, _meta(cfg, model, planner))
    if cfg.export_debug:
        io.export_scene(_debug_path(cfg, ".scene.obj"), mesh, model, grasps, report.rejected)
        if report.contacts is not None:
            export_samples_obj(_debug_path(cfg, ".samples.obj"), report.contacts)
    return {"grasps": len(grasps), "counters": dict(sorted(report.counters.items()))}


def timing_table(report: PlanReport) -> list:
    rows = report.timings.rows()
    total = sum(s for _, s in rows) or 1.0
    return [{"stage": k, "seconds": round(s, 6), "share": round(s / total, 4)} for k, s in rows]


def cmd_stats(cfg: RunConfig, as_json: bool = False) -> dict:
    mesh, model, planner, report, grasps = _plan(cfg)
    table = timing_table(report)
    ranked = [r["stage"] for r in sorted(table, key=lambda r: -r["seconds"])]
    if not as_json:
        width = max(len(r["stage"]) for r in table)
        for r in table:
            print(f"{r['stage']:<{width}}  {r['seconds']:9.4f} s  {100 * r['share']:5.1f} %", file=sys.stderr)
    if cfg.output:
        Path(cfg.output).write_text(json.dumps({"rows": table, "ranked": ranked}, indent=1) + "\n")
    return {"triangles": mesh.n_faces, "grasps": len(grasps), "rows": table, "ranked": ranked}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        values = _values(args)
        need_mass = args.command in ("plan", "stats")
        cfg = RunConfig.from_values(values, need_mass=need_mass)
        if args.command == "segment":
            summary = cmd_segment(cfg)
        elif args.command == "sample":
            summary = cmd_sample(cfg)
        elif args.command == "pairs":
            summary = cmd_pairs(cfg)
        elif args.command == "plan":
            summary = cmd_plan(cfg)
        else:
            summary = cmd_stats(cfg, as_json=args.json)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one parsable line
        log.debug("command failed", exc_info=True)
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "command": args.command}),
              file=sys.stderr)
        return 1
    _emit({"command": args.command, **summary})
    return 0


if __name__ == "__main__":
    sys.exit(main())
