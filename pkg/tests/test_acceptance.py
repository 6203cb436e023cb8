"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Tolerances are the ones the criteria state; nothing here is loosened to
make a run pass.
"""
from __future__ import annotations

import json
import math
import time

import numpy as np

from conftest import ACCEPTANCE, DEG, make_params
from oracles import eccentricity_quadrature, posed, random_pose, reference_two_finger, sat_collision
from graspforge import cli, gripper, io, shapes
from graspforge.collision import check_collision
from graspforge.planners import PlanReport, plan_suction, plan_three_finger, plan_two_finger, prepare
from graspforge.stability import PhysicalParams, check_stability, eccentricity


def record(num: int, ok: bool, text: str) -> None:
    ACCEPTANCE[num] = (bool(ok), text)
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {text}")
    assert ok, text


def test_criterion_1_cube_oracle_suite():
    mesh = shapes.cube(40.0)
    params = make_params()
    model = gripper.bundled("two_finger")
    t0 = time.perf_counter()
    report = PlanReport()
    grasps = plan_two_finger(mesh, params, model, report)
    elapsed = time.perf_counter() - t0

    facets, contacts = report.facets, report.contacts
    pairs = report.pairs
    axes = {tuple(np.abs(np.round(p.axis, 12))) for p in pairs}
    across = all(abs(facets[p.facet_a].avg_normal @ facets[p.facet_b].avg_normal + 1) < 1e-12 for p in pairs)
    dist_ok = all(abs(p.distance - 40.0) <= 1e-6 for p in pairs)

    ref = reference_two_finger(mesh, facets, contacts.refined, params, model)
    got = {(g.contacts[0].facet_id, g.contacts[1].facet_id, g.contacts[0].sample_id, g.rotation_index): g
           for g in grasps}
    same_keys = set(got) == set(ref)
    same_poses = same_keys and all(
        np.allclose(got[k].rotation, ref[k][0], atol=1e-9) and np.allclose(got[k].translation, ref[k][1], atol=1e-9)
        and abs(got[k].jaw_width - ref[k][2]) < 1e-9 for k in ref)

    ok = (len(facets) == 6 and len(pairs) > 0 and across and axes == {(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)}
          and dist_ok and same_keys and same_poses and elapsed < 5.0)
    record(1, ok, f"facets={len(facets)} pairs={len(pairs)} axes={len(axes)} grasps={len(grasps)} "
                  f"reference={len(ref)} set_equal={same_keys} poses_equal={same_poses} runtime={elapsed:.2f}s (<5)")


def test_criterion_2_eccentricity_oracle():
    Rs = np.logspace(1, 3, 20)  # 10 .. 1000 mm
    worst, where = 0.0, None
    for R in Rs:
        for h in np.linspace(0.1, 0.1 * R, 20):  # mm
            closed = eccentricity(R, h)
            quad = eccentricity_quadrature(R, h, "sphere")
            rel = abs(closed - quad) / quad
            if rel > worst:
                worst, where = rel, (R, h)
    spot = eccentricity(50.0, 1.5)
    spot_ok = abs(spot - 6.483) < 5e-4
    ok = worst <= 1e-3 and spot_ok
    record(2, ok, f"spot e_n(50,1.5)={spot:.4f} (6.483) worst rel err={worst:.2e} at R={where[0]:.1f} h={where[1]:.2f} "
                  f"(tol 1e-3)")


def test_criterion_3_stability_threshold():
    phys = PhysicalParams(mass=0.2, friction_mu=0.5, grip_force=20.0, h_max=1.5)
    cs = np.arange(0.0, 60.0, 0.01)
    verdict = np.array([check_stability([c, 0, 0], [0, 0, 0], 50.0, phys).stable for c in cs])
    flips = np.flatnonzero(verdict[1:] != verdict[:-1])
    c_star = cs[flips[0]] if len(flips) else float("nan")
    ok = len(flips) == 1 and verdict[0] and not verdict[-1] and abs(c_star - 32.4) <= 0.1
    record(3, ok, f"flips={len(flips)} c*={c_star:.2f} mm (32.4 +- 0.1)")


def _fixture_pairs():
    return [
        ("cube/t_shape", shapes.cube(40.0), shapes.t_shape(), 45.0),
        ("icosphere/cube", shapes.icosphere(2, 30.0), shapes.cube(40.0, origin=(-20, -20, -20)), 45.0),
        ("handle/tetrahedron", shapes.sphere_with_handle(0.22), shapes.tetrahedron(40.0), 55.0),
    ]


def test_criterion_4_collision_oracle_equivalence():
    rng = np.random.default_rng(20240611)
    disagreements, hits, total = 0, 0, 0
    per = [334, 333, 333]
    for (name, a, b, spread), n in zip(_fixture_pairs(), per):
        for _ in range(n):
            pa = random_pose(rng, spread)
            pb = random_pose(rng, 5.0)
            fast = check_collision(a, b, pa, pb)
            slow = sat_collision(posed(a.corners, pa), posed(b.corners, pb))
            disagreements += fast != slow
            hits += slow
            total += 1
    ok = total == 1000 and disagreements == 0
    record(4, ok, f"cases={total} colliding={hits} disagreements={disagreements}")


RESOLUTION_TARGETS = [5000 * (200 / 5000) ** (i / 7) for i in range(8)]


def test_criterion_5_mesh_quality_robustness():
    params = make_params(theta_parl=160 * DEG)
    model = gripper.bundled("two_finger")
    counts, sizes = [], []
    for target in RESOLUTION_TARGETS:
        mesh = shapes.sphere_with_handle(math.sqrt(target / 10264))
        sizes.append(mesh.n_faces)
        counts.append(len(plan_two_finger(mesh, params, model)))
    finest = counts[0]
    top4 = counts[:4]
    ok = all(c > 0 for c in counts) and all(finest / 2 <= c <= 2 * finest for c in top4)
    record(5, ok, "triangles->grasps " + ", ".join(f"{s}:{c}" for s, c in zip(sizes, counts))
           + f" (top 4 must lie in [{finest / 2:.1f}, {2 * finest}])")


def _monotone(values, increasing: bool) -> bool:
    pairs = zip(values, values[1:])
    return all(b >= a for a, b in pairs) if increasing else all(b <= a for a, b in pairs)


def test_criterion_6_parameter_monotonicity():
    two = gripper.bundled("two_finger")
    three = gripper.bundled("three_finger")
    # the cube is flat in every grasp sweep, so the handle carries the trend
    fixtures = {"t_shape": shapes.t_shape(), "handle_2608": shapes.sphere_with_handle(0.5)}
    three_fixtures = {"puck": shapes.cylinder(30.0, 30.0, 48), "cube": shapes.cube(40.0)}
    seg_fixtures = {"icosphere": shapes.icosphere(2, 30.0), "handle": shapes.sphere_with_handle(0.25)}
    results = {}

    for name, mesh in fixtures.items():
        results[f"theta_parl/{name}"] = ([len(plan_two_finger(mesh, make_params(theta_parl=v * DEG), two))
                                          for v in (150, 160, 170, 178)], False)
        results[f"n_da/{name}"] = ([len(plan_two_finger(mesh, make_params(n_da=v), two))
                                    for v in (2, 4, 8, 16)], True)
    for name, mesh in three_fixtures.items():
        results[f"t_dct/{name}"] = ([len(plan_three_finger(mesh, make_params(t_dct=v), three))
                                     for v in (0.0, 2.0, 4.0, 8.0)], True)
    for name, mesh in {"t_shape": fixtures["t_shape"], **seg_fixtures}.items():
        results[f"t_rnn/{name}"] = ([prepare(mesh, make_params(t_rnn=v))[1].counts()["refined"]
                                     for v in (1.0, 3.0, 5.0, 8.0)], False)
        results[f"t_bdry/{name}"] = ([prepare(mesh, make_params(t_bdry=v))[1].counts()["refined"]
                                      for v in (0.0, 1.0, 2.0, 4.0)], False)
    for name, mesh in seg_fixtures.items():
        # theta_fct decreasing, facet count must not decrease
        results[f"theta_fct/{name}"] = ([len(prepare(mesh, make_params(theta_fct=v * DEG))[0])
                                         for v in (40, 30, 20, 10)], True)

    bad = {k: v for k, (v, inc) in results.items() if not _monotone(v, inc)}
    ok = not bad and len(results) >= 12
    detail = "; ".join(f"{k}={v}" for k, (v, _) in results.items())
    record(6, ok, f"{len(results)} sweeps, violations={sorted(bad)} | {detail}")


def test_criterion_7_performance_envelope(tmp_path):
    out = tmp_path / "stats.json"
    t0 = time.perf_counter()
    code = cli.main(["stats", "shape:sphere_with_handle", "--planner", "two_finger", "--mass", "0.2",
                     "--jobs", "1", "--json", "-o", str(out)])
    elapsed = time.perf_counter() - t0
    table = json.loads(out.read_text())
    ranked = table["ranked"]
    rank = ranked.index("hand_check") + 1
    ok = code == 0 and elapsed < 30.0 and rank <= 2
    record(7, ok, f"10k pipeline {elapsed:.2f}s (<30) hand_check rank={rank} order={ranked[:4]}")


def _plan_file(path, mesh, planner, params):
    model = gripper.bundled(planner)
    fn = {"two_finger": plan_two_finger, "three_finger": plan_three_finger, "suction": plan_suction}[planner]
    grasps = fn(mesh, params, model)
    io.write_grasps(path, grasps, {"planner": planner})
    return path.read_bytes()


def test_criterion_8_determinism(tmp_path):
    cases = [
        ("cube", shapes.cube(40.0), "two_finger"),
        ("t_shape", shapes.t_shape(), "two_finger"),
        ("handle", shapes.sphere_with_handle(0.35), "two_finger"),
        ("puck", shapes.cylinder(30.0, 30.0, 48), "three_finger"),
        ("boxed_cube", shapes.cube_in_open_box()[0], "suction"),
        ("icosphere", shapes.icosphere(2, 30.0), "suction"),
    ]
    diffs = []
    for name, mesh, planner in cases:
        params = make_params(rng_seed=7)
        a = _plan_file(tmp_path / f"{name}_a.jsonl", mesh, planner, params)
        b = _plan_file(tmp_path / f"{name}_b.jsonl", mesh, planner, params)
        if a != b:
            diffs.append(name)
    ok = not diffs
    record(8, ok, f"{len(cases)} fixtures, differing files={diffs}")
