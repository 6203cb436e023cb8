"""Compare the compiled and numpy collision kernels on planner-shaped workloads.

    python benchmarks/bench_kernels.py [--level 1.0] [--poses 300]

Times hand-vs-object BVH queries, capsule queries and the boundary-distance
kernel on the handle fixture, then one full two-finger plan per backend.
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from graspforge import _kernels_py, gripper, kernels, shapes
from graspforge.collision import Bvh, bvh_of


def _best(fn, repeat: int = 3) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(mod, mesh, hand: Bvh, poses, caps, pts, seg_a, seg_b) -> dict:
    tree = bvh_of(mesh)
    posed = [hand.posed(p) for p in poses]
    out = {}
    out["bvh_collide"] = _best(lambda: [mod.bvh_collide(*h.arrays(), *tree.arrays()) for h in posed]) / len(posed)
    out["bvh_capsule"] = _best(lambda: [mod.bvh_capsule(*tree.arrays(), p, q, r) for p, q, r in caps]) / len(caps)
    out["point_segments"] = _best(lambda: mod.point_segments_min_dist(pts, seg_a, seg_b))
    return out


def plan_seconds(pure: bool, level: float) -> float:
    env = dict(os.environ, GRASPFORGE_PURE="1" if pure else "0")
    code = ("import time;from graspforge import gripper,shapes;from graspforge.planners import PlannerParams,"
            "plan_two_finger;from graspforge.stability import PhysicalParams;"
            f"m=shapes.sphere_with_handle({level});p=PlannerParams(phys=PhysicalParams(mass=0.2));"
            "t=time.perf_counter();plan_two_finger(m,p,gripper.bundled('two_finger'));"
            "print(time.perf_counter()-t)")
    res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(res.stdout.strip())


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--level", type=float, default=1.0)
    ap.add_argument("--poses", type=int, default=300)
    args = ap.parse_args(argv)

    cy = kernels.compiled()
    if cy is None:
        print("compiled kernels are not built; only the numpy backend is available")
    mesh = shapes.sphere_with_handle(args.level)
    model = gripper.bundled("two_finger")
    hand = Bvh.build(model.hand_corners(40.0) @ model.tool_from_canonical.T)
    rng = np.random.default_rng(0)
    poses = []
    for _ in range(args.poses):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        w, x, y, z = q
        pose = np.eye(4)
        pose[:3, :3] = [[1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
                        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
                        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)]]
        pose[:3, 3] = rng.uniform(-60, 60, 3)
        poses.append(pose)
    caps = [(rng.uniform(-60, 60, 3), rng.uniform(-60, 60, 3), float(rng.uniform(0, 15))) for _ in range(args.poses)]
    pts = rng.uniform(-40, 40, (2000, 3))
    seg_a, seg_b = rng.uniform(-40, 40, (60, 3)), rng.uniform(-40, 40, (60, 3))

    print(f"mesh: {mesh.n_faces} triangles, {args.poses} queries per kernel")
    rows = {"numpy": bench_backend(_kernels_py, mesh, hand, poses, caps, pts, seg_a, seg_b)}
    if cy is not None:
        rows["cython"] = bench_backend(cy, mesh, hand, poses, caps, pts, seg_a, seg_b)
    names = list(rows["numpy"])
    print(f"{'kernel':<16}" + "".join(f"{b:>14}" for b in rows) + ("   speedup" if cy else ""))
    for k in names:
        line = f"{k:<16}" + "".join(f"{rows[b][k] * 1e3:>11.3f} ms" for b in rows)
        if cy is not None:
            line += f"   {rows['numpy'][k] / rows['cython'][k]:6.1f}x"
        print(line)

    print("full two-finger plan:")
    print(f"  numpy   {plan_seconds(True, args.level):8.3f} s")
    if cy is not None:
        print(f"  cython  {plan_seconds(False, args.level):8.3f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
