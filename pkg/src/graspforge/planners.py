"""Suction, two-finger and three-finger grasp planners.

All three share the front end (segment, sample, refine). The finger planners
then pair contacts on opposing facets by ray casting and filter every
(pair, roll) candidate through stroke, hand-collision and stability checks.
"""
from __future__ import annotations

import logging
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .collision import Bvh, bvh_of
from .gripper import GripperModel, OutOfStroke, pad_centers, pose_at_contact, pose_at_pair, stroke_segments_world
from .mesh import TriangleMesh, ray_triangle_params, RAY_EPS
from .sampling import ContactPoint, ContactSet, DEFAULT_DENSITY, prepare_contacts
from .segmentation import segment
from .stability import DomainError, PhysicalParams, StabilityReport, check_stability, curvature_radius

log = logging.getLogger(__name__)

REASONS = ("StrokeCollision", "HandCollision", "OutOfStroke", "PadGap", "Unstable")
STAGES = ("segmentation", "sampling", "remove_bad_1", "remove_bad_2", "pair_planning",
          "bvh_build", "stroke_check", "hand_check", "stability")
GAP_TOL = 1e-6  # mm slack on the pad-gap rule so touching pads (gap ~ 1e-15) pass t_dct = 0


@dataclass(frozen=True)
class PlannerParams:
    phys: PhysicalParams
    theta_pln: float = math.radians(20.0)
    theta_fct: float = math.radians(20.0)
    theta_parl: float = math.radians(160.0)
    t_bdry: float = 2.0
    t_rnn: float = 3.0
    t_dct: float = 3.0
    n_da: int = 8
    density: float = DEFAULT_DENSITY
    rng_seed: int = 0
    seed_scan: str = "reachable"
    curvature_mode: str = "max"

    def __post_init__(self):
        for name in ("theta_pln", "theta_fct", "theta_parl"):
            if not 0 <= getattr(self, name) <= math.pi:
                raise ValueError(f"{name} must lie in [0, pi] radians")
        for name in ("t_bdry", "t_rnn", "t_dct"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if int(self.n_da) != self.n_da or self.n_da < 1:
            raise ValueError("n_da must be a positive integer")
        if self.density <= 0:
            raise ValueError("density must be positive")

    @property
    def h_max(self) -> float:
        return self.phys.h_max


@dataclass(frozen=True, eq=False)
class ContactPair:
    contact_a: ContactPoint
    contact_b: ContactPoint
    facet_a: int
    facet_b: int
    axis: np.ndarray
    distance: float


@dataclass(frozen=True, eq=False)
class Grasp:
    rotation: np.ndarray
    translation: np.ndarray
    jaw_width: float
    contacts: tuple
    rotation_index: int
    stability: Optional[StabilityReport]
    reason: str = ""
    item: int = -1  # index of the pair (or contact, for suction) this grasp came from

    @property
    def pose(self) -> np.ndarray:
        p = np.eye(4)
        p[:3, :3] = self.rotation
        p[:3, 3] = self.translation
        return p

    @property
    def accepted(self) -> bool:
        return not self.reason


class Timings:
    """Accumulated wall-clock seconds per named stage.

    Hand posing is charged to the first check that needs the pose: the hand
    check for suction and two-finger, the stroke check for three-finger.
    """

    def __init__(self):
        self.seconds = {}

    @contextmanager
    def __call__(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.seconds[name] = self.seconds.get(name, 0.0) + time.perf_counter() - t0

    def merge(self, other: dict) -> None:
        for k, v in other.items():
            self.seconds[k] = self.seconds.get(k, 0.0) + v

    def rows(self) -> list:
        """``(stage, seconds)`` in pipeline order, zero-filled."""
        extra = [k for k in self.seconds if k not in STAGES]
        return [(k, self.seconds.get(k, 0.0)) for k in list(STAGES) + extra]


@dataclass
class PlanReport:
    keep_rejected: bool = False
    counters: Counter = field(default_factory=Counter)
    timings: Timings = field(default_factory=Timings)
    rejected: list = field(default_factory=list)
    facets: list = field(default_factory=list)
    contacts: Optional[ContactSet] = None
    pairs: list = field(default_factory=list)


# ------------------------------------------------------------ front end

def prepare(mesh: TriangleMesh, params: PlannerParams, report: Optional[PlanReport] = None):
    """Segment, sample and refine; fills facet curvature radii. Returns ``(facets, ContactSet)``."""
    report = report if report is not None else PlanReport()
    timer = report.timings
    with timer("segmentation"):
        facets = segment(mesh, params.theta_pln, params.theta_fct, params.seed_scan)
        for f in facets:
            f.curvature_radius = curvature_radius(f, mesh, mode=params.curvature_mode)
    contacts = prepare_contacts(mesh, facets, params.density, params.rng_seed, params.t_bdry,
                                params.t_rnn, timer=timer)
    report.facets = facets
    report.contacts = contacts
    report.counters.update(facets=len(facets), **{f"samples_{k}": v for k, v in contacts.counts().items()})
    return facets, contacts


def find_parallel_pairs(mesh: TriangleMesh, facets, contacts_per_facet, theta_parl: float,
                        opening_range=(0.0, math.inf)) -> list:
    """Pair contacts on facets whose average normals are at least ``theta_parl`` apart.

    For each facet pair ``i < j`` a ray leaves every contact of facet ``i``
    along its inverted normal; the nearest hit on facet ``j`` becomes the
    partner contact. Pairs whose length falls outside ``opening_range`` are
    dropped. Output is ordered by ``(i, j, contact index)``.
    """
    lo, hi = opening_range
    normals = np.array([f.avg_normal for f in facets]).reshape(-1, 3)
    cos_lim = math.cos(theta_parl)
    corners = mesh.corners
    spheres = []
    for f in facets:
        pts = corners[np.asarray(f.members)].reshape(-1, 3)
        centre = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
        spheres.append((centre, float(np.sqrt(((pts - centre) ** 2).sum(axis=1).max())) + 1e-6))
    pairs = []
    for i, fi in enumerate(facets):
        pts = contacts_per_facet[i]
        if not pts:
            continue
        # angle >= theta_parl  <=>  cos(angle) <= cos(theta_parl); 1e-12 absorbs rounding
        partners = np.flatnonzero(normals @ normals[i] <= cos_lim + 1e-12)
        partners = partners[partners > i]
        if not len(partners):
            continue
        origins = np.array([c.position for c in pts])
        d = -fi.avg_normal
        for j in partners.tolist():
            # cull rays that miss the partner's bounding sphere
            centre, radius = spheres[j]
            rel = origins - centre
            along = rel @ d
            off2 = np.einsum("ij,ij->i", rel, rel) - along * along
            live = np.flatnonzero(off2 <= radius * radius)
            if not len(live):
                continue
            members = np.asarray(facets[j].members)
            t = np.full((len(pts), len(members)), np.nan)
            t[live] = ray_triangle_params(origins[live], np.broadcast_to(d, (len(live), 3)), corners[members])
            t = np.where(t > RAY_EPS, t, np.inf)
            k = np.argmin(t, axis=1)
            dist = t[np.arange(len(pts)), k]
            for ci in np.flatnonzero(np.isfinite(dist) & (dist >= lo) & (dist <= hi)).tolist():
                a = pts[ci]
                hit = a.position + dist[ci] * d
                b = ContactPoint(hit, facets[j].avg_normal, j, int(members[k[ci]]))
                pairs.append(ContactPair(a, b, i, j, d.copy(), float(dist[ci])))
    return pairs


# ----------------------------------------------------------- evaluation

def _grasp(pose, width, contacts, k, report, reason, item):
    return Grasp(pose[:3, :3].copy(), pose[:3, 3].copy(), float(width), tuple(contacts), int(k),
                 report, reason, item)


def _stability(center, mesh, radius, phys) -> Optional[StabilityReport]:
    try:
        return check_stability(center, mesh.com, radius, phys)
    except DomainError:
        return None


class _Context:
    """Per-process evaluation state: object tree plus cached hand trees."""

    def __init__(self, mesh, model, params, keep_rejected):
        self.mesh = mesh
        self.model = model
        self.params = params
        self.keep = keep_rejected
        self.obj = bvh_of(mesh).arrays()
        self.counters = Counter()
        self.timer = Timings()
        self.rejected = []
        self._hands = {}

    def hand(self, width: float) -> Bvh:
        tree = self._hands.get(width)
        if tree is None:
            tree = Bvh.build(self.model.hand_corners(width))
            if len(self._hands) > 4096:
                self._hands.clear()
            self._hands[width] = tree
        return tree

    def reject(self, grasp):
        self.counters[grasp.reason] += 1
        if self.keep:
            self.rejected.append(grasp)

    def hand_collides(self, width, pose) -> bool:
        self.counters["hand_checks"] += 1
        with self.timer("hand_check"):
            posed = self.hand(width).posed(pose)
            return bool(kernels.bvh_collide(*posed.arrays(), *self.obj))

    def capsules_hit(self, segs) -> bool:
        r = self.model.stroke_radius
        with self.timer("stroke_check"):
            for p, q in segs:
                self.counters["stroke_checks"] += 1
                if kernels.bvh_capsule(*self.obj, p, q, r):
                    return True
        return False

    def pair_stability(self, pair, facets_r):
        self.counters["stability_checks"] += 1
        with self.timer("stability"):
            R = min(facets_r[pair.facet_a], facets_r[pair.facet_b])
            mid = 0.5 * (pair.contact_a.position + pair.contact_b.position)
            return _stability(mid, self.mesh, R, self.params.phys)

    def pad_touches(self, point, direction) -> bool:
        """True iff the closing-axis line through ``point`` meets the surface within t_dct.

        A zero-radius capsule query on the segment ``point +- t_dct * direction``.
        """
        reach = (self.params.t_dct + GAP_TOL) * np.asarray(direction, float)
        return bool(kernels.bvh_capsule(*self.obj, point - reach, point + reach, 0.0))


def _evaluate_two_finger(ctx: _Context, pair: ContactPair, item: int, facets_r) -> list:
    model, n_da = ctx.model, ctx.params.n_da
    out = []
    try:
        pose0, width = pose_at_pair(model, pair.contact_a.position, pair.contact_b.position, 0, n_da)
    except OutOfStroke:
        ctx.counters["OutOfStroke"] += n_da
        return out
    contacts = (pair.contact_a, pair.contact_b)
    # stroke capsules lie on the pair axis, so one check covers every roll
    if ctx.capsules_hit(stroke_segments_world(model, pose0, width)):
        ctx.counters["StrokeCollision"] += n_da
        if ctx.keep:
            for k in range(n_da):
                pose, _ = pose_at_pair(model, pair.contact_a.position, pair.contact_b.position, k, n_da)
                ctx.rejected.append(_grasp(pose, width, contacts, k, None, "StrokeCollision", item))
        return out
    stab = None
    for k in range(n_da):
        with ctx.timer("hand_check"):
            pose = pose0 if k == 0 else pose_at_pair(model, pair.contact_a.position, pair.contact_b.position, k, n_da)[0]
        if ctx.hand_collides(width, pose):
            ctx.reject(_grasp(pose, width, contacts, k, None, "HandCollision", item))
            continue
        if stab is None:
            stab = ctx.pair_stability(pair, facets_r) or False
        if not stab or not stab.stable:
            ctx.reject(_grasp(pose, width, contacts, k, stab or None, "Unstable", item))
            continue
        out.append(_grasp(pose, width, contacts, k, stab, "", item))
    return out


def _evaluate_three_finger(ctx: _Context, pair: ContactPair, item: int, facets_r) -> list:
    model, n_da = ctx.model, ctx.params.n_da
    out = []
    contacts = (pair.contact_a, pair.contact_b)
    stab = None
    for k in range(n_da):
        try:
            with ctx.timer("stroke_check"):
                pose, width = pose_at_pair(model, pair.contact_a.position, pair.contact_b.position, k, n_da)
        except OutOfStroke:
            ctx.counters["OutOfStroke"] += n_da
            return out
        # f2/f3 travel depends on the roll, so the stroke check runs per roll
        if ctx.capsules_hit(stroke_segments_world(model, pose, width)):
            ctx.reject(_grasp(pose, width, contacts, k, None, "StrokeCollision", item))
            continue
        ctx.counters["pad_checks"] += 1
        pads = pad_centers(model, pose, width)
        with ctx.timer("pad_gap"):
            touching = all(ctx.pad_touches(p, pair.axis) for p in pads[1:])
        if not touching:
            ctx.reject(_grasp(pose, width, contacts, k, None, "PadGap", item))
            continue
        if ctx.hand_collides(width, pose):
            ctx.reject(_grasp(pose, width, contacts, k, None, "HandCollision", item))
            continue
        if stab is None:
            stab = ctx.pair_stability(pair, facets_r) or False
        if not stab or not stab.stable:
            ctx.reject(_grasp(pose, width, contacts, k, stab or None, "Unstable", item))
            continue
        out.append(_grasp(pose, width, contacts, k, stab, "", item))
    return out


def _evaluate_suction(ctx: _Context, contact: ContactPoint, item: int, facets_r) -> list:
    n_da = ctx.params.n_da
    out = []
    stab = None
    for k in range(n_da):
        with ctx.timer("hand_check"):
            pose = pose_at_contact(ctx.model, contact, k, n_da)
        if ctx.hand_collides(0.0, pose):
            ctx.reject(_grasp(pose, 0.0, (contact,), k, None, "HandCollision", item))
            continue
        if stab is None:
            ctx.counters["stability_checks"] += 1
            with ctx.timer("stability"):
                stab = _stability(contact.position, ctx.mesh, facets_r[contact.facet_id], ctx.params.phys) or False
        if not stab or not stab.stable:
            ctx.reject(_grasp(pose, 0.0, (contact,), k, stab or None, "Unstable", item))
            continue
        out.append(_grasp(pose, 0.0, (contact,), k, stab, "", item))
    return out


_EVALUATORS = {"suction": _evaluate_suction, "two_finger": _evaluate_two_finger,
               "three_finger": _evaluate_three_finger}


def _run_chunk(args):
    mesh, model, params, keep, items, start, facets_r = args
    ctx = _Context(mesh, model, params, keep)
    fn = _EVALUATORS[model.kind]
    grasps = []
    for off, it in enumerate(items):
        grasps += fn(ctx, it, start + off, facets_r)
    return grasps, ctx.rejected, ctx.counters, ctx.timer.seconds


def evaluate(mesh: TriangleMesh, model: GripperModel, params: PlannerParams, items: list, facets_r,
             report: PlanReport, jobs: int = 1) -> list:
    """Run the per-candidate checks over ``items`` (pairs, or contacts for suction).

    Results are merged in (item, roll) order whatever ``jobs`` is.
    """
    with report.timings("bvh_build"):
        bvh_of(mesh)  # build before pickling so workers don't each rebuild it
    jobs = max(1, int(jobs))
    if jobs == 1 or len(items) < 2 * jobs:
        chunks = [_run_chunk((mesh, model, params, report.keep_rejected, items, 0, facets_r))]
    else:
        size = math.ceil(len(items) / (4 * jobs))
        work = [(mesh, model, params, report.keep_rejected, items[s:s + size], s, facets_r)
                for s in range(0, len(items), size)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_chunk, work))
    grasps = []
    for g, rej, counters, secs in chunks:
        grasps += g
        report.rejected += rej
        report.counters.update(counters)
        report.timings.merge(secs)
    report.counters["accepted"] += len(grasps)
    return grasps


# -------------------------------------------------------------- planners

def _check_kind(model: GripperModel, kind: str):
    if model.kind != kind:
        raise ValueError(f"{kind} planner needs a {kind} gripper, got {model.kind}")


def plan_suction(mesh: TriangleMesh, params: PlannerParams, model: GripperModel,
                 report: Optional[PlanReport] = None, jobs: int = 1) -> list:
    _check_kind(model, "suction")
    report = report if report is not None else PlanReport()
    facets, contacts = prepare(mesh, params, report)
    items = [c for pts in contacts.refined for c in pts]
    report.counters["candidates"] = len(items)
    radii = [f.curvature_radius for f in facets]
    return evaluate(mesh, model, params, items, radii, report, jobs)


def _plan_fingers(kind, mesh, params, model, report, jobs, pairs):
    _check_kind(model, kind)
    report = report if report is not None else PlanReport()
    facets, contacts = prepare(mesh, params, report)
    if pairs is None:
        with report.timings("pair_planning"):
            pairs = find_parallel_pairs(mesh, facets, contacts.refined, params.theta_parl, model.opening_range)
    report.pairs = pairs
    report.counters["pairs"] = len(pairs)
    radii = [f.curvature_radius for f in facets]
    grasps = evaluate(mesh, model, params, pairs, radii, report, jobs)
    log.info("%s: %d pairs, %d grasps", kind, len(pairs), len(grasps))
    return grasps


def plan_two_finger(mesh: TriangleMesh, params: PlannerParams, model: GripperModel,
                    report: Optional[PlanReport] = None, jobs: int = 1, pairs=None) -> list:
    """Pairs, then per pair one stroke check, then per roll hand collision and stability."""
    return _plan_fingers("two_finger", mesh, params, model, report, jobs, pairs)


def plan_three_finger(mesh: TriangleMesh, params: PlannerParams, model: GripperModel,
                      report: Optional[PlanReport] = None, jobs: int = 1, pairs=None) -> list:
    """Pairs, then per roll: three stroke capsules, pad-gap rule, hand collision, stability."""
    return _plan_fingers("three_finger", mesh, params, model, report, jobs, pairs)


PLANNERS = {"suction": plan_suction, "two_finger": plan_two_finger, "three_finger": plan_three_finger}


def evaluate_pairs(mesh: TriangleMesh, params: PlannerParams, model: GripperModel, pairs: list,
                   radii, report: Optional[PlanReport] = None) -> list:
    """Run the finger checks on hand-made pairs (``radii`` indexed by facet id)."""
    report = report if report is not None else PlanReport()
    return evaluate(mesh, model, params, pairs, radii, report)
