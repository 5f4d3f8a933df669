"""Deterministic kinematic world: free-flying end-effector, proximity grasping,
perturbation injection, seeded scene randomization and scripted demonstration
synthesis.

There are no dynamics: the end-effector teleports to its commanded target each
step (clamped to the workspace box), the gripper slews at a fixed rate, and a
grasped object is rigidly carried.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .demo import DemoSample, Demonstration
from .errors import ValidationError
from .geometry import Pose7, pose_distance, quat_slerp

GRIPPER_SLEW_RATE = 5.0  # fraction of full travel per second
GRASP_RADIUS = 0.05  # m, matches the grounding threshold
GRIPPER_CLOSED_AT = 0.5

DEFAULT_BOUNDS = np.array([[-0.1, -0.5, 0.0], [1.0, 0.5, 0.7]])
# 0.8 m x 0.4 m table patch used by the randomized trial protocol
DEFAULT_TRIAL_AREA = (0.05, -0.20, 0.85, 0.20)


@dataclass(frozen=True)
class WorldState:
    """Immutable snapshot of the simulated scene."""

    objects: dict[str, Pose7]
    ee: Pose7
    gripper: float
    bounds: np.ndarray = field(default_factory=lambda: DEFAULT_BOUNDS.copy())
    time: float = 0.0
    attachment: tuple[str, Pose7] | None = None  # (object id, ee-frame grasp transform)
    prev_gripper: float | None = None

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.shape != (2, 3):
            raise ValidationError(f"bounds must be (2, 3) min/max, got {b.shape}")
        object.__setattr__(self, "bounds", b)
        if self.prev_gripper is None:
            object.__setattr__(self, "prev_gripper", self.gripper)
        lo, hi = b
        if np.any(self.ee.p < lo - 1e-9) or np.any(self.ee.p > hi + 1e-9):
            raise ValidationError(f"ee position {self.ee.p} outside bounds")
        if self.attachment is not None:
            obj_id, grasp = self.attachment
            expected = self.ee.compose(grasp)
            if pose_distance(expected, self.objects[obj_id]) > 1e-9:
                raise ValidationError("attachment constraint violated in snapshot")

    def object_pose(self, obj_id: str) -> Pose7:
        try:
            return self.objects[obj_id]
        except KeyError:
            raise ValidationError(f"unknown object id {obj_id!r}") from None

    def attached_object(self) -> str | None:
        return self.attachment[0] if self.attachment else None

    def nearest_object(self, point: np.ndarray, exclude: Iterable[str] = ()) -> str | None:
        skip = set(exclude)
        best, best_d = None, np.inf
        for obj_id in sorted(self.objects):
            if obj_id in skip:
                continue
            d = float(np.linalg.norm(self.objects[obj_id].p - np.asarray(point)))
            if d < best_d:
                best, best_d = obj_id, d
        return best


def _clamp_position(p: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    return np.clip(p, bounds[0], bounds[1])


def step(world: WorldState, ee_target: Pose7, gripper_target: float, dt: float) -> WorldState:
    """Advance one step: move ee to target (clamped), slew gripper, carry attachment."""
    if dt <= 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    ee = Pose7(_clamp_position(ee_target.p, world.bounds), ee_target.q)
    delta = np.clip(gripper_target - world.gripper, -GRIPPER_SLEW_RATE * dt, GRIPPER_SLEW_RATE * dt)
    gripper = float(np.clip(world.gripper + delta, 0.0, 1.0))
    objects = dict(world.objects)
    if world.attachment is not None:
        obj_id, grasp = world.attachment
        objects[obj_id] = ee.compose(grasp)
    return WorldState(
        objects=objects,
        ee=ee,
        gripper=gripper,
        bounds=world.bounds,
        time=world.time + dt,
        attachment=world.attachment,
        prev_gripper=world.gripper,
    )


def try_grasp(world: WorldState) -> WorldState:
    """Apply attachment semantics after a step.

    An upward crossing of the closure threshold attaches the nearest object
    within GRASP_RADIUS (if any); a downward crossing detaches.
    """
    crossed_up = world.prev_gripper < GRIPPER_CLOSED_AT <= world.gripper
    crossed_down = world.prev_gripper >= GRIPPER_CLOSED_AT > world.gripper
    if crossed_up and world.attachment is None:
        nearest = world.nearest_object(world.ee.p)
        if nearest is not None and pose_distance(world.objects[nearest], world.ee) <= GRASP_RADIUS:
            grasp = world.ee.inverse().compose(world.objects[nearest])
            return replace(world, attachment=(nearest, grasp))
        return world
    if crossed_down and world.attachment is not None:
        return replace(world, attachment=None)
    return world


def perturb(world: WorldState, obj_id: str, pose: Pose7) -> WorldState:
    """Teleport an object. Perturbing a grasped object is an error."""
    world.object_pose(obj_id)
    if world.attached_object() == obj_id:
        raise ValidationError(f"object grasped: cannot perturb {obj_id!r}")
    objects = dict(world.objects)
    objects[obj_id] = pose
    return replace(world, objects=objects)


def randomize_scene(
    template: WorldState,
    area: tuple[float, float, float, float] = DEFAULT_TRIAL_AREA,
    seed: int = 0,
    groups: Sequence[Sequence[str]] | None = None,
    min_separation: float = 0.10,
    max_draws: int = 1000,
) -> WorldState:
    """Draw new object positions uniformly in an (xmin, ymin, xmax, ymax) area.

    Objects listed together in a group keep their relative arrangement and are
    moved by a common offset (e.g. a drawer handle and its base). Placement
    must satisfy the pairwise separation; exceeding max_draws raises.
    """
    xmin, ymin, xmax, ymax = area
    lo, hi = template.bounds
    if xmin < lo[0] or ymin < lo[1] or xmax > hi[0] or ymax > hi[1]:
        raise ValidationError(f"area {area} outside workspace bounds")
    grouped: list[list[str]] = [list(g) for g in (groups or [])]
    in_group = {obj for g in grouped for obj in g}
    for obj_id in sorted(template.objects):
        if obj_id not in in_group:
            grouped.append([obj_id])
    for g in grouped:
        for obj_id in g:
            template.object_pose(obj_id)

    rng = np.random.default_rng(seed)
    draws = 0
    placed: dict[str, Pose7] = {}
    for members in grouped:
        anchor_old = template.objects[members[0]].p
        while True:
            if draws >= max_draws:
                raise ValidationError(
                    f"cannot satisfy {min_separation} m separation after {max_draws} draws"
                )
            draws += 1
            x = rng.uniform(xmin, xmax)
            y = rng.uniform(ymin, ymax)
            offset = np.array([x - anchor_old[0], y - anchor_old[1], 0.0])
            candidate = {
                m: Pose7(template.objects[m].p + offset, template.objects[m].q) for m in members
            }
            ok = all(
                pose_distance(c, other) >= min_separation
                for c in candidate.values()
                for other in placed.values()
            )
            if ok:
                placed.update(candidate)
                break
    objects = dict(template.objects)
    objects.update(placed)
    return replace(template, objects=objects, attachment=None, time=0.0)


# --- scripted demonstration synthesis -------------------------------------


@dataclass(frozen=True)
class MotionLeg:
    """One continuous end-effector motion: minimum-jerk in position, slerp in
    orientation, from wherever the previous leg ended to the given target."""

    t_start: float
    t_end: float
    position: Sequence[float]
    quat: Sequence[float] | None = None

    def __post_init__(self):
        if self.t_end <= self.t_start:
            raise ValidationError(f"leg must end after it starts ({self.t_start}..{self.t_end})")


@dataclass(frozen=True)
class GripEvent:
    """Gripper closure target commanded at time t (the gripper then slews)."""

    t: float
    target: float


def min_jerk(s):
    """Minimum-jerk position profile on normalized time s in [0, 1]."""
    s = np.asarray(s, dtype=float)
    return 10.0 * s**3 - 15.0 * s**4 + 6.0 * s**5


def synth_demo(
    world: WorldState,
    legs: Sequence[MotionLeg],
    grips: Sequence[GripEvent] = (),
    t_end: float | None = None,
    rate_hz: float = 100.0,
    meta: dict | None = None,
) -> tuple[Demonstration, WorldState]:
    """Drive the simulator through a motion/gripper schedule, recording at rate_hz.

    Motion legs must not overlap; the end-effector holds its pose between
    legs. Gripper events are independent of the legs. Object poses follow the
    grasp-attachment rules. Returns the recording and the final world state.
    """
    legs = sorted(legs, key=lambda l: l.t_start)
    if not legs:
        raise ValidationError("schedule needs at least one motion leg")
    for a, b in zip(legs, legs[1:]):
        if b.t_start < a.t_end:
            raise ValidationError(
                f"infeasible schedule timing: leg at {b.t_start} overlaps leg ending {a.t_end}"
            )
    lo, hi = world.bounds
    for leg in legs:
        p = np.asarray(leg.position, dtype=float)
        if np.any(p < lo) or np.any(p > hi):
            raise ValidationError(f"leg target {p} outside workspace bounds")
    grips = sorted(grips, key=lambda g: g.t)
    horizon = t_end if t_end is not None else legs[-1].t_end
    if horizon < legs[-1].t_end:
        raise ValidationError("t_end earlier than the last motion leg")

    # precompute per-leg start poses by chaining targets
    starts = []
    pose = world.ee
    for leg in legs:
        starts.append(pose)
        pose = Pose7(leg.position, leg.quat if leg.quat is not None else pose.q)

    dt = 1.0 / rate_hz
    n = int(round(horizon * rate_hz)) + 1
    samples = []
    grip_target = world.gripper
    gi = 0
    for k in range(n):
        t = k * dt
        while gi < len(grips) and grips[gi].t <= t:
            grip_target = float(grips[gi].target)
            gi += 1
        target = world.ee
        for leg, start in zip(legs, starts):
            if t >= leg.t_end:
                target = Pose7(leg.position, leg.quat if leg.quat is not None else start.q)
            elif t >= leg.t_start:
                s = (t - leg.t_start) / (leg.t_end - leg.t_start)
                alpha = float(min_jerk(s))
                end_q = leg.quat if leg.quat is not None else start.q
                target = Pose7(
                    start.p + alpha * (np.asarray(leg.position, float) - start.p),
                    quat_slerp(start.q, end_q, alpha),
                )
                break
            else:
                break
        if k > 0:
            world = try_grasp(step(world, target, grip_target, dt))
        else:
            world = replace(world, ee=target, time=0.0)
        samples.append(
            DemoSample(
                t=round(t, 9),
                ee=world.ee.canonical(),
                gripper=world.gripper,
                objects={key: v.canonical() for key, v in world.objects.items()},
            )
        )
    demo = Demonstration(samples, sample_rate_hz=rate_hz, meta=meta or {})
    return demo, world


# --- perturbation scripts ---------------------------------------------------


@dataclass(frozen=True)
class Perturbation:
    """One scripted teleport.

    Triggered either at an absolute tick, or a number of ticks after a given
    action index first starts its nth execution (when_action / after_starts).
    """

    obj_id: str
    pose: Pose7
    tick: int | None = None
    when_action: int | None = None
    after_starts: int = 1
    offset_ticks: int = 0

    def __post_init__(self):
        if (self.tick is None) == (self.when_action is None):
            raise ValidationError("perturbation needs exactly one of tick / when_action")


class PerturbationScript:
    """Ordered set of scripted perturbations drained by the execution session."""

    def __init__(self, entries: Sequence[Perturbation]):
        self.entries = list(entries)
        ticks = [e.tick for e in self.entries if e.tick is not None]
        if any(t1 < t0 for t0, t1 in zip(ticks, ticks[1:])):
            raise ValidationError("tick triggers must be non-decreasing")
        self._armed: list[tuple[Perturbation, int | None]] = [
            (e, e.tick) for e in self.entries
        ]

    def due(self, tick: int, action_start_ticks: dict[int, list[int]]) -> list[Perturbation]:
        """Entries whose trigger has fired at this tick; each fires once."""
        fired, rest = [], []
        for entry, at_tick in self._armed:
            trigger = at_tick
            if trigger is None and entry.when_action is not None:
                starts = action_start_ticks.get(entry.when_action, [])
                if len(starts) >= entry.after_starts:
                    trigger = starts[entry.after_starts - 1] + entry.offset_ticks
            if trigger is not None and tick >= trigger:
                fired.append(entry)
            else:
                rest.append((entry, at_tick))
        self._armed = rest
        return fired

    @classmethod
    def from_json(cls, data) -> "PerturbationScript":
        entries = []
        for rec in data["entries"]:
            entries.append(
                Perturbation(
                    obj_id=rec["object"],
                    pose=Pose7.from_list(rec["pose"]),
                    tick=rec.get("tick"),
                    when_action=rec.get("when_action"),
                    after_starts=rec.get("after_starts", 1),
                    offset_ticks=rec.get("offset_ticks", 0),
                )
            )
        return cls(entries)

    @classmethod
    def load(cls, path) -> "PerturbationScript":
        return cls.from_json(json.loads(Path(path).read_text()))


# --- scene files --------------------------------------------------------------


def scene_to_json(world: WorldState) -> dict:
    return {
        "objects": {k: v.to_list() for k, v in sorted(world.objects.items())},
        "ee": world.ee.to_list(),
        "gripper": world.gripper,
        "bounds": [list(map(float, world.bounds[0])), list(map(float, world.bounds[1]))],
    }


def scene_from_json(data: dict) -> WorldState:
    try:
        return WorldState(
            objects={k: Pose7.from_list(v) for k, v in data["objects"].items()},
            ee=Pose7.from_list(data["ee"]),
            gripper=float(data["gripper"]),
            bounds=np.array(data["bounds"], dtype=float),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad scene file: {exc}") from exc


def save_scene(world: WorldState, path) -> None:
    Path(path).write_text(json.dumps(scene_to_json(world), indent=2) + "\n")


def load_scene(path) -> WorldState:
    return scene_from_json(json.loads(Path(path).read_text()))
