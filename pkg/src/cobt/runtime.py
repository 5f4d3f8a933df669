"""Behavior tree execution against the simulated world.

Standard reactive tick semantics: every tick re-evaluates the tree from the
root, so a perturbation that breaks an already-achieved condition re-triggers
exactly the action that re-establishes it. Action leaves consume one
trajectory step per tick; when a finished trajectory's effect conditions do
not hold the leaf fails and re-enters later with a fresh start and a goal
recomposed from the live object poses.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .bt import BTNode, Condition, NodeKind, Variable
from .dmp import Rollout, rollout, select_direction
from .errors import BudgetExhaustedError, ExecutionError, ValidationError
from .geometry import Pose7, pose_distance
from .primitives import PrimitiveAction
from .sim import PerturbationScript, WorldState, perturb, step, try_grasp

DEFAULT_TICK_RATE = 100.0
DEFAULT_MAX_TICKS = 60_000
DEFAULT_TIME_SCALE = 2.0  # executions run at half the demonstrated speed


class TickStatus(str, Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"
    RUNNING = "Running"


def eval_condition(cond: Condition, world: WorldState) -> TickStatus:
    """Instantaneous predicate over the world; never Running."""
    if cond.variable is Variable.GRIPPER:
        closed = world.gripper >= 0.5
        ok = closed == (cond.expected == "Closed")
        return TickStatus.SUCCESS if ok else TickStatus.FAILURE

    subject = world.object_pose(cond.subject)
    if cond.variable is Variable.END_EFFECTOR:
        near = pose_distance(world.ee, subject) < cond.threshold
        ok = near == (cond.expected == "Near")
        return TickStatus.SUCCESS if ok else TickStatus.FAILURE

    # Object state
    on_goal = False
    if cond.anchor is not None and cond.goal_pose is not None:
        expected_pose = world.object_pose(cond.anchor).compose(cond.goal_pose)
        on_goal = pose_distance(subject, expected_pose) < cond.threshold
    others = [
        pose_distance(subject, p)
        for obj_id, p in world.objects.items()
        if obj_id != cond.subject
    ]
    near_other = bool(others) and min(others) < cond.threshold
    if cond.expected == "OnGoal":
        ok = on_goal
    elif cond.expected == "Near":
        ok = near_other
    else:  # "None"
        ok = not on_goal and not near_other
    return TickStatus.SUCCESS if ok else TickStatus.FAILURE


@dataclass
class TickRecord:
    tick: int
    statuses: dict[str, str]  # node id -> status, for nodes visited this tick
    active_action: int | None
    world_digest: str
    events: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "tick": self.tick,
            "statuses": self.statuses,
            "active_action": self.active_action,
            "world_digest": self.world_digest,
            "events": self.events,
        }


@dataclass
class ExecutionTrace:
    records: list[TickRecord] = field(default_factory=list)
    success: bool = False
    ticks: int = 0
    action_executions: dict[int, int] = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "summary": True,
            "success": self.success,
            "ticks": self.ticks,
            "action_executions": {str(k): v for k, v in sorted(self.action_executions.items())},
        }

    def save_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec.to_json()) + "\n")
            fh.write(json.dumps(self.summary()) + "\n")

    def retried_actions(self) -> list[int]:
        return sorted(k for k, v in self.action_executions.items() if v > 1)


@dataclass
class _ActiveRollout:
    leaf_id: str
    action_index: int
    trajectory: Rollout
    cursor: int = 0
    settle_ticks: int = 0


def _world_digest(world: WorldState) -> str:
    h = hashlib.sha1()
    h.update(np.round(world.ee.p, 6).tobytes())
    h.update(np.round(world.ee.q, 6).tobytes())
    h.update(np.float64(round(world.gripper, 6)).tobytes())
    for obj_id in sorted(world.objects):
        h.update(obj_id.encode())
        h.update(np.round(world.objects[obj_id].p, 6).tobytes())
        h.update(np.round(world.objects[obj_id].q, 6).tobytes())
    return h.hexdigest()[:16]


class ExecutionSession:
    """Owns one world and ticks one compiled tree over it."""

    def __init__(
        self,
        tree: BTNode,
        actions: list[PrimitiveAction],
        world: WorldState,
        tick_rate_hz: float = DEFAULT_TICK_RATE,
        max_ticks: int = DEFAULT_MAX_TICKS,
        time_scale: float = DEFAULT_TIME_SCALE,
        fix_reverse_transform: bool = False,
        retry_status: str = "failure",
        perturbations: PerturbationScript | None = None,
    ):
        if retry_status not in ("failure", "running"):
            raise ValidationError(f"unknown retry status {retry_status!r}")
        self.tree = tree
        self.actions = {a.index: a for a in actions}
        self.world = world
        self.tick_rate_hz = tick_rate_hz
        self.dt = 1.0 / tick_rate_hz
        self.max_ticks = max_ticks
        self.time_scale = time_scale
        self.fix_reverse_transform = fix_reverse_transform
        self.retry_status = retry_status
        self.perturbations = perturbations
        self.trace = ExecutionTrace()
        self.active: _ActiveRollout | None = None
        self.tick_count = 0
        self.ee_path: list[tuple[float, float, float]] = []
        self.action_start_ticks: dict[int, list[int]] = {}
        self._inbox: deque = deque()
        self._effects = self._collect_effect_conditions(tree)
        self._events: list[str] = []
        self._statuses: dict[str, str] = {}
        self._memory_cursors: dict[str, int] = {}
        # full gripper travel at the simulator slew rate, plus margin
        self._gripper_settle_limit = int(np.ceil(tick_rate_hz / 5.0)) + 10

    @staticmethod
    def _collect_effect_conditions(tree: BTNode) -> dict[int, list[Condition]]:
        """Map each action index to the conditions of its atomic tree's parallel."""
        effects: dict[int, list[Condition]] = {}
        for node in tree.iter_nodes():
            if node.kind is not NodeKind.FALLBACK or len(node.children) != 2:
                continue
            parallel, sequence = node.children
            if parallel.kind is not NodeKind.PARALLEL or sequence.kind is not NodeKind.SEQUENCE:
                continue
            for child in sequence.children:
                if child.kind is NodeKind.ACTION:
                    effects[child.action] = [
                        c.condition for c in parallel.children if c.condition is not None
                    ]
        return effects

    # --- perturbation ingress -------------------------------------------

    def request_perturbation(self, obj_id: str, pose: Pose7) -> None:
        """Queue an external perturbation; applied before the next tick."""
        self._inbox.append((obj_id, pose))

    def _drain_perturbations(self) -> None:
        while self._inbox:
            obj_id, pose = self._inbox.popleft()
            self.world = perturb(self.world, obj_id, pose)
            self._events.append(f"perturb {obj_id}")
        if self.perturbations is not None:
            for entry in self.perturbations.due(self.tick_count, self.action_start_ticks):
                self.world = perturb(self.world, entry.obj_id, entry.pose)
                self._events.append(f"perturb {entry.obj_id}")

    # --- action handling --------------------------------------------------

    def start_action(self, action_index: int) -> _ActiveRollout:
        """Plan a fresh trajectory for an action from the live world."""
        if self.active is not None:
            raise ExecutionError("an action rollout is already active")
        action = self.actions.get(action_index)
        if action is None:
            raise ValidationError(f"unknown action index {action_index}")
        anchor_pose = self.world.object_pose(action.relative_object)
        start = self.world.ee
        model, is_reverse = select_direction(action.dmps, start)
        transform = action.end_transform
        if is_reverse and self.fix_reverse_transform:
            transform = action.start_transform
        goal = anchor_pose.compose(Pose7.from_matrix(transform))
        trajectory = rollout(
            model, start=start, goal=goal, time_scale=self.time_scale, dt=self.dt
        )
        self.active = _ActiveRollout(
            leaf_id="", action_index=action_index, trajectory=trajectory
        )
        self.action_start_ticks.setdefault(action_index, []).append(self.tick_count)
        count = self.trace.action_executions.get(action_index, 0)
        self.trace.action_executions[action_index] = count + 1
        self._events.append(f"start_action {action_index}" + (" reverse" if is_reverse else ""))
        return self.active

    def _tick_action(self, node: BTNode) -> TickStatus:
        # a rollout parked by a satisfied parallel resumes on re-entry; only a
        # switch to a different action leaf discards it
        if self.active is not None and self.active.leaf_id != node.id:
            self._events.append(f"cancel_action {self.active.action_index}")
            self.active = None
        if self.active is None:
            self.start_action(node.action)
            self.active.leaf_id = node.id
        roll = self.active
        roll.cursor = min(roll.cursor + 1, len(roll.trajectory) - 1)
        traj = roll.trajectory
        target = traj.pose(roll.cursor)
        self.world = try_grasp(
            step(self.world, target, float(traj.gripper[roll.cursor]), self.dt)
        )
        if roll.cursor < len(traj) - 1:
            return TickStatus.RUNNING
        # the slew-limited gripper may lag an abrupt terminal command; hold
        # the final pose until it settles (bounded) before judging effects
        if (
            abs(self.world.gripper - float(traj.gripper[-1])) > 0.01
            and roll.settle_ticks < self._gripper_settle_limit
        ):
            roll.settle_ticks += 1
            return TickStatus.RUNNING
        # trajectory finished: the action succeeded iff its own effects hold
        self.active = None
        ok = all(
            eval_condition(c, self.world) is TickStatus.SUCCESS
            for c in self._effects.get(node.action, [])
        )
        if ok:
            return TickStatus.SUCCESS
        self._events.append(f"effects_failed {node.action}")
        return TickStatus.FAILURE if self.retry_status == "failure" else TickStatus.RUNNING

    # --- tree evaluation ---------------------------------------------------

    def _tick_node(self, node: BTNode) -> TickStatus:
        if node.kind is NodeKind.CONDITION:
            status = eval_condition(node.condition, self.world)
        elif node.kind is NodeKind.PARALLEL:
            results = [self._tick_node(c) for c in node.children]
            status = (
                TickStatus.SUCCESS
                if all(r is TickStatus.SUCCESS for r in results)
                else TickStatus.FAILURE
            )
        elif node.kind is NodeKind.FALLBACK:
            status = TickStatus.FAILURE
            for child in node.children:
                result = self._tick_node(child)
                if result is not TickStatus.FAILURE:
                    status = result
                    break
        elif node.kind is NodeKind.SEQUENCE and node.memory:
            cursor = self._memory_cursors.get(node.id, 0)
            status = TickStatus.SUCCESS
            while cursor < len(node.children):
                result = self._tick_node(node.children[cursor])
                if result is TickStatus.SUCCESS:
                    cursor += 1
                    continue
                status = result
                break
            if status is TickStatus.RUNNING:
                self._memory_cursors[node.id] = cursor
            else:
                self._memory_cursors[node.id] = 0  # completed or failed: restart the pass
        elif node.kind is NodeKind.SEQUENCE:
            status = TickStatus.SUCCESS
            for child in node.children:
                result = self._tick_node(child)
                if result is not TickStatus.SUCCESS:
                    status = result
                    break
        else:  # action leaf
            status = self._tick_action(node)
        self._statuses[node.id] = status.value
        return status

    def tick(self) -> TickStatus:
        """One control step: drain perturbations, evaluate the tree, advance time."""
        if self.tick_count >= self.max_ticks:
            raise BudgetExhaustedError("tick budget exhausted", trace=self.trace)
        self._events = []
        self._statuses = {}
        self._drain_perturbations()
        status = self._tick_node(self.tree)
        self.ee_path.append(tuple(map(float, self.world.ee.p)))
        self.trace.records.append(
            TickRecord(
                tick=self.tick_count,
                statuses=self._statuses,
                active_action=self.active.action_index if self.active else None,
                world_digest=_world_digest(self.world),
                events=self._events,
            )
        )
        self.tick_count += 1
        self.trace.ticks = self.tick_count
        return status

    def run_to_completion(self) -> ExecutionTrace:
        """Tick until the root succeeds; raise when the budget runs out."""
        while True:
            if self.tick_count >= self.max_ticks:
                raise BudgetExhaustedError(
                    f"tick budget exhausted after {self.tick_count} ticks", trace=self.trace
                )
            if self.tick() is TickStatus.SUCCESS:
                self.trace.success = True
                return self.trace

    def snapshot(self) -> dict:
        """World view for streaming clients."""
        return {
            "tick": self.tick_count,
            "ee": self.world.ee.to_list(),
            "gripper": self.world.gripper,
            "objects": {k: v.to_list() for k, v in sorted(self.world.objects.items())},
            "attached": self.world.attached_object(),
            "statuses": dict(self._statuses),
            "active_action": self.active.action_index if self.active else None,
        }
