"""Skill memory: persistence of learned trees, goal-scene abstraction and
composite tree sequencing.

A goal scene is matched against memorized target objects; each match gets a
new goal pose expressed in an anchor frame (the skill's goal object when
present in the scene, otherwise the nearest non-memorized object). Matched
skills are re-parameterized onto the new goals and chained under one sequence,
so multi-skill tasks need zero new demonstrations.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bt import BTNode, Condition, NodeKind, Variable, assign_ids
from .errors import ValidationError
from .geometry import Pose7
from .primitives import PrimitiveAction


@dataclass
class SkillRecord:
    """Everything needed to re-deploy one learned task."""

    name: str
    tree: BTNode
    actions: list[PrimitiveAction]
    target_object: str
    goal_object: str
    demo_goal_pose: Pose7  # target pose in the goal object's frame at demo end
    learn_time_s: float = 0.0

    def __post_init__(self):
        referenced = sorted(
            n.action for n in self.tree.iter_nodes() if n.kind is NodeKind.ACTION
        )
        if referenced != list(range(1, len(self.actions) + 1)):
            raise ValidationError(
                f"tree action indices {referenced} must cover 1..{len(self.actions)}"
            )

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "tree": self.tree.to_json(),
            "actions": [a.to_json() for a in self.actions],
            "target_object": self.target_object,
            "goal_object": self.goal_object,
            "demo_goal_pose": self.demo_goal_pose.to_list(),
            "learn_time_s": self.learn_time_s,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SkillRecord":
        return cls(
            name=data["name"],
            tree=BTNode.from_json(data["tree"]),
            actions=[PrimitiveAction.from_json(a) for a in data["actions"]],
            target_object=data["target_object"],
            goal_object=data["goal_object"],
            demo_goal_pose=Pose7.from_list(data["demo_goal_pose"]),
            learn_time_s=float(data.get("learn_time_s", 0.0)),
        )


class MemoryStore:
    """Named skill records, persisted as one JSON document."""

    def __init__(self, skills: list[SkillRecord] | None = None):
        self._skills: list[SkillRecord] = list(skills or [])

    def __len__(self) -> int:
        return len(self._skills)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self._skills]

    def save_skill(self, record: SkillRecord) -> None:
        if record.name in self.names:
            raise ValidationError(f"duplicate skill name {record.name!r}")
        self._skills.append(record)

    def get(self, name: str) -> SkillRecord:
        for s in self._skills:
            if s.name == name:
                return s
        raise ValidationError(f"unknown skill {name!r}")

    def by_target(self, obj_id: str) -> SkillRecord | None:
        """Most recently saved skill whose target matches (recency wins)."""
        for s in reversed(self._skills):
            if s.target_object == obj_id:
                return s
        return None

    @property
    def target_ids(self) -> set[str]:
        return {s.target_object for s in self._skills}

    def to_json(self) -> dict:
        return {"skills": [s.to_json() for s in self._skills]}

    def save(self, path) -> None:
        """Atomic write: temp file in the same directory, then rename."""
        path = Path(path)
        payload = json.dumps(self.to_json(), indent=2) + "\n"
        fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=".memory-", suffix=".json")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def load_memory(path) -> MemoryStore:
    """Load a memory file; a missing or empty file yields an empty store."""
    path = Path(path)
    if not path.exists():
        return MemoryStore()
    text = path.read_text().strip()
    if not text:
        return MemoryStore()
    try:
        data = json.loads(text)
        return MemoryStore([SkillRecord.from_json(s) for s in data.get("skills", [])])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValidationError(f"bad memory file {path}: {exc}") from exc


@dataclass(frozen=True)
class GoalScene:
    """User-specified desired arrangement: object id to desired pose."""

    objects: dict[str, Pose7]

    def __post_init__(self):
        if not self.objects:
            raise ValidationError("goal scene must contain at least one object")

    @classmethod
    def from_json(cls, data: dict) -> "GoalScene":
        return cls({k: Pose7.from_list(v) for k, v in data["objects"].items()})

    @classmethod
    def load(cls, path) -> "GoalScene":
        return cls.from_json(json.loads(Path(path).read_text()))

    def to_json(self) -> dict:
        return {"objects": {k: v.to_list() for k, v in sorted(self.objects.items())}}


@dataclass
class GoalMatch:
    skill: SkillRecord
    target: str
    anchor: str | None  # None anchors the goal in the world frame
    new_goal: Pose7  # desired target pose in the anchor frame
    goal_object_present: bool


@dataclass
class AdaptedGoal:
    matches: list[GoalMatch] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.matches)


def adapt_goal(scene: GoalScene, memory: MemoryStore, matcher=None) -> AdaptedGoal:
    """Match scene objects against memorized targets and re-express their goals.

    matcher(scene_object_id, memory) -> SkillRecord | None is pluggable; the
    default matches by exact object id. An empty result is a valid outcome
    (nothing recognized), distinguished from errors.
    """
    if len(memory) == 0:
        raise ValidationError("memory is empty")
    matcher = matcher or (lambda obj_id, mem: mem.by_target(obj_id))
    memorized = memory.target_ids
    matches = []
    for obj_id in sorted(scene.objects):
        skill = matcher(obj_id, memory)
        if skill is None:
            continue
        desired = scene.objects[obj_id]
        if skill.goal_object in scene.objects:
            anchor = skill.goal_object
            present = True
        else:
            candidates = [
                (float(np.linalg.norm(scene.objects[o].p - desired.p)), o)
                for o in sorted(scene.objects)
                if o != obj_id and o not in memorized
            ]
            anchor = min(candidates)[1] if candidates else None
            present = False
        new_goal = (
            scene.objects[anchor].inverse().compose(desired) if anchor is not None else desired
        )
        matches.append(
            GoalMatch(
                skill=skill,
                target=obj_id,
                anchor=anchor,
                new_goal=new_goal,
                goal_object_present=present,
            )
        )
    return AdaptedGoal(matches=matches)


def _clone_tree(node: BTNode, map_condition, offset: int) -> BTNode:
    return BTNode(
        kind=node.kind,
        children=[_clone_tree(c, map_condition, offset) for c in node.children],
        condition=map_condition(node.condition) if node.condition else None,
        action=node.action + offset if node.action is not None else None,
    )


def reparameterize(match: GoalMatch, action_offset: int = 0) -> tuple[BTNode, list[PrimitiveAction]]:
    """Clone a matched skill onto its new goal.

    Only condition payloads and goal-anchored action transforms change; tree
    topology is untouched. Actions anchored to the old goal object re-anchor
    to the match anchor with the transform conjugated through the goal change.
    """
    skill = match.skill
    anchor = match.anchor
    shift = match.new_goal.compose(skill.demo_goal_pose.inverse())  # old goal frame -> new

    def map_condition(cond: Condition) -> Condition:
        if cond.variable is Variable.GRIPPER:
            return cond
        updates = {}
        if cond.variable is Variable.OBJECT:
            updates = {"anchor": anchor, "goal_pose": match.new_goal}
        return replace(cond, **updates)

    tree = _clone_tree(skill.tree, map_condition, action_offset)
    actions = []
    for a in skill.actions:
        if a.relative_object == skill.goal_object and anchor is not None:
            actions.append(
                PrimitiveAction(
                    index=a.index + action_offset,
                    dmps=a.dmps,
                    relative_object=anchor,
                    end_transform=shift.to_matrix() @ a.end_transform,
                    start_transform=shift.to_matrix() @ a.start_transform,
                )
            )
        else:
            actions.append(
                PrimitiveAction(
                    index=a.index + action_offset,
                    dmps=a.dmps,
                    relative_object=a.relative_object,
                    end_transform=a.end_transform.copy(),
                    start_transform=a.start_transform.copy(),
                )
            )
    return tree, actions


def composite_bt(adapted: AdaptedGoal, memory: MemoryStore, name: str = "composite") -> SkillRecord:
    """Sequence re-parameterized matched skills under one root.

    Matches whose memorized goal object is present in the scene run first,
    then lexicographic target order.
    """
    if not adapted.matches:
        raise ValidationError("no matches to compose")
    ordered = sorted(
        adapted.matches, key=lambda m: (0 if m.goal_object_present else 1, m.target)
    )
    subtrees = []
    actions: list[PrimitiveAction] = []
    for m in ordered:
        tree, acts = reparameterize(m, action_offset=len(actions))
        subtrees.append(tree)
        actions.extend(acts)
    root = assign_ids(BTNode(kind=NodeKind.SEQUENCE, children=subtrees, memory=True))
    first = ordered[0]
    return SkillRecord(
        name=name,
        tree=root,
        actions=actions,
        target_object="+".join(m.target for m in ordered),
        goal_object=first.anchor if first.anchor is not None else first.skill.goal_object,
        demo_goal_pose=first.new_goal,
        learn_time_s=0.0,
    )
