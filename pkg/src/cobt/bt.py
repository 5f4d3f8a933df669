"""Condition abstraction and behavior tree compilation.

Each action gets a constraint vector: the symbolic effects observed at its end
boundary plus the already-achieved conditions that persist through the next
action (its successor's pre-conditions). The vectors compile into a chain of
atomic trees: a fallback whose parallel checks the constraints and whose
sequence runs everything learned so far followed by the action, so satisfied
constraints skip execution and broken ones re-trigger exactly the needed
action.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import ValidationError
from .geometry import Pose7
from .segmentation import (
    GROUNDING_THRESHOLD,
    EEState,
    GripperState,
    ObjectState,
    SymbolicState,
)


class Variable(str, Enum):
    GRIPPER = "Gripper"
    OBJECT = "Object"
    END_EFFECTOR = "EndEffector"


_DOMAINS = {
    Variable.GRIPPER: {s.value for s in GripperState},
    Variable.OBJECT: {s.value for s in ObjectState},
    Variable.END_EFFECTOR: {s.value for s in EEState},
}

_SHORT = {Variable.GRIPPER: "g", Variable.OBJECT: "o", Variable.END_EFFECTOR: "e"}


@dataclass(frozen=True)
class Condition:
    """One checkable predicate over the world state."""

    variable: Variable
    expected: str
    subject: str | None = None  # target object id (Object / EndEffector)
    threshold: float = GROUNDING_THRESHOLD
    anchor: str | None = None  # goal object id, for OnGoal grounding
    goal_pose: Pose7 | None = None  # target pose in the anchor frame

    def __post_init__(self):
        if self.expected not in _DOMAINS[self.variable]:
            raise ValidationError(
                f"{self.expected!r} not valid for {self.variable.value}"
            )
        if self.threshold <= 0:
            raise ValidationError("condition threshold must be positive")
        if self.variable is not Variable.GRIPPER and self.subject is None:
            raise ValidationError(f"{self.variable.value} condition needs a subject")

    def label(self) -> str:
        expected = "!Near" if self.expected == EEState.NOT_NEAR.value else self.expected
        if self.variable is Variable.GRIPPER:
            return f"g({expected})"
        return f"{_SHORT[self.variable]}({expected}) {self.subject}"

    def to_json(self) -> dict:
        return {
            "variable": self.variable.value,
            "expected": self.expected,
            "subject": self.subject,
            "threshold": self.threshold,
            "anchor": self.anchor,
            "goal_pose": self.goal_pose.to_list() if self.goal_pose else None,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Condition":
        return cls(
            variable=Variable(data["variable"]),
            expected=data["expected"],
            subject=data.get("subject"),
            threshold=float(data.get("threshold", GROUNDING_THRESHOLD)),
            anchor=data.get("anchor"),
            goal_pose=Pose7.from_list(data["goal_pose"]) if data.get("goal_pose") else None,
        )


@dataclass
class ConstraintEntry:
    """Constraint vector for one action: effects plus persisted pre-conditions."""

    action_index: int  # 1-based
    effects: list[Condition]
    preconditions: list[Condition]

    @property
    def conditions(self) -> list[Condition]:
        ordered = self.effects + self.preconditions
        rank = {Variable.GRIPPER: 0, Variable.OBJECT: 1, Variable.END_EFFECTOR: 2}
        return sorted(ordered, key=lambda c: rank[c.variable])


@dataclass
class ActionConstraintTuple:
    entries: list[ConstraintEntry]

    def __post_init__(self):
        if not self.entries:
            raise ValidationError("empty constraint tuple")
        for e in self.entries:
            if not e.conditions:
                raise ValidationError(f"action {e.action_index} has no conditions")

    def __len__(self) -> int:
        return len(self.entries)


class NodeKind(str, Enum):
    FALLBACK = "Fallback"
    SEQUENCE = "Sequence"
    PARALLEL = "Parallel"
    CONDITION = "ConditionLeaf"
    ACTION = "ActionLeaf"


@dataclass
class BTNode:
    kind: NodeKind
    children: list["BTNode"] = field(default_factory=list)
    condition: Condition | None = None
    action: int | None = None
    id: str = ""
    # memory sequences advance past succeeded children until the pass ends;
    # used only at composite roots so a finished sub-skill's standing
    # constraints cannot preempt the next sub-skill's motions
    memory: bool = False

    def __post_init__(self):
        leaf = self.kind in (NodeKind.CONDITION, NodeKind.ACTION)
        if leaf and self.children:
            raise ValidationError("leaves cannot have children")
        if not leaf and not self.children:
            raise ValidationError(f"{self.kind.value} needs at least one child")
        if self.kind is NodeKind.CONDITION and self.condition is None:
            raise ValidationError("condition leaf needs a condition payload")
        if self.kind is NodeKind.ACTION and self.action is None:
            raise ValidationError("action leaf needs an action index")

    def iter_nodes(self):
        yield self
        for child in self.children:
            yield from child.iter_nodes()

    def label(self) -> str:
        if self.kind is NodeKind.ACTION:
            return f"Action {self.action}"
        if self.kind is NodeKind.CONDITION:
            return self.condition.label()
        return self.kind.value

    def to_json(self) -> dict:
        data = {
            "kind": self.kind.value,
            "children": [c.to_json() for c in self.children],
            "condition": self.condition.to_json() if self.condition else None,
            "action": self.action,
            "id": self.id,
        }
        if self.memory:
            data["memory"] = True
        return data

    @classmethod
    def from_json(cls, data: dict) -> "BTNode":
        return cls(
            kind=NodeKind(data["kind"]),
            children=[cls.from_json(c) for c in data.get("children", [])],
            condition=Condition.from_json(data["condition"]) if data.get("condition") else None,
            action=data.get("action"),
            id=data.get("id", ""),
            memory=bool(data.get("memory", False)),
        )


def assign_ids(tree: BTNode) -> BTNode:
    """Deterministic preorder node ids."""
    for i, node in enumerate(tree.iter_nodes()):
        node.id = f"n{i}"
    return tree


def structure_signature(tree: BTNode) -> tuple:
    """Shape-only signature (kinds and arities); payloads excluded."""
    return (tree.kind.value, tuple(structure_signature(c) for c in tree.children))


def _state_value(state: SymbolicState, var: Variable) -> str:
    return {
        Variable.GRIPPER: state.g.value,
        Variable.OBJECT: state.o.value,
        Variable.END_EFFECTOR: state.e.value,
    }[var]


def cond_abstraction(
    states: list[SymbolicState],
    target: str,
    goal: str,
    threshold: float = GROUNDING_THRESHOLD,
    goal_pose: Pose7 | None = None,
) -> ActionConstraintTuple:
    """Turn the boundary state matrix into per-action constraint vectors.

    Effects of action j are the variables that changed at its end boundary.
    Its vector additionally carries pre-conditions of the following action:
    variables that did not change at that boundary, differ from the initial
    state (so they were achieved by an earlier action, not ambient), and hold
    through the next boundary as well. The final action persists everything
    that outlived the task.
    """
    if len(states) < 2:
        raise ValidationError("need at least 2 boundary states")
    for k in range(len(states) - 1):
        if states[k] == states[k + 1]:
            raise ValidationError(f"adjacent boundary states {k} and {k + 1} are identical")

    def make(var: Variable, value: str) -> Condition:
        if var is Variable.GRIPPER:
            return Condition(var, value, threshold=threshold)
        if var is Variable.OBJECT:
            return Condition(var, value, subject=target, threshold=threshold,
                             anchor=goal, goal_pose=goal_pose)
        return Condition(var, value, subject=target, threshold=threshold)

    entries = []
    for j in range(1, len(states)):  # j is the action's end boundary (0-based)
        effects, pres = [], []
        for var in (Variable.GRIPPER, Variable.OBJECT, Variable.END_EFFECTOR):
            now = _state_value(states[j], var)
            if now != _state_value(states[j - 1], var):
                effects.append(make(var, now))
            elif now != _state_value(states[0], var) and (
                j == len(states) - 1 or now == _state_value(states[j + 1], var)
            ):
                pres.append(make(var, now))
        entries.append(ConstraintEntry(action_index=j, effects=effects, preconditions=pres))
    return ActionConstraintTuple(entries)


def cond_to_tree(t: ActionConstraintTuple, precondition_style: str = "parallel") -> BTNode:
    """Chain atomic trees: fallback(parallel(constraints), sequence(done-so-far, action)).

    precondition_style "parallel" puts the whole constraint vector in the
    parallel node; "sequence" keeps only effects there and guards the action
    with pre-condition leaves inside the sequence.
    """
    if precondition_style not in ("parallel", "sequence"):
        raise ValidationError(f"unknown precondition style {precondition_style!r}")
    tree: BTNode | None = None
    for entry in t.entries:
        if precondition_style == "parallel":
            checks = entry.conditions
            guards = []
        else:
            checks = entry.effects or entry.conditions
            guards = entry.preconditions
        parallel = BTNode(
            NodeKind.PARALLEL,
            children=[BTNode(NodeKind.CONDITION, condition=c) for c in checks],
        )
        seq_children: list[BTNode] = [tree] if tree is not None else []
        seq_children += [BTNode(NodeKind.CONDITION, condition=c) for c in guards]
        seq_children.append(BTNode(NodeKind.ACTION, action=entry.action_index))
        sequence = BTNode(NodeKind.SEQUENCE, children=seq_children)
        tree = BTNode(NodeKind.FALLBACK, children=[parallel, sequence])
    return assign_ids(tree)


def validate_tree(tree: BTNode, action_count: int) -> None:
    """Every referenced action index must exist."""
    for node in tree.iter_nodes():
        if node.kind is NodeKind.ACTION and not 1 <= node.action <= action_count:
            raise ValidationError(f"action index {node.action} outside 1..{action_count}")


_DOT_SHAPE = {
    NodeKind.FALLBACK: "diamond",
    NodeKind.SEQUENCE: "cds",
    NodeKind.PARALLEL: "parallelogram",
    NodeKind.CONDITION: "ellipse",
    NodeKind.ACTION: "box",
}


def export_dot(tree: BTNode) -> str:
    """Deterministic DOT digraph of the tree (stable preorder ids)."""
    lines = ["digraph bt {", "  node [fontsize=10];"]
    for node in tree.iter_nodes():
        label = node.label().replace('"', "'")
        lines.append(f'  {node.id} [label="{label}" shape={_DOT_SHAPE[node.kind].strip()}];')
    for node in tree.iter_nodes():
        for child in node.children:
            lines.append(f"  {node.id} -> {child.id};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_tree(tree: BTNode, path) -> None:
    Path(path).write_text(json.dumps(tree.to_json(), indent=2) + "\n")


def load_tree(path) -> BTNode:
    return BTNode.from_json(json.loads(Path(path).read_text()))
