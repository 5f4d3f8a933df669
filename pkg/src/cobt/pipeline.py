"""Offline learning pipeline: demonstration in, deployable skill out."""

from __future__ import annotations

import time
from dataclasses import dataclass

from .bt import ActionConstraintTuple, BTNode, cond_abstraction, cond_to_tree, validate_tree
from .demo import Demonstration
from .memory import SkillRecord
from .primitives import PrimitiveAction, learn_primitives
from .segmentation import GROUNDING_THRESHOLD, SegmentedDataset, segment


def demo_goal_pose(demo: Demonstration, target: str, goal: str):
    """Target pose in the goal object's frame at the end of the demonstration."""
    last = len(demo) - 1
    return demo.object_pose(goal, last).inverse().compose(demo.object_pose(target, last))


def generate_bt(
    demo: Demonstration,
    seg: SegmentedDataset,
    actions: list[PrimitiveAction],
    threshold: float = GROUNDING_THRESHOLD,
    precondition_style: str = "parallel",
) -> tuple[BTNode, SkillRecord]:
    """Abstract conditions, compile the tree and draft the memory record."""
    goal_pose = demo_goal_pose(demo, seg.target_object, seg.goal_object)
    constraints = cond_abstraction(
        seg.states, seg.target_object, seg.goal_object, threshold, goal_pose
    )
    tree = cond_to_tree(constraints, precondition_style)
    validate_tree(tree, len(actions))
    record = SkillRecord(
        name="",
        tree=tree,
        actions=actions,
        target_object=seg.target_object,
        goal_object=seg.goal_object,
        demo_goal_pose=goal_pose,
    )
    return tree, record


@dataclass
class LearnResult:
    record: SkillRecord
    seg: SegmentedDataset
    constraints: ActionConstraintTuple
    learn_time_s: float


def learn_skill(
    demo: Demonstration,
    target: str,
    goal: str,
    name: str,
    threshold: float = GROUNDING_THRESHOLD,
    penalty: float | None = None,
    precondition_style: str = "parallel",
) -> LearnResult:
    """Full pipeline: segment, train primitives, compile the behavior tree."""
    t0 = time.perf_counter()
    seg = segment(demo, target, goal, threshold=threshold, penalty=penalty)
    actions = learn_primitives(demo, seg)
    goal_pose = demo_goal_pose(demo, target, goal)
    constraints = cond_abstraction(seg.states, target, goal, threshold, goal_pose)
    tree = cond_to_tree(constraints, precondition_style)
    validate_tree(tree, len(actions))
    elapsed = time.perf_counter() - t0
    record = SkillRecord(
        name=name,
        tree=tree,
        actions=actions,
        target_object=target,
        goal_object=goal,
        demo_goal_pose=goal_pose,
        learn_time_s=elapsed,
    )
    return LearnResult(record=record, seg=seg, constraints=constraints, learn_time_s=elapsed)
