"""Per-segment primitive learning: motion models, the object each action is
anchored to, and the end-effector transform in that object's frame.

The anchor ("relative object") of a segment is the nearest object toward
which the end-effector converged; its live pose recomposes the action's goal
at execution time, which is what makes executions follow moved objects.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .demo import Demonstration
from .dmp import DmpSet, train_dmp_set
from .errors import ValidationError
from .segmentation import GripperState, SegmentedDataset

# a carried object keeps a constant offset to the hand; anything closing in by
# less than this is treated as not approached at all
MIN_APPROACH_DECREASE = 0.01


@dataclass
class PrimitiveAction:
    """One executable segment: motion models plus its goal anchoring."""

    index: int  # 1-based action ordinal
    dmps: DmpSet
    relative_object: str
    end_transform: np.ndarray  # ee pose in the relative object's frame at segment end
    start_transform: np.ndarray  # same at segment start (used by the reverse-transform fix)

    def __post_init__(self):
        for name in ("end_transform", "start_transform"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (4, 4):
                raise ValidationError(f"{name} must be 4x4, got {m.shape}")
            rot = m[:3, :3]
            if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-6) or np.linalg.det(rot) < 0.99:
                raise ValidationError(f"{name} rotation block is not orthonormal")
            setattr(self, name, m)

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "relative_object": self.relative_object,
            "end_transform": [float(v) for v in self.end_transform.ravel()],
            "start_transform": [float(v) for v in self.start_transform.ravel()],
            "dmps": self.dmps.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "PrimitiveAction":
        return cls(
            index=int(data["index"]),
            dmps=DmpSet.from_json(data["dmps"]),
            relative_object=data["relative_object"],
            end_transform=np.array(data["end_transform"]).reshape(4, 4),
            start_transform=np.array(data["start_transform"]).reshape(4, 4),
        )


def relative_object(demo: Demonstration, start_idx: int, end_idx: int) -> str:
    """Anchor object for the segment [start_idx, end_idx].

    Among objects whose distance to the end-effector decreased meaningfully
    over the segment, pick the one nearest the end-effector at the end. When
    nothing was approached (retracts, in-place gripper moves), fall back to
    the nearest object at the end. Ties break lexicographically.
    """
    if not demo.object_ids:
        raise ValidationError("empty scene: no objects to anchor to")
    ee = demo.ee_positions()
    ranked = []
    for obj in demo.object_ids:
        pos = demo.object_positions(obj)
        d_start = float(np.linalg.norm(ee[start_idx] - pos[start_idx]))
        d_end = float(np.linalg.norm(ee[end_idx] - pos[end_idx]))
        ranked.append((d_end, obj, d_start - d_end))
    approached = [(d_end, obj) for d_end, obj, dec in ranked if dec > MIN_APPROACH_DECREASE]
    pool = approached if approached else [(d_end, obj) for d_end, obj, _ in ranked]
    return min(pool)[1]


def ee_transformation(demo: Demonstration, obj: str, index: int) -> np.ndarray:
    """End-effector pose expressed in the object's frame at the given sample."""
    obj_pose = demo.object_pose(obj, index)
    ee_pose = demo.samples[index].ee
    return obj_pose.inverse().compose(ee_pose).to_matrix()


def _snap_gripper_endpoint(profile, closed: bool) -> None:
    """Push an ambiguous terminal gripper value away from the 0.5 threshold.

    A segment boundary can land mid-slew, leaving the demonstrated endpoint
    right at the binarization threshold; the grounded boundary state is the
    semantic truth, so the replayed command must settle decisively on its
    side.
    """
    profile[-1] = max(profile[-1], 0.7) if closed else min(profile[-1], 0.3)


def learn_primitives(demo: Demonstration, seg: SegmentedDataset) -> list[PrimitiveAction]:
    """Train one PrimitiveAction per segment of the segmented demonstration."""
    if seg.boundaries[-1] != len(demo) - 1:
        raise ValidationError("segmentation does not match the demonstration length")
    times = demo.times()
    positions = demo.ee_positions()
    quats = demo.ee_quats()
    gripper = demo.gripper_values()
    actions = []
    for j in range(seg.action_count):
        lo, hi = int(seg.boundaries[j]), int(seg.boundaries[j + 1])
        sl = slice(lo, hi + 1)
        dmps = train_dmp_set(times[sl], positions[sl], quats[sl], gripper[sl])
        _snap_gripper_endpoint(
            dmps.forward.gripper_profile, seg.states[j + 1].g is GripperState.CLOSED
        )
        _snap_gripper_endpoint(
            dmps.reverse.gripper_profile, seg.states[j].g is GripperState.CLOSED
        )
        anchor = relative_object(demo, lo, hi)
        actions.append(
            PrimitiveAction(
                index=j + 1,
                dmps=dmps,
                relative_object=anchor,
                end_transform=ee_transformation(demo, anchor, hi),
                start_transform=ee_transformation(demo, anchor, lo),
            )
        )
    return actions


def save_actions(actions: list[PrimitiveAction], path) -> None:
    Path(path).write_text(
        json.dumps({"actions": [a.to_json() for a in actions]}, indent=2) + "\n"
    )


def load_actions(path) -> list[PrimitiveAction]:
    data = json.loads(Path(path).read_text())
    return [PrimitiveAction.from_json(rec) for rec in data["actions"]]
