"""Demonstration segmentation: velocity-norm change-point detection, symbolic
grounding of gripper/object/end-effector states at each boundary, and false
segment removal.

The change-point search is an exact penalized dynamic program over a
piecewise-constant L2 cost with pruning of provably suboptimal candidates, so
it returns the same optimum as an exhaustive search at a fraction of the cost.
The default penalty is data driven (no user parameter needed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .demo import Demonstration
from .errors import ValidationError

GROUNDING_THRESHOLD = 0.05  # m, for Near / OnGoal predicates
GRIPPER_CLOSED_AT = 0.5
SMOOTH_WINDOW = 5
MIN_SEGMENT = 2  # samples, minimum piece length in the change-point search
GRIPPER_BOUNDARY_GAP = 15  # samples, skip inserting a crossing this close to a boundary


class GripperState(str, Enum):
    OPEN = "Open"
    CLOSED = "Closed"


class ObjectState(str, Enum):
    NEAR = "Near"
    ON_GOAL = "OnGoal"
    NONE = "None"


class EEState(str, Enum):
    NEAR = "Near"
    NOT_NEAR = "NotNear"


@dataclass(frozen=True)
class SymbolicState:
    """Grounded (gripper, target object, end-effector) triple at one boundary."""

    g: GripperState
    o: ObjectState
    e: EEState

    def as_triple(self) -> list[str]:
        return [self.g.value, self.o.value, self.e.value]

    @classmethod
    def from_triple(cls, triple) -> "SymbolicState":
        return cls(GripperState(triple[0]), ObjectState(triple[1]), EEState(triple[2]))


@dataclass
class SegmentedDataset:
    """Boundary sample indices plus the grounded state triple at each boundary."""

    boundaries: np.ndarray
    states: list[SymbolicState]
    target_object: str
    goal_object: str

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=int)
        if b.ndim != 1 or len(b) < 2:
            raise ValidationError("need at least 2 boundaries")
        if b[0] != 0 or np.any(np.diff(b) <= 0):
            raise ValidationError("boundaries must strictly increase from 0")
        if len(self.states) != len(b):
            raise ValidationError("one state per boundary required")
        self.boundaries = b

    @property
    def action_count(self) -> int:
        return len(self.boundaries) - 1

    def to_json(self) -> dict:
        return {
            "boundaries": [int(i) for i in self.boundaries],
            "states": [s.as_triple() for s in self.states],
            "target": self.target_object,
            "goal": self.goal_object,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SegmentedDataset":
        return cls(
            boundaries=np.array(data["boundaries"], dtype=int),
            states=[SymbolicState.from_triple(t) for t in data["states"]],
            target_object=data["target"],
            goal_object=data["goal"],
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "SegmentedDataset":
        return cls.from_json(json.loads(Path(path).read_text()))


def velocity_norms(demo: Demonstration) -> np.ndarray:
    """Translational speed per sample, central differences (one-sided at ends)."""
    pos = demo.ee_positions()
    t = demo.times()
    vel = np.gradient(pos, t, axis=0)
    return np.linalg.norm(vel, axis=1)


def smooth_velocity(v: np.ndarray, window: int = SMOOTH_WINDOW) -> np.ndarray:
    """Centered moving average with edge reflection."""
    if window <= 1:
        return np.asarray(v, dtype=float)
    half = window // 2
    padded = np.pad(np.asarray(v, dtype=float), half, mode="reflect")
    kernel = np.ones(window) / window
    return np.convolve(padded, kernel, mode="valid")[: len(v)]


def estimate_noise_std(v: np.ndarray) -> float:
    """Robust noise scale from first differences (MAD estimator)."""
    d = np.diff(np.asarray(v, dtype=float))
    if len(d) == 0:
        return 0.0
    mad = np.median(np.abs(d - np.median(d)))
    return float(1.4826 * mad / np.sqrt(2.0))


def default_penalty(v: np.ndarray) -> float:
    """Data-driven penalty: 3 * log(N) * sigma^2 with a small positive floor."""
    n = len(v)
    sigma2 = max(estimate_noise_std(v) ** 2, 1e-12)
    return 3.0 * np.log(max(n, 2)) * sigma2


def detect_changepoints(
    v: np.ndarray,
    penalty: float | None = None,
    min_size: int = MIN_SEGMENT,
) -> np.ndarray:
    """Exact penalized L2 segmentation of a 1-D signal with candidate pruning.

    Returns boundary sample indices, always including 0 and N-1. Interior
    boundary i means a new regime starts at sample i. Candidates are pruned
    only when strictly suboptimal, so the result (cost and breakpoints, with
    first-minimum tie-breaking) matches a full dynamic program exactly.
    """
    v = np.asarray(v, dtype=float)
    n = len(v)
    if n < 2:
        raise ValidationError("signal too short to segment")
    if penalty is None:
        penalty = default_penalty(v)
    if penalty <= 0:
        raise ValidationError(f"penalty must be positive, got {penalty}")
    if n < 2 * min_size:
        return np.array([0, n - 1])

    s1 = np.concatenate(([0.0], np.cumsum(v)))
    s2 = np.concatenate(([0.0], np.cumsum(v * v)))

    def seg_cost(starts: np.ndarray, end: int) -> np.ndarray:
        length = end - starts
        return (s2[end] - s2[starts]) - (s1[end] - s1[starts]) ** 2 / length

    f = np.full(n + 1, np.inf)
    f[0] = -penalty
    prev = np.zeros(n + 1, dtype=int)
    candidates = np.array([0], dtype=int)
    for end in range(min_size, n + 1):
        valid = candidates[end - candidates >= min_size]
        totals = f[valid] + seg_cost(valid, end) + penalty
        best = int(np.argmin(totals))
        f[end] = totals[best]
        prev[end] = valid[best]
        pruned = valid[totals - penalty <= f[end]]
        pending = candidates[end - candidates < min_size]
        candidates = np.concatenate((pruned, pending))
        if end + min_size <= n:
            candidates = np.concatenate((candidates, [end]))

    ends = []
    cursor = n
    while cursor > 0:
        ends.append(cursor)
        cursor = prev[cursor]
    interior = sorted(e for e in ends if e != n)
    return np.array([0, *interior, n - 1])


def insert_gripper_boundaries(
    demo: Demonstration,
    boundaries: np.ndarray,
    min_gap: int = GRIPPER_BOUNDARY_GAP,
) -> np.ndarray:
    """Add a boundary at each gripper open/close crossing the detector missed.

    Crossings within min_gap samples of an existing boundary are not inserted;
    the nearby boundary already captures the transition for grounding.
    """
    g = demo.gripper_values()
    closed = g >= GRIPPER_CLOSED_AT
    crossings = np.nonzero(closed[1:] != closed[:-1])[0] + 1
    out = list(np.asarray(boundaries, dtype=int))
    for c in crossings:
        if min(abs(c - b) for b in out) > min_gap:
            out.append(int(c))
    return np.array(sorted(out))


def ground_states(
    demo: Demonstration,
    boundaries: np.ndarray,
    target: str,
    goal: str,
    threshold: float = GROUNDING_THRESHOLD,
) -> list[SymbolicState]:
    """Ground the symbolic state triple at each boundary sample.

    g: gripper binarized at 0.5. e: end-effector within threshold of the
    target. o: OnGoal when the target sits within threshold of its adapted
    goal pose (the target's final pose expressed in the goal object's frame,
    composed with the goal object's current pose); otherwise Near when the
    target is within threshold of its nearest other object AND that distance
    decreased since the previous boundary; otherwise None. Requiring
    proximity keeps the label checkable by a memoryless runtime predicate.
    """
    if threshold <= 0:
        raise ValidationError(f"threshold must be positive, got {threshold}")
    last = len(demo) - 1
    goal_in_frame = demo.object_pose(goal, last).inverse().compose(demo.object_pose(target, last))
    gripper = demo.gripper_values()
    ee = demo.ee_positions()
    tgt = demo.object_positions(target)
    others = {o: demo.object_positions(o) for o in demo.object_ids if o != target}

    states = []
    prev_other_dist = None
    for b in np.asarray(boundaries, dtype=int):
        g = GripperState.CLOSED if gripper[b] >= GRIPPER_CLOSED_AT else GripperState.OPEN
        e = EEState.NEAR if np.linalg.norm(ee[b] - tgt[b]) < threshold else EEState.NOT_NEAR
        adapted_goal = demo.object_pose(goal, b).compose(goal_in_frame)
        on_goal = np.linalg.norm(tgt[b] - adapted_goal.p) < threshold
        other_dist = min(
            (float(np.linalg.norm(tgt[b] - pos[b])) for pos in others.values()),
            default=np.inf,
        )
        if on_goal:
            o = ObjectState.ON_GOAL
        elif (
            other_dist < threshold
            and prev_other_dist is not None
            and other_dist < prev_other_dist - 1e-9
        ):
            o = ObjectState.NEAR
        else:
            o = ObjectState.NONE
        prev_other_dist = other_dist
        states.append(SymbolicState(g=g, o=o, e=e))
    return states


def filter_segments(
    demo: Demonstration,
    boundaries: np.ndarray,
    states: list[SymbolicState],
    v: np.ndarray,
    target: str,
    goal: str,
    threshold: float = GROUNDING_THRESHOLD,
) -> tuple[np.ndarray, list[SymbolicState]]:
    """Merge false segments until every adjacent boundary pair differs in state.

    Boundaries with identical adjacent states delimit segments that changed
    nothing, so each maximal run of equal-state boundaries collapses to a
    single representative: the one at the lowest end-effector speed (the rest
    pose closest to the symbolic event). The demonstration endpoints always
    survive. States are re-grounded after every merge because the object
    state is history dependent.
    """
    bounds = list(np.asarray(boundaries, dtype=int))
    states = list(states)
    v = np.asarray(v, dtype=float)
    while True:
        if len(bounds) < 2:
            raise ValidationError("no action detected")
        merged = False
        k = 0
        while k < len(bounds) - 1:
            if states[k] != states[k + 1]:
                k += 1
                continue
            run_end = k + 1
            while run_end + 1 < len(bounds) and states[run_end + 1] == states[k]:
                run_end += 1
            run = list(range(k, run_end + 1))
            protected = [i for i in run if i == 0 or i == len(bounds) - 1]
            if len(protected) >= 2:
                raise ValidationError("no action detected")
            if protected:
                keep = protected[0]
            else:
                keep = min(run, key=lambda i: (v[bounds[i]], i))
            for i in reversed(run):
                if i != keep:
                    del bounds[i]
            states = ground_states(demo, np.array(bounds), target, goal, threshold)
            merged = True
            break
        if not merged:
            return np.array(bounds), states


def segment(
    demo: Demonstration,
    target: str,
    goal: str,
    threshold: float = GROUNDING_THRESHOLD,
    penalty: float | None = None,
    smooth_window: int = SMOOTH_WINDOW,
    gripper_gap: int = GRIPPER_BOUNDARY_GAP,
) -> SegmentedDataset:
    """Full segmentation pipeline for one demonstration."""
    demo.object_positions(target)
    demo.object_positions(goal)
    v = smooth_velocity(velocity_norms(demo), smooth_window)
    bounds = detect_changepoints(v, penalty)
    bounds = insert_gripper_boundaries(demo, bounds, gripper_gap)
    states = ground_states(demo, bounds, target, goal, threshold)
    bounds, states = filter_segments(demo, bounds, states, v, target, goal, threshold)
    return SegmentedDataset(
        boundaries=bounds, states=states, target_object=target, goal_object=goal
    )
