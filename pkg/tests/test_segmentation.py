from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cobt.errors import ValidationError
from cobt.segmentation import (
    EEState,
    GripperState,
    ObjectState,
    SegmentedDataset,
    SymbolicState,
    default_penalty,
    detect_changepoints,
    filter_segments,
    ground_states,
    insert_gripper_boundaries,
    segment,
    smooth_velocity,
    velocity_norms,
)
from cobt.sim import GripEvent, MotionLeg, WorldState, synth_demo
from cobt.geometry import Pose7

from tests.oracles import exhaustive_optimal_partition


def static_world(objects):
    return WorldState(
        objects={k: Pose7(v, (1, 0, 0, 0)) for k, v in objects.items()},
        ee=Pose7((0.2, 0.0, 0.3), (1, 0, 0, 0)),
        gripper=0.0,
    )


def simple_demo(legs, grips=(), t_end=None, objects=None):
    world = static_world(objects or {"cube": (0.5, 0.0, 0.02), "tray": (0.2, -0.3, 0.0)})
    demo, _ = synth_demo(world, legs, grips, t_end=t_end)
    return demo


# --- velocity_norms --------------------------------------------------------


def test_velocity_stationary_zero():
    demo = simple_demo([MotionLeg(0.0, 0.2, (0.2, 0.0, 0.3))], t_end=1.0)
    v = velocity_norms(demo)
    assert np.allclose(v[25:], 0.0, atol=1e-9)


def test_velocity_linear_motion():
    # constant-velocity x(t) = 0.2 + 0.1 t via a dense waypoint chain
    world = static_world({"cube": (0.5, 0.0, 0.02)})
    from cobt.demo import DemoSample, Demonstration

    samples = [
        DemoSample(
            t=i / 100,
            ee=Pose7((0.2 + 0.1 * i / 100, 0, 0.3), (1, 0, 0, 0)),
            gripper=0.0,
            objects={"cube": Pose7((0.5, 0, 0.02), (1, 0, 0, 0))},
        )
        for i in range(101)
    ]
    demo = Demonstration(samples, 100.0)
    assert np.allclose(velocity_norms(demo), 0.1, atol=1e-9)


def test_velocity_pythagorean_components():
    from cobt.demo import DemoSample, Demonstration

    samples = [
        DemoSample(
            t=i / 100,
            ee=Pose7((0.003 * i / 100, 0.004 * i / 100, 0.1), (1, 0, 0, 0)),
            gripper=0.0,
            objects={"o": Pose7((0.5, 0, 0), (1, 0, 0, 0))},
        )
        for i in range(50)
    ]
    demo = Demonstration(samples, 100.0)
    assert np.allclose(velocity_norms(demo), 0.005, atol=1e-12)


# --- detect_changepoints ----------------------------------------------------


def test_piecewise_constant_matches_oracle():
    v = np.concatenate([np.zeros(100), np.full(100, 0.2), np.zeros(100)])
    rng = np.random.default_rng(7)
    v = v + rng.normal(0, 0.005, size=300)
    pen = default_penalty(v)
    ours = detect_changepoints(v, pen)
    oracle, _ = exhaustive_optimal_partition(v, pen)
    assert list(ours) == oracle
    interior = [b for b in ours if b not in (0, 299)]
    assert any(abs(b - 100) <= 3 for b in interior)
    assert any(abs(b - 200) <= 3 for b in interior)


def test_constant_signal_no_breakpoints():
    v = np.full(200, 0.3)
    assert list(detect_changepoints(v, 0.01)) == [0, 199]


def test_ramp_knee_detected():
    v = np.concatenate([np.linspace(0, 0.3, 150), np.full(150, 0.3)])
    v += np.random.default_rng(3).normal(0, 0.002, 300)
    pen = default_penalty(v)
    ours = detect_changepoints(v, pen)
    oracle, _ = exhaustive_optimal_partition(v, pen)
    assert list(ours) == oracle
    assert any(abs(b - 150) <= 5 for b in ours)


@settings(max_examples=25, deadline=None)
@given(
    st.integers(min_value=0, max_value=3),
    st.integers(min_value=0, max_value=10_000),
)
def test_pruned_dp_equals_exhaustive(n_breaks, seed):
    rng = np.random.default_rng(seed)
    pieces = []
    level = rng.uniform(0, 0.5)
    for _ in range(n_breaks + 1):
        length = rng.integers(8, 25)
        pieces.append(np.full(length, level))
        level += rng.uniform(0.1, 0.4) * rng.choice([-1, 1])
        level = abs(level)
    v = np.concatenate(pieces) + rng.normal(0, 0.01, sum(len(p) for p in pieces))
    pen = default_penalty(v)
    ours = detect_changepoints(v, pen)
    oracle, _ = exhaustive_optimal_partition(v, pen)
    assert list(ours) == oracle


def test_scaling_invariance():
    rng = np.random.default_rng(11)
    v = np.concatenate([np.zeros(60), np.full(70, 0.25), np.full(50, 0.05)])
    v += rng.normal(0, 0.004, len(v))
    pen = 0.02
    base = detect_changepoints(v, pen)
    for c in (0.5, 3.0, 17.0):
        scaled = detect_changepoints(c * v, c * c * pen)
        assert list(scaled) == list(base)


def test_penalty_must_be_positive():
    with pytest.raises(ValidationError):
        detect_changepoints(np.zeros(50), 0.0)


# --- grounding ---------------------------------------------------------------


def grounding_demo():
    """ee approaches cube (handle analog); other object stays far."""
    world = static_world({"cube": (0.5, 0.0, 0.02), "tray": (0.2, -0.3, 0.0)})
    legs = [MotionLeg(0.0, 1.0, (0.5, 0.0, 0.05))]
    demo, _ = synth_demo(world, legs, [GripEvent(1.2, 1.0)], t_end=1.6)
    return demo


def test_ground_states_near_rule():
    demo = grounding_demo()
    states = ground_states(demo, np.array([0, 100, len(demo) - 1]), "cube", "tray")
    assert states[0].e is EEState.NOT_NEAR
    assert states[1].e is EEState.NEAR  # 3 cm above the cube at leg end
    assert states[0].g is GripperState.OPEN
    assert states[2].g is GripperState.CLOSED  # well past the 0.5 crossing


def test_ground_states_binarization():
    demo = grounding_demo()
    g = demo.gripper_values()
    closed_idx = int(np.argmax(g >= 0.9))
    states = ground_states(demo, np.array([0, closed_idx]), "cube", "tray")
    assert states[1].g is GripperState.CLOSED


def test_ground_states_pure_function(task_fixtures):
    fx = task_fixtures["drawer"]
    bounds = np.array([0, 100, 300, len(fx.demo) - 1])
    a = ground_states(fx.demo, bounds, "handle", "drawer")
    b = ground_states(fx.demo, bounds, "handle", "drawer")
    assert a == b


def test_drawer_boundary2_state(task_fixtures):
    fx = task_fixtures["drawer"]
    seg = segment(fx.demo, fx.target, fx.goal)
    b2 = seg.boundaries[1]
    # independent recomputation of the grounding distances at that sample
    ee = fx.demo.ee_positions()[b2]
    handle = fx.demo.object_positions("handle")[b2]
    assert np.linalg.norm(ee - handle) < 0.05
    assert fx.demo.gripper_values()[b2] < 0.5
    assert seg.states[1] == SymbolicState(
        GripperState.OPEN, ObjectState.NONE, EEState.NEAR
    )


def test_unknown_target_rejected(task_fixtures):
    with pytest.raises(ValidationError, match="unknown object"):
        segment(task_fixtures["drawer"].demo, "nope", "drawer")


# --- gripper boundary insertion ----------------------------------------------


def test_gripper_crossings_inserted():
    demo = grounding_demo()
    out = insert_gripper_boundaries(demo, np.array([0, len(demo) - 1]))
    g = demo.gripper_values()
    crossing = int(np.argmax(g >= 0.5))
    assert any(abs(b - crossing) <= 1 for b in out)


def test_gripper_crossing_skipped_near_existing_boundary():
    demo = grounding_demo()
    g = demo.gripper_values()
    crossing = int(np.argmax(g >= 0.5))
    base = np.array([0, crossing - 3, len(demo) - 1])
    out = insert_gripper_boundaries(demo, base)
    assert len(out) == len(base)


# --- filter_segments -----------------------------------------------------------


def test_filter_merges_identical_states(task_fixtures):
    fx = task_fixtures["drawer"]
    demo = fx.demo
    v = smooth_velocity(velocity_norms(demo))
    # inject a spurious breakpoint inside the reach phase
    bounds = detect_changepoints(v, default_penalty(v))
    bounds = insert_gripper_boundaries(demo, bounds)
    spiked = np.unique(np.concatenate([bounds, [40]]))
    states = ground_states(demo, spiked, fx.target, fx.goal)
    merged_b, merged_s = filter_segments(demo, spiked, states, v, fx.target, fx.goal)
    assert 40 not in merged_b
    for a, b in zip(merged_s, merged_s[1:]):
        assert a != b


def test_filter_keeps_state_changes():
    states = [
        SymbolicState(GripperState.OPEN, ObjectState.NONE, EEState.NOT_NEAR),
        SymbolicState(GripperState.OPEN, ObjectState.NONE, EEState.NEAR),
    ]
    demo = grounding_demo()
    bounds, kept = filter_segments(
        demo, np.array([0, len(demo) - 1]), states, velocity_norms(demo), "cube", "tray"
    )
    assert len(bounds) == 2


def test_filter_collapse_raises():
    demo = simple_demo([MotionLeg(0.0, 0.2, (0.2, 0.0, 0.3))], t_end=1.0)
    with pytest.raises(ValidationError, match="no action detected"):
        segment(demo, "cube", "tray")


# --- segment (composition) -----------------------------------------------------


def test_drawer_segments_into_five_actions(task_fixtures):
    fx = task_fixtures["drawer"]
    seg = segment(fx.demo, fx.target, fx.goal)
    assert len(seg.boundaries) == 6
    assert seg.action_count == 5
    triples = [s.as_triple() for s in seg.states]
    assert triples == [
        ["Open", "None", "NotNear"],
        ["Open", "None", "Near"],
        ["Closed", "None", "Near"],
        ["Closed", "OnGoal", "Near"],
        ["Open", "OnGoal", "Near"],
        ["Open", "OnGoal", "NotNear"],
    ]


def test_pnp_segments_into_five_actions(task_fixtures):
    fx = task_fixtures["pnp"]
    seg = segment(fx.demo, fx.target, fx.goal)
    assert seg.action_count == 5


def test_boundaries_cover_demo(task_fixtures):
    for fx in task_fixtures.values():
        seg = segment(fx.demo, fx.target, fx.goal)
        assert seg.boundaries[0] == 0
        assert seg.boundaries[-1] == len(fx.demo) - 1
        assert np.all(np.diff(seg.boundaries) > 0)


def test_segments_json_roundtrip(tmp_path, task_fixtures):
    fx = task_fixtures["pouring"]
    seg = segment(fx.demo, fx.target, fx.goal)
    path = tmp_path / "segments.json"
    seg.save(path)
    again = SegmentedDataset.load(path)
    assert list(again.boundaries) == list(seg.boundaries)
    assert again.states == seg.states
    assert again.target_object == seg.target_object
