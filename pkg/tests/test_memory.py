from __future__ import annotations

import pytest

from cobt.bt import NodeKind, Variable, structure_signature
from cobt.errors import ValidationError
from cobt.fixtures import composite_goal_scene
from cobt.geometry import Pose7
from cobt.memory import (
    GoalScene,
    MemoryStore,
    SkillRecord,
    adapt_goal,
    composite_bt,
    load_memory,
    reparameterize,
)

I = (1.0, 0.0, 0.0, 0.0)


def test_save_load_roundtrip(tmp_path, learned):
    mem = MemoryStore()
    mem.save_skill(learned["drawer"].record)
    mem.save_skill(learned["pnp"].record)
    path = tmp_path / "memory.json"
    mem.save(path)
    again = load_memory(path)
    assert again.names == ["drawer", "pnp"]
    a = again.get("drawer")
    b = learned["drawer"].record
    assert a.tree.to_json() == b.tree.to_json()
    assert a.target_object == b.target_object
    assert a.demo_goal_pose.approx_equal(b.demo_goal_pose, 1e-12, 1e-9)


def test_duplicate_name_rejected(learned):
    mem = MemoryStore()
    mem.save_skill(learned["drawer"].record)
    with pytest.raises(ValidationError, match="duplicate"):
        mem.save_skill(learned["drawer"].record)


def test_empty_file_empty_memory(tmp_path):
    path = tmp_path / "memory.json"
    path.write_text("")
    assert len(load_memory(path)) == 0
    assert len(load_memory(tmp_path / "missing.json")) == 0


def test_lookup_by_target_recency_wins(learned):
    mem = MemoryStore()
    mem.save_skill(learned["pnp"].record)
    newer = SkillRecord(
        name="pnp2",
        tree=learned["pnp"].record.tree,
        actions=learned["pnp"].record.actions,
        target_object="cube",
        goal_object="tray",
        demo_goal_pose=learned["pnp"].record.demo_goal_pose,
    )
    mem.save_skill(newer)
    assert mem.by_target("cube").name == "pnp2"
    assert mem.by_target("ghost") is None


def test_adapt_goal_kitting(skill_memory):
    _, goal, _ = composite_goal_scene("kitting")
    adapted = adapt_goal(goal, skill_memory)
    assert [m.target for m in adapted.matches] == ["piece_a", "piece_b", "piece_c"]
    assert all(m.anchor == "tray" and m.goal_object_present for m in adapted.matches)


def test_adapt_goal_fallback_anchor(skill_memory):
    # cube is memorized (pnp) but its tray is absent; the unknown box anchors
    goal = GoalScene(
        {
            "cube": Pose7((0.4, 0.1, 0.02), I),
            "box": Pose7((0.5, 0.1, 0.0), I),
        }
    )
    adapted = adapt_goal(goal, skill_memory)
    assert len(adapted.matches) == 1
    m = adapted.matches[0]
    assert m.target == "cube" and m.anchor == "box" and not m.goal_object_present
    expected = Pose7((0.5, 0.1, 0.0), I).inverse().compose(Pose7((0.4, 0.1, 0.02), I))
    assert m.new_goal.approx_equal(expected, 1e-12, 1e-9)


def test_adapt_goal_no_matches(skill_memory):
    goal = GoalScene({"mystery": Pose7((0.4, 0.1, 0.02), I)})
    adapted = adapt_goal(goal, skill_memory)
    assert not adapted
    assert adapted.matches == []


def test_adapt_goal_empty_memory():
    with pytest.raises(ValidationError, match="memory is empty"):
        adapt_goal(GoalScene({"cube": Pose7((0, 0, 0), I)}), MemoryStore())


def test_adapt_goal_deterministic(skill_memory):
    _, goal, _ = composite_goal_scene("kitting")
    a = adapt_goal(goal, skill_memory)
    b = adapt_goal(goal, skill_memory)
    assert [(m.target, m.anchor) for m in a.matches] == [
        (m.target, m.anchor) for m in b.matches
    ]


def test_composite_ordering_goal_object_first(skill_memory):
    _, goal, _ = composite_goal_scene("drawer_pnp")
    adapted = adapt_goal(goal, skill_memory)
    record = composite_bt(adapted, skill_memory, name="drawer_pnp")
    # drawer match has its goal object in the scene, so it runs first
    first_actions = [
        n.action for n in record.tree.children[0].iter_nodes() if n.kind is NodeKind.ACTION
    ]
    assert sorted(first_actions) == [1, 2, 3, 4, 5]
    assert record.tree.kind is NodeKind.SEQUENCE
    assert record.tree.memory is True
    assert len(record.tree.children) == 2


def test_composite_kitting_three_subtrees(skill_memory):
    _, goal, _ = composite_goal_scene("kitting")
    record = composite_bt(adapt_goal(goal, skill_memory), skill_memory, name="kit")
    assert len(record.tree.children) == 3
    assert len(record.actions) == 15


def test_composite_single_match(skill_memory):
    goal = GoalScene(
        {
            "cube": Pose7((0.33, -0.18, 0.02), I),
            "tray": Pose7((0.25, -0.18, 0.0), I),
        }
    )
    record = composite_bt(adapt_goal(goal, skill_memory), skill_memory, name="solo")
    assert record.tree.kind is NodeKind.SEQUENCE
    assert len(record.tree.children) == 1


def test_reparameterization_preserves_topology(skill_memory):
    _, goal, _ = composite_goal_scene("kitting")
    adapted = adapt_goal(goal, skill_memory)
    record = composite_bt(adapted, skill_memory, name="kit2")
    for subtree, match in zip(record.tree.children, adapted.matches):
        assert structure_signature(subtree) == structure_signature(match.skill.tree)


def test_reparameterization_rewrites_goal_conditions(skill_memory):
    _, goal, _ = composite_goal_scene("drawer_pnp")
    adapted = adapt_goal(goal, skill_memory)
    pnp_match = next(m for m in adapted.matches if m.target == "cube")
    tree, actions = reparameterize(pnp_match)
    for node in tree.iter_nodes():
        if node.condition is not None and node.condition.variable is Variable.OBJECT:
            assert node.condition.anchor == "drawer"
            assert node.condition.goal_pose.approx_equal(pnp_match.new_goal, 1e-12, 1e-9)
    # goal-anchored actions re-anchor; target-anchored ones do not
    rewritten = {a.relative_object for a in actions}
    assert "tray" not in rewritten
    assert "drawer" in rewritten and "cube" in rewritten


def test_composite_learn_time_zero(skill_memory):
    _, goal, _ = composite_goal_scene("kitting")
    record = composite_bt(adapt_goal(goal, skill_memory), skill_memory, name="kit3")
    assert record.learn_time_s == 0.0


def test_skill_record_action_coverage(learned):
    record = learned["drawer"].record
    with pytest.raises(ValidationError, match="cover"):
        SkillRecord(
            name="broken",
            tree=record.tree,
            actions=record.actions[:-1],
            target_object="handle",
            goal_object="drawer",
            demo_goal_pose=record.demo_goal_pose,
        )


def test_atomic_persistence(tmp_path, learned):
    mem = MemoryStore([learned["drawer"].record])
    path = tmp_path / "m.json"
    mem.save(path)
    assert load_memory(path).names == ["drawer"]
    leftovers = [p for p in tmp_path.iterdir() if p.name.startswith(".memory-")]
    assert leftovers == []


def test_pluggable_matcher(skill_memory):
    # type-style matching: strip a numeric suffix before the id lookup
    def by_prefix(obj_id, mem):
        return mem.by_target(obj_id.rstrip("0123456789_"))

    goal = GoalScene(
        {
            "cube_2": Pose7((0.33, -0.18, 0.02), I),
            "tray": Pose7((0.25, -0.18, 0.0), I),
        }
    )
    adapted = adapt_goal(goal, skill_memory, matcher=by_prefix)
    assert [m.target for m in adapted.matches] == ["cube_2"]
    # both pnp and insert target "cube"; the most recently saved one wins
    assert adapted.matches[0].skill.name == "insert"
    assert adapted.matches[0].skill.target_object == "cube"
