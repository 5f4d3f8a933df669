"""Shared test fixtures: scripted demonstrations and learned skills are built
once per session (learning is deterministic, so sharing is safe)."""

from __future__ import annotations

import pytest

from cobt.fixtures import build_fixture, kitting_piece_fixtures
from cobt.memory import MemoryStore
from cobt.pipeline import learn_skill

TASK_NAMES = ("drawer", "pnp", "insert", "pouring")


@pytest.fixture(scope="session")
def task_fixtures():
    return {name: build_fixture(name) for name in TASK_NAMES}


@pytest.fixture(scope="session")
def learned(task_fixtures):
    return {
        name: learn_skill(fx.demo, fx.target, fx.goal, name)
        for name, fx in task_fixtures.items()
    }


@pytest.fixture(scope="session")
def skill_memory(learned):
    """Memory holding the four task skills plus the three kitting pieces."""
    mem = MemoryStore()
    for result in learned.values():
        mem.save_skill(result.record)
    for fx in kitting_piece_fixtures():
        mem.save_skill(learn_skill(fx.demo, fx.target, fx.goal, fx.name).record)
    return mem
