"""Seeded trial harness: randomized scenes, optional scripted perturbations,
per-trial outcome records and an aggregate report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .errors import BudgetExhaustedError
from .memory import SkillRecord
from .runtime import DEFAULT_MAX_TICKS, DEFAULT_TICK_RATE, DEFAULT_TIME_SCALE, ExecutionSession
from .sim import DEFAULT_TRIAL_AREA, PerturbationScript, WorldState, randomize_scene


@dataclass
class TrialResult:
    seed: int
    success: bool
    ticks: int
    action_executions: dict[int, int]

    def retried_actions(self) -> list[int]:
        return sorted(k for k, v in self.action_executions.items() if v > 1)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "success": self.success,
            "ticks": self.ticks,
            "action_executions": {str(k): v for k, v in sorted(self.action_executions.items())},
        }


@dataclass
class TrialReport:
    skill: str
    trials: list[TrialResult] = field(default_factory=list)
    learn_time_s: float = 0.0

    @property
    def successes(self) -> int:
        return sum(t.success for t in self.trials)

    @property
    def success_rate(self) -> float:
        return self.successes / len(self.trials) if self.trials else 0.0

    def to_json(self) -> dict:
        return {
            "skill": self.skill,
            "trials": [t.to_json() for t in self.trials],
            "successes": self.successes,
            "total": len(self.trials),
            "success_rate": self.success_rate,
            "learn_time_s": self.learn_time_s,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    def csv_rows(self) -> list[str]:
        rows = ["trial,seed,success,ticks,retried_actions"]
        for i, t in enumerate(self.trials):
            retried = ";".join(map(str, t.retried_actions()))
            rows.append(f"{i},{t.seed},{int(t.success)},{t.ticks},{retried}")
        return rows

    def save_csv(self, path) -> None:
        Path(path).write_text("\n".join(self.csv_rows()) + "\n")


def run_trials(
    record: SkillRecord,
    template: WorldState,
    n: int,
    base_seed: int = 0,
    area: tuple = DEFAULT_TRIAL_AREA,
    groups: Sequence[Sequence[str]] | None = None,
    perturbation_factory: Callable[[int], PerturbationScript | None] | None = None,
    tick_rate_hz: float = DEFAULT_TICK_RATE,
    max_ticks: int = DEFAULT_MAX_TICKS,
    time_scale: float = DEFAULT_TIME_SCALE,
    fix_reverse_transform: bool = False,
    min_separation: float = 0.10,
) -> TrialReport:
    """Execute a skill n times over seeded randomized scenes.

    Trial i uses seed base_seed + i for the scene draw, so reports are exactly
    reproducible. A budget exhaustion counts as a failed trial, any other
    error propagates.
    """
    report = TrialReport(skill=record.name, learn_time_s=record.learn_time_s)
    for i in range(n):
        seed = base_seed + i
        world = randomize_scene(
            template, area=area, seed=seed, groups=groups, min_separation=min_separation
        )
        script = perturbation_factory(i) if perturbation_factory else None
        session = ExecutionSession(
            record.tree,
            record.actions,
            world,
            tick_rate_hz=tick_rate_hz,
            max_ticks=max_ticks,
            time_scale=time_scale,
            fix_reverse_transform=fix_reverse_transform,
            perturbations=script,
        )
        try:
            trace = session.run_to_completion()
            result = TrialResult(seed, True, trace.ticks, dict(trace.action_executions))
        except BudgetExhaustedError as exc:
            trace = exc.trace
            result = TrialResult(seed, False, trace.ticks, dict(trace.action_executions))
        report.trials.append(result)
    return report
