"""cobt: turn one demonstrated manipulation into a reactive behavior tree.

Pipeline: record or synthesize a demonstration, segment it on the
end-effector speed profile, ground symbolic states, train motion primitives
per segment, compile the state/action constraints into a behavior tree, and
execute it reactively in a deterministic kinematic simulator.
"""

from .bt import BTNode, Condition, cond_abstraction, cond_to_tree, export_dot
from .demo import DemoSample, Demonstration, load_demonstration, save_demonstration
from .dmp import DmpModel, DmpSet, rollout, train_dmp, train_dmp_set
from .errors import BudgetExhaustedError, CobtError, ExecutionError, ValidationError
from .geometry import Pose7, pose_distance, quat_normalize
from .memory import (
    GoalScene,
    MemoryStore,
    SkillRecord,
    adapt_goal,
    composite_bt,
    load_memory,
)
from .pipeline import LearnResult, generate_bt, learn_skill
from .primitives import PrimitiveAction, learn_primitives
from .runtime import ExecutionSession, ExecutionTrace, TickStatus, eval_condition
from .segmentation import SegmentedDataset, SymbolicState, segment
from .sim import GripEvent, MotionLeg, WorldState, randomize_scene, synth_demo
from .trials import TrialReport, run_trials

__version__ = "0.1.0"

__all__ = [
    "BTNode",
    "Condition",
    "cond_abstraction",
    "cond_to_tree",
    "export_dot",
    "DemoSample",
    "Demonstration",
    "load_demonstration",
    "save_demonstration",
    "DmpModel",
    "DmpSet",
    "rollout",
    "train_dmp",
    "train_dmp_set",
    "BudgetExhaustedError",
    "CobtError",
    "ExecutionError",
    "ValidationError",
    "Pose7",
    "pose_distance",
    "quat_normalize",
    "GoalScene",
    "MemoryStore",
    "SkillRecord",
    "adapt_goal",
    "composite_bt",
    "load_memory",
    "LearnResult",
    "generate_bt",
    "learn_skill",
    "PrimitiveAction",
    "learn_primitives",
    "ExecutionSession",
    "ExecutionTrace",
    "TickStatus",
    "eval_condition",
    "SegmentedDataset",
    "SymbolicState",
    "segment",
    "GripEvent",
    "MotionLeg",
    "WorldState",
    "randomize_scene",
    "synth_demo",
    "TrialReport",
    "run_trials",
    "__version__",
]
