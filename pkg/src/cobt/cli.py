"""Command line interface.

Subcommands: segment, learn, exec, trials, compose, serve, plus synth for
generating the built-in scripted fixtures. Report paths write figures (PNG)
alongside the JSON/CSV outputs. Exit codes: 0 success, 2 validation error,
3 execution failure, 4 tick budget exhaustion.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bt import export_dot, save_tree
from .demo import load_demonstration, save_demonstration
from .errors import BudgetExhaustedError, CobtError, ExecutionError, ValidationError
from .fixtures import FIXTURE_BUILDERS, build_fixture, composite_goal_scene
from .memory import GoalScene, adapt_goal, composite_bt, load_memory
from .pipeline import learn_skill
from .primitives import save_actions
from .runtime import DEFAULT_MAX_TICKS, DEFAULT_TICK_RATE, DEFAULT_TIME_SCALE, ExecutionSession
from .segmentation import GROUNDING_THRESHOLD, segment
from .sim import PerturbationScript, load_scene, scene_to_json
from .trials import run_trials

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_EXECUTION = 3
EXIT_BUDGET = 4


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_groups(scene_path) -> list[list[str]]:
    data = json.loads(Path(scene_path).read_text())
    return [list(g) for g in data.get("groups", [])]


def cmd_segment(args) -> int:
    demo = load_demonstration(args.demo)
    seg = segment(demo, args.target, args.goal, threshold=args.threshold, penalty=args.penalty)
    out = _out_dir(args)
    seg.save(out / "segments.json")
    from .report import render_segmentation

    render_segmentation(demo, seg, out / "segmentation.png")
    print(f"segmented into {seg.action_count} actions -> {out/'segments.json'}")
    return EXIT_OK


def cmd_learn(args) -> int:
    demo = load_demonstration(args.demo)
    result = learn_skill(
        demo,
        args.target,
        args.goal,
        args.name,
        threshold=args.threshold,
        penalty=args.penalty,
        precondition_style=args.bt_style,
    )
    out = _out_dir(args)
    result.seg.save(out / "segments.json")
    save_actions(result.record.actions, out / "actions.json")
    save_tree(result.record.tree, out / "bt.json")
    (out / "bt.dot").write_text(export_dot(result.record.tree))
    from .report import render_segmentation

    render_segmentation(demo, result.seg, out / "segmentation.png")
    if args.memory:
        memory = load_memory(args.memory)
        memory.save_skill(result.record)
        memory.save(args.memory)
    print(
        f"learned {args.name!r}: {len(result.record.actions)} actions "
        f"in {result.learn_time_s:.2f}s -> {out}"
    )
    return EXIT_OK


def cmd_exec(args) -> int:
    memory = load_memory(args.memory)
    record = memory.get(args.skill)
    world = load_scene(args.scene)
    script = PerturbationScript.load(args.perturb) if args.perturb else None
    session = ExecutionSession(
        record.tree,
        record.actions,
        world,
        tick_rate_hz=args.tick_rate,
        max_ticks=args.max_ticks,
        time_scale=args.time_scale,
        fix_reverse_transform=args.fix_reverse_transform,
        perturbations=script,
    )
    out = _out_dir(args)
    code = EXIT_OK
    try:
        trace = session.run_to_completion()
        print(f"success in {trace.ticks} ticks; executions {trace.action_executions}")
    except BudgetExhaustedError as exc:
        trace = exc.trace
        print(f"tick budget exhausted after {trace.ticks} ticks", file=sys.stderr)
        code = EXIT_BUDGET
    trace.save_jsonl(out / "trace.jsonl")
    from .report import render_execution

    render_execution(session.ee_path, session.world, out / "exec.png")
    return code


def cmd_trials(args) -> int:
    memory = load_memory(args.memory)
    record = memory.get(args.skill)
    template = load_scene(args.scene)
    groups = _load_groups(args.scene)
    factory = None
    if args.perturb:
        script_data = json.loads(Path(args.perturb).read_text())
        factory = lambda i: PerturbationScript.from_json(script_data)  # noqa: E731
    report = run_trials(
        record,
        template,
        n=args.n,
        base_seed=args.seed,
        groups=groups or None,
        perturbation_factory=factory,
        tick_rate_hz=args.tick_rate,
        max_ticks=args.max_ticks,
        time_scale=args.time_scale,
        fix_reverse_transform=args.fix_reverse_transform,
    )
    out = _out_dir(args)
    report.save(out / "report.json")
    report.save_csv(out / "trials.csv")
    from .report import render_trials

    render_trials(report, out / "trials.png")
    print(f"{report.successes}/{len(report.trials)} trials succeeded -> {out/'trials.csv'}")
    return EXIT_OK


def cmd_compose(args) -> int:
    memory = load_memory(args.memory)
    goal_scene = GoalScene.load(args.goal_scene)
    adapted = adapt_goal(goal_scene, memory)
    if not adapted:
        print("no memorized skills match the goal scene", file=sys.stderr)
        return EXIT_VALIDATION
    record = composite_bt(adapted, memory, name=args.name)
    out = _out_dir(args)
    save_tree(record.tree, out / "bt.json")
    (out / "bt.dot").write_text(export_dot(record.tree))
    if args.save:
        memory.save_skill(record)
        memory.save(args.memory)
    matched = ", ".join(m.target for m in adapted.matches)
    print(f"composed {args.name!r} from [{matched}] -> {out/'bt.json'}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import CobtServer

    server = CobtServer(host=args.host, port=args.port, memory_path=args.memory)
    server.start()
    print(f"LISTENING {server.port}", flush=True)
    try:
        server.wait()
    except KeyboardInterrupt:
        server.stop()
    return EXIT_OK


def cmd_synth(args) -> int:
    out = _out_dir(args)
    if args.fixture in FIXTURE_BUILDERS:
        fx = build_fixture(args.fixture)
        save_demonstration(fx.demo, out / f"{fx.name}_demo.jsonl")
        scene = scene_to_json(fx.scene)
        if fx.groups:
            scene["groups"] = fx.groups
        (out / f"{fx.name}_scene.json").write_text(json.dumps(scene, indent=2) + "\n")
        print(f"wrote {fx.name} demo + scene (target={fx.target}, goal={fx.goal}) -> {out}")
        return EXIT_OK
    if args.fixture in ("kitting", "drawer_pnp"):
        scene, goal_scene, groups = composite_goal_scene(args.fixture)
        data = scene_to_json(scene)
        if groups:
            data["groups"] = groups
        (out / f"{args.fixture}_scene.json").write_text(json.dumps(data, indent=2) + "\n")
        (out / f"{args.fixture}_goal.json").write_text(
            json.dumps(goal_scene.to_json(), indent=2) + "\n"
        )
        print(f"wrote {args.fixture} scene + goal scene -> {out}")
        return EXIT_OK
    raise ValidationError(f"unknown fixture {args.fixture!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cobt", description="demonstration-to-behavior-tree workbench"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common_exec(p):
        p.add_argument("--time-scale", type=float, default=DEFAULT_TIME_SCALE)
        p.add_argument("--tick-rate", type=float, default=DEFAULT_TICK_RATE)
        p.add_argument("--max-ticks", type=int, default=DEFAULT_MAX_TICKS)
        p.add_argument("--fix-reverse-transform", action="store_true")

    p = sub.add_parser("segment", help="segment a demonstration file")
    p.add_argument("--demo", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--goal", required=True)
    p.add_argument("--threshold", type=float, default=GROUNDING_THRESHOLD)
    p.add_argument("--penalty", type=float, default=None)
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("learn", help="demonstration file to saved skill")
    p.add_argument("--demo", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--goal", required=True)
    p.add_argument("--name", required=True)
    p.add_argument("--memory", default=None)
    p.add_argument("--threshold", type=float, default=GROUNDING_THRESHOLD)
    p.add_argument("--penalty", type=float, default=None)
    p.add_argument("--bt-style", choices=("parallel", "sequence"), default="parallel")
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("exec", help="execute a stored skill in a scene")
    p.add_argument("--memory", required=True)
    p.add_argument("--skill", required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("--perturb", default=None)
    common_exec(p)
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_exec)

    p = sub.add_parser("trials", help="randomized-scene trial campaign")
    p.add_argument("--memory", required=True)
    p.add_argument("--skill", required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("-n", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perturb", default=None)
    common_exec(p)
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("compose", help="build a composite tree for a goal scene")
    p.add_argument("--memory", required=True)
    p.add_argument("--goal-scene", required=True)
    p.add_argument("--name", default="composite")
    p.add_argument("--save", action="store_true")
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("serve", help="run the session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--memory", default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth", help="generate built-in fixture files")
    p.add_argument("--fixture", required=True)
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BudgetExhaustedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ExecutionError, CobtError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXECUTION


if __name__ == "__main__":
    sys.exit(main())
