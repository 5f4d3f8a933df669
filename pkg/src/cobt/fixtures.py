"""Scripted demonstration fixtures: drawer, pick-and-place, insert and pouring
analogs, plus composite-task goal scenes.

Each fixture scripts a scene template and a motion/gripper schedule whose
synthesized recording segments into a known action structure. The geometry is
chosen so the 5 cm grounding threshold produces unambiguous symbolic
transitions (e.g. approach legs end 1.5 cm from the target, goal zones do not
overlap proximity zones except where intended).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .demo import Demonstration
from .geometry import Pose7
from .sim import DEFAULT_BOUNDS, GripEvent, MotionLeg, WorldState, synth_demo

HOME = (0.15, -0.28, 0.32)
IDENTITY_Q = (1.0, 0.0, 0.0, 0.0)


@dataclass
class Fixture:
    """A scene template plus the demonstration recorded in it."""

    name: str
    scene: WorldState
    demo: Demonstration
    target: str
    goal: str
    groups: list[list[str]] = field(default_factory=list)


def _scene(objects: dict[str, tuple], ee=HOME) -> WorldState:
    return WorldState(
        objects={k: Pose7(v, IDENTITY_Q) for k, v in objects.items()},
        ee=Pose7(ee, IDENTITY_Q),
        gripper=0.0,
        bounds=DEFAULT_BOUNDS.copy(),
    )


def drawer_fixture() -> Fixture:
    """Open a drawer: reach the handle, grasp, pull 10 cm, release, retract.

    The drawer is two rigid objects; the base origin sits just beside the
    handle's open position so the pull approaches a static anchor.
    """
    scene = _scene({"handle": (0.50, 0.00, 0.12), "drawer": (0.40, 0.04, 0.10)})
    legs = [
        MotionLeg(0.0, 0.9, (0.50, 0.00, 0.32)),
        MotionLeg(1.0, 1.6, (0.50, 0.00, 0.135)),  # fine approach, ends 1.5 cm above handle
        MotionLeg(2.5, 3.7, (0.40, 0.00, 0.135)),  # pull
        MotionLeg(4.6, 5.8, HOME),
    ]
    grips = [GripEvent(2.0, 1.0), GripEvent(4.1, 0.0)]
    demo, _ = synth_demo(scene, legs, grips, t_end=5.8, meta={"task": "drawer"})
    return Fixture("drawer", scene, demo, target="handle", goal="drawer",
                   groups=[["handle", "drawer"]])


def pnp_fixture(
    name: str = "pnp",
    cube_id: str = "cube",
    tray_id: str = "tray",
    cube_pos: tuple = (0.55, 0.18, 0.02),
    tray_pos: tuple = (0.25, -0.18, 0.0),
) -> Fixture:
    """Pick a cube and place it on a tray (reach, grasp, move, release, retract)."""
    scene = _scene({cube_id: cube_pos, tray_id: tray_pos})
    cx, cy, cz = cube_pos
    tx, ty, tz = tray_pos
    place = (tx + 0.08, ty, cz)  # cube lands offset from the tray origin
    legs = [
        MotionLeg(0.0, 0.9, (cx, cy, cz + 0.20)),
        MotionLeg(1.0, 1.6, (cx, cy, cz + 0.015)),
        MotionLeg(2.5, 2.9, (cx, cy, cz + 0.13)),  # lift clear of the table
        MotionLeg(2.9, 4.0, (place[0], place[1], place[2] + 0.13)),
        MotionLeg(4.0, 4.6, (place[0], place[1], place[2] + 0.015)),
        MotionLeg(5.4, 6.6, HOME),
    ]
    grips = [GripEvent(2.0, 1.0), GripEvent(4.9, 0.0)]
    demo, _ = synth_demo(scene, legs, grips, t_end=6.6, meta={"task": name})
    return Fixture(name, scene, demo, target=cube_id, goal=tray_id)


def insert_fixture() -> Fixture:
    """Insert a cube into a slot: like pick-and-place but with a distinct
    hover-then-descend profile ending at the slot origin."""
    scene = _scene({"cube": (0.58, 0.20, 0.02), "slot": (0.30, -0.15, 0.0)})
    legs = [
        MotionLeg(0.0, 0.9, (0.58, 0.20, 0.22)),
        MotionLeg(1.0, 1.6, (0.58, 0.20, 0.035)),
        MotionLeg(2.5, 3.7, (0.30, -0.15, 0.105)),  # hover 8 cm above the slot
        MotionLeg(3.9, 4.7, (0.30, -0.15, 0.025)),  # descend into the slot
        MotionLeg(5.6, 6.8, HOME),
    ]
    grips = [GripEvent(2.0, 1.0), GripEvent(5.0, 0.0)]
    demo, _ = synth_demo(scene, legs, grips, t_end=6.8, meta={"task": "insert"})
    return Fixture("insert", scene, demo, target="cube", goal="slot")


def pouring_fixture() -> Fixture:
    """Carry a cup next to another, tilt to pour, set it down nearby.

    The grasp is taken at the cup origin so the in-place tilt does not move
    the carried cup; the tilt exercises the orientation channel.
    """
    scene = _scene({"cup_a": (0.55, 0.20, 0.05), "cup_b": (0.55, -0.15, 0.05)})
    pour_pt = (0.55, -0.125, 0.085)  # 4.3 cm from cup_b, > 5 cm from the rest pose
    rest = (0.55, -0.175, 0.05)  # 2.5 cm from cup_b
    tilt_q = (np.cos(np.deg2rad(55)), np.sin(np.deg2rad(55)), 0.0, 0.0)  # 110 deg about x
    legs = [
        MotionLeg(0.0, 0.9, (0.55, 0.20, 0.25)),
        MotionLeg(1.0, 1.6, (0.55, 0.20, 0.05)),  # grasp at the cup origin
        MotionLeg(2.5, 3.9, pour_pt),
        MotionLeg(4.1, 4.9, pour_pt, quat=tilt_q),  # pour
        MotionLeg(5.1, 5.9, pour_pt, quat=IDENTITY_Q),  # back upright
        MotionLeg(6.1, 7.1, rest),
        MotionLeg(8.0, 9.2, HOME),
    ]
    grips = [GripEvent(2.0, 1.0), GripEvent(7.4, 0.0)]
    demo, _ = synth_demo(scene, legs, grips, t_end=9.2, meta={"task": "pouring"})
    return Fixture("pouring", scene, demo, target="cup_a", goal="cup_b")


def kitting_piece_fixtures() -> list[Fixture]:
    """Three pick-and-place demonstrations, one per kit piece."""
    spots = [(0.55, 0.18, 0.02), (0.62, 0.05, 0.02), (0.48, 0.30, 0.02)]
    return [
        pnp_fixture(name=f"pnp_{pid}", cube_id=pid, cube_pos=pos)
        for pid, pos in zip(("piece_a", "piece_b", "piece_c"), spots)
    ]


FIXTURE_BUILDERS = {
    "drawer": drawer_fixture,
    "pnp": pnp_fixture,
    "insert": insert_fixture,
    "pouring": pouring_fixture,
}


def build_fixture(name: str) -> Fixture:
    try:
        return FIXTURE_BUILDERS[name]()
    except KeyError:
        raise ValueError(f"unknown fixture {name!r}, have {sorted(FIXTURE_BUILDERS)}") from None


def composite_goal_scene(name: str):
    """Execution scene template plus user goal scene for the composite tasks.

    Goal poses are relative arrangements (anchored to scene objects), so they
    stay valid when the execution scene is randomized. Slot spacing keeps the
    placing motions clear of already-placed objects and their 5 cm zones.
    """
    from .memory import GoalScene

    if name == "drawer_pnp":
        scene = _scene(
            {
                "handle": (0.50, 0.00, 0.12),
                "drawer": (0.40, 0.04, 0.10),
                "cube": (0.55, 0.25, 0.02),
            }
        )
        goal = GoalScene(
            {
                "handle": Pose7((0.40, 0.00, 0.12), IDENTITY_Q),  # drawer open
                "drawer": Pose7((0.40, 0.04, 0.10), IDENTITY_Q),
                "cube": Pose7((0.46, 0.07, 0.13), IDENTITY_Q),  # inside the open drawer
            }
        )
        return scene, goal, [["handle", "drawer"]]
    if name == "kitting":
        tray = (0.25, -0.18, 0.0)
        scene = _scene(
            {
                "piece_a": (0.55, 0.18, 0.02),
                "piece_b": (0.62, 0.05, 0.02),
                "piece_c": (0.48, 0.30, 0.02),
                "tray": tray,
            }
        )
        slots = {
            "piece_a": (tray[0] + 0.09, tray[1] - 0.09, 0.02),
            "piece_b": (tray[0] + 0.09, tray[1] + 0.09, 0.02),
            "piece_c": (tray[0] - 0.09, tray[1], 0.02),
        }
        goal = GoalScene(
            {
                "tray": Pose7(tray, IDENTITY_Q),
                **{pid: Pose7(p, IDENTITY_Q) for pid, p in slots.items()},
            }
        )
        return scene, goal, []
    raise ValueError(f"unknown composite fixture {name!r}")
