"""Figure rendering for the CLI report paths (PNG files next to the delimited
and JSON outputs)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .demo import Demonstration
from .segmentation import SegmentedDataset, smooth_velocity, velocity_norms
from .trials import TrialReport


def render_segmentation(demo: Demonstration, seg: SegmentedDataset, path) -> None:
    """Speed profile with detected boundaries and the gripper channel."""
    t = demo.times()
    v_raw = velocity_norms(demo)
    v = smooth_velocity(v_raw)
    fig, ax = plt.subplots(figsize=(9, 4))
    ax.plot(t, v_raw, color="0.8", lw=0.8, label="speed")
    ax.plot(t, v, color="C0", lw=1.4, label="speed (smoothed)")
    for i, b in enumerate(seg.boundaries):
        ax.axvline(t[b], color="C3", lw=1.0, ls="--", alpha=0.8)
        triple = seg.states[i].as_triple()
        ax.annotate(
            f"{'/'.join(triple)}",
            (t[b], ax.get_ylim()[1]),
            rotation=90,
            fontsize=6,
            va="top",
            ha="right",
        )
    ax2 = ax.twinx()
    ax2.plot(t, demo.gripper_values(), color="C2", lw=1.0, alpha=0.7, label="gripper")
    ax2.set_ylabel("gripper closure")
    ax2.set_ylim(-0.05, 1.05)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("end-effector speed (m/s)")
    ax.set_title(f"segmentation: {seg.action_count} actions, target={seg.target_object}")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_trials(report: TrialReport, path) -> None:
    """Per-trial tick counts, colored by outcome, with retry annotations."""
    n = len(report.trials)
    fig, ax = plt.subplots(figsize=(max(6, 0.4 * n + 2), 4))
    xs = np.arange(n)
    ticks = [t.ticks for t in report.trials]
    colors = ["C2" if t.success else "C3" for t in report.trials]
    ax.bar(xs, ticks, color=colors)
    for x, t in zip(xs, report.trials):
        retried = t.retried_actions()
        if retried:
            ax.annotate(
                "r" + ",".join(map(str, retried)),
                (x, t.ticks),
                ha="center",
                va="bottom",
                fontsize=6,
            )
    ax.set_xlabel("trial")
    ax.set_ylabel("ticks to completion")
    ax.set_title(
        f"{report.skill}: {report.successes}/{n} successful "
        f"(rate {report.success_rate:.2f})"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_execution(ee_path, world, path, events=None) -> None:
    """Top-down view of the executed end-effector path and final object poses."""
    pts = np.asarray(ee_path)
    fig, ax = plt.subplots(figsize=(6, 6))
    if len(pts):
        ax.plot(pts[:, 0], pts[:, 1], color="C0", lw=1.0, label="ee path")
        ax.plot(pts[0, 0], pts[0, 1], "C0o", ms=6)
        ax.plot(pts[-1, 0], pts[-1, 1], "C0s", ms=6)
    for obj_id in sorted(world.objects):
        p = world.objects[obj_id].p
        ax.plot(p[0], p[1], "C1^", ms=8)
        ax.annotate(obj_id, (p[0], p[1]), fontsize=8, xytext=(3, 3),
                    textcoords="offset points")
    lo, hi = world.bounds
    ax.set_xlim(lo[0] - 0.02, hi[0] + 0.02)
    ax.set_ylim(lo[1] - 0.02, hi[1] + 0.02)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    n_events = len(events) if events else 0
    ax.set_title(f"execution path ({len(pts)} ticks, {n_events} events)")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
