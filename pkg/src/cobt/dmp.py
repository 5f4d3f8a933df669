"""Cartesian dynamic movement primitives with quaternion orientation.

A model is a critically damped attractor toward a goal pose plus a learned
forcing term over a decaying phase variable. Position runs in R^3; orientation
runs in rotation-vector error space on unit quaternions. The gripper channel
replays the demonstrated profile time-aligned to the phase rather than fitting
a second-order system. Each trained set carries a forward model and a reverse
model fitted on the time-reversed segment, so executions whose geometry
opposes the demonstration can follow the opposite shape.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ExecutionError, ValidationError
from .geometry import (
    Pose7,
    quat_canonical,
    quat_conjugate,
    quat_from_rotvec,
    quat_multiply,
    quat_normalize,
    rotvec_from_quat,
)

ALPHA_Z = 25.0
BETA_Z = ALPHA_Z / 4.0  # critical damping
ALPHA_X = 4.6  # phase decays to ~1% at tau
N_BASIS = 30
GRIPPER_PROFILE_LEN = 64
MIN_SEGMENT_SAMPLES = 5
MAX_INTERNAL_STEP = 0.002  # s, integration substep cap
MIN_INTEGRATION_STEPS = 50  # per rollout, keeps short segments stable


def _basis_params(n_basis: int, alpha_x: float) -> tuple[np.ndarray, np.ndarray]:
    centers = np.exp(-alpha_x * np.linspace(0.0, 1.0, n_basis))
    widths = np.empty(n_basis)
    widths[:-1] = 1.0 / (2.0 * (0.65 * np.diff(centers)) ** 2)
    widths[-1] = widths[-2]
    return centers, widths


def _forcing(x, centers, widths, weights) -> np.ndarray:
    """Weighted basis activation scaled by the phase: f(x) = x * sum(psi w)/sum(psi)."""
    psi = np.exp(-widths * (x - centers) ** 2)
    return x * (psi @ weights) / (np.sum(psi) + 1e-12)


@dataclass
class DmpModel:
    """One trained primitive: forcing weights plus the demonstrated endpoints."""

    weights: np.ndarray  # (K, 3) position forcing
    orient_weights: np.ndarray  # (K, 3) orientation forcing
    basis_centers: np.ndarray
    basis_widths: np.ndarray
    alpha_z: float
    beta_z: float
    alpha_x: float
    tau: float
    start: Pose7
    goal: Pose7
    gripper_profile: np.ndarray  # replayed time-aligned to the rollout

    def __post_init__(self):
        if len(self.basis_centers) < 10:
            raise ValidationError("need at least 10 basis functions")
        if self.tau <= 0:
            raise ValidationError(f"tau must be positive, got {self.tau}")
        if abs(self.alpha_z - 4.0 * self.beta_z) > 1e-9:
            raise ValidationError("gains must satisfy alpha_z = 4 * beta_z")

    @property
    def gripper_end(self) -> float:
        return float(self.gripper_profile[-1])

    def to_json(self) -> dict:
        return {
            "weights": [float(v) for v in self.weights.ravel()],
            "orient_weights": [float(v) for v in self.orient_weights.ravel()],
            "basis_centers": [float(v) for v in self.basis_centers],
            "basis_widths": [float(v) for v in self.basis_widths],
            "alpha_z": self.alpha_z,
            "beta_z": self.beta_z,
            "alpha_x": self.alpha_x,
            "tau": self.tau,
            "start": self.start.to_list(),
            "goal": self.goal.to_list(),
            "gripper_profile": [float(v) for v in self.gripper_profile],
        }

    @classmethod
    def from_json(cls, data: dict) -> "DmpModel":
        k = len(data["basis_centers"])
        return cls(
            weights=np.array(data["weights"]).reshape(k, 3),
            orient_weights=np.array(data["orient_weights"]).reshape(k, 3),
            basis_centers=np.array(data["basis_centers"]),
            basis_widths=np.array(data["basis_widths"]),
            alpha_z=float(data["alpha_z"]),
            beta_z=float(data["beta_z"]),
            alpha_x=float(data["alpha_x"]),
            tau=float(data["tau"]),
            start=Pose7.from_list(data["start"]),
            goal=Pose7.from_list(data["goal"]),
            gripper_profile=np.array(data["gripper_profile"]),
        )


@dataclass
class DmpSet:
    """Forward model plus the model trained on the time-reversed segment."""

    forward: DmpModel
    reverse: DmpModel

    def __post_init__(self):
        if not (
            self.forward.start.approx_equal(self.reverse.goal, 1e-6, 1e-6)
            and self.forward.goal.approx_equal(self.reverse.start, 1e-6, 1e-6)
        ):
            raise ValidationError("reverse model endpoints must mirror the forward model")

    def to_json(self) -> dict:
        return {"forward": self.forward.to_json(), "reverse": self.reverse.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> "DmpSet":
        return cls(DmpModel.from_json(data["forward"]), DmpModel.from_json(data["reverse"]))


@dataclass
class Rollout:
    """Integrated trajectory: times, poses and gripper targets per step."""

    t: np.ndarray
    positions: np.ndarray  # (n, 3)
    quats: np.ndarray  # (n, 4)
    gripper: np.ndarray  # (n,)

    def __len__(self) -> int:
        return len(self.t)

    def pose(self, i: int) -> Pose7:
        return Pose7(self.positions[i], self.quats[i])

    @property
    def duration(self) -> float:
        return float(self.t[-1])


def _angular_velocities(quats: np.ndarray, times: np.ndarray) -> np.ndarray:
    """World-frame angular velocity per sample from quaternion differences."""
    n = len(quats)
    omega = np.zeros((n, 3))
    for i in range(n):
        lo, hi = max(i - 1, 0), min(i + 1, n - 1)
        dt = times[hi] - times[lo]
        if dt <= 0:
            continue
        rel = quat_multiply(quats[hi], quat_conjugate(quats[lo]))
        omega[i] = rotvec_from_quat(rel) / dt
    return omega


def train_dmp(
    times: np.ndarray,
    positions: np.ndarray,
    quats: np.ndarray,
    gripper: np.ndarray,
    n_basis: int = N_BASIS,
) -> DmpModel:
    """Fit forcing weights so the integrated model reproduces the segment.

    Per-basis locally weighted regression on the forcing target computed from
    the demonstrated derivatives; orientation is fitted in rotation-vector
    error space against the goal quaternion.
    """
    times = np.asarray(times, dtype=float)
    positions = np.asarray(positions, dtype=float)
    quats = np.array([quat_canonical(quat_normalize(q)) for q in np.asarray(quats, dtype=float)])
    gripper = np.asarray(gripper, dtype=float)
    if len(times) < MIN_SEGMENT_SAMPLES:
        raise ValidationError(f"segment too short: {len(times)} samples")
    tau = float(times[-1] - times[0])
    if tau <= 0:
        raise ValidationError("zero-duration segment")
    t = times - times[0]
    x = np.exp(-ALPHA_X * t / tau)
    centers, widths = _basis_params(n_basis, ALPHA_X)
    psi = np.exp(-widths[None, :] * (x[:, None] - centers[None, :]) ** 2)  # (n, K)
    design = psi * (x / (psi.sum(axis=1) + 1e-12))[:, None]  # rows: f(x_t) per unit weight

    def fit(f_target: np.ndarray) -> np.ndarray:
        # ridge-regularized least squares on the realized forcing
        gram = design.T @ design + 1e-8 * np.eye(n_basis)
        return np.linalg.solve(gram, design.T @ f_target)

    goal_p = positions[-1]
    dy = np.gradient(positions, t, axis=0)
    ddy = np.gradient(dy, t, axis=0)
    f_pos = tau**2 * ddy - ALPHA_Z * (BETA_Z * (goal_p[None, :] - positions) - tau * dy)
    weights = fit(f_pos)

    goal_q = quats[-1]
    err = np.array([rotvec_from_quat(quat_multiply(goal_q, quat_conjugate(q))) for q in quats])
    eta = tau * _angular_velocities(quats, t)
    deta = np.gradient(eta, t, axis=0)
    f_orient = tau * deta - ALPHA_Z * (BETA_Z * err - eta)
    orient_weights = fit(f_orient)

    profile = np.interp(
        np.linspace(0.0, tau, GRIPPER_PROFILE_LEN), t, gripper
    )
    return DmpModel(
        weights=weights,
        orient_weights=orient_weights,
        basis_centers=centers,
        basis_widths=widths,
        alpha_z=ALPHA_Z,
        beta_z=BETA_Z,
        alpha_x=ALPHA_X,
        tau=tau,
        start=Pose7(positions[0], quats[0]),
        goal=Pose7(goal_p, goal_q),
        gripper_profile=profile,
    )


def train_dmp_set(times, positions, quats, gripper, n_basis: int = N_BASIS) -> DmpSet:
    """Train the forward model and its time-reversed counterpart."""
    times = np.asarray(times, dtype=float)
    forward = train_dmp(times, positions, quats, gripper, n_basis)
    t_rev = times[-1] - times[::-1]
    reverse = train_dmp(
        t_rev,
        np.asarray(positions)[::-1],
        np.asarray(quats)[::-1],
        np.asarray(gripper)[::-1],
        n_basis,
    )
    return DmpSet(forward=forward, reverse=reverse)


def rollout(
    model: DmpModel,
    start: Pose7 | None = None,
    goal: Pose7 | None = None,
    time_scale: float = 1.0,
    dt: float = 0.01,
) -> Rollout:
    """Integrate the model from start to goal with duration tau * time_scale.

    Semi-implicit Euler; long output steps are internally substepped so short
    segments stay numerically stable. Output rows are spaced dt apart.
    """
    if time_scale <= 0:
        raise ValidationError(f"time_scale must be positive, got {time_scale}")
    if dt <= 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    start = start if start is not None else model.start
    goal = goal if goal is not None else model.goal
    tau = model.tau * time_scale
    n_steps = max(1, int(round(tau / dt)))
    h_max = min(MAX_INTERNAL_STEP, tau / MIN_INTEGRATION_STEPS)
    n_sub = max(1, int(np.ceil(dt / h_max)))
    h = dt / n_sub

    y = start.p.copy()
    z = np.zeros(3)
    q = start.q.copy()
    eta = np.zeros(3)
    # keep the goal on the same quaternion cover as the start
    goal_q = np.asarray(goal.q) if np.dot(goal.q, q) >= 0 else -np.asarray(goal.q)

    # the phase is an exact exponential, so all forcing values are precomputable
    sub_t = np.minimum((np.arange(n_steps * n_sub) + 1) * h, tau)
    x_all = np.exp(-model.alpha_x * sub_t / tau)
    psi = np.exp(-model.basis_widths[None, :] * (x_all[:, None] - model.basis_centers[None, :]) ** 2)
    scale = x_all / (psi.sum(axis=1) + 1e-12)
    f_pos_all = (psi @ model.weights) * scale[:, None]
    f_orient_all = (psi @ model.orient_weights) * scale[:, None]

    out_t = np.arange(n_steps + 1) * dt
    out_p = np.empty((n_steps + 1, 3))
    out_q = np.empty((n_steps + 1, 4))
    out_p[0] = y
    out_q[0] = q
    i = 0
    for k in range(1, n_steps + 1):
        for _ in range(n_sub):
            z += h * (model.alpha_z * (model.beta_z * (goal.p - y) - z) + f_pos_all[i]) / tau
            y = y + h * z / tau
            e_o = rotvec_from_quat(quat_multiply(goal_q, quat_conjugate(q)))
            eta += h * (model.alpha_z * (model.beta_z * e_o - eta) + f_orient_all[i]) / tau
            q = quat_normalize(quat_multiply(quat_from_rotvec(h * eta / tau), q))
            i += 1
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(q))):
            raise ExecutionError(f"non-finite integration at step {k}")
        out_p[k] = y
        out_q[k] = q
    gripper = np.interp(out_t / tau, np.linspace(0.0, 1.0, len(model.gripper_profile)),
                        model.gripper_profile)
    return Rollout(t=out_t, positions=out_p, quats=out_q, gripper=gripper)


DIRECTION_MARGIN = 0.01  # m, ties and near-ties go forward


def select_direction(dmps: DmpSet, current: Pose7) -> tuple[DmpModel, bool]:
    """Pick forward or reverse: reverse when the current pose is clearly closer
    to the forward goal than to the forward start (ties go forward; the margin
    keeps in-place actions, whose endpoints nearly coincide, on the forward
    model)."""
    d_start = float(np.linalg.norm(current.p - dmps.forward.start.p))
    d_goal = float(np.linalg.norm(current.p - dmps.forward.goal.p))
    if d_goal < d_start - DIRECTION_MARGIN:
        return dmps.reverse, True
    return dmps.forward, False


def save_model(model: DmpModel, path) -> None:
    from pathlib import Path

    Path(path).write_text(json.dumps(model.to_json()) + "\n")
