"""Pose and quaternion math shared by every other module.

Quaternions are scalar-first [w, x, y, z] and kept unit-norm. A pose pairs a
3-vector position in meters with a unit quaternion.
"""

from __future__ import annotations

import numpy as np

UNIT_NORM_TOL = 1e-6


class DegenerateQuaternionError(ValueError):
    pass


def quat_normalize(q) -> np.ndarray:
    """Scale q to unit norm, preserving direction.

    Raises DegenerateQuaternionError for near-zero input (norm <= 1e-9).
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise ValueError(f"quaternion must have 4 components, got shape {q.shape}")
    n = float(np.linalg.norm(q))
    if n <= 1e-9 or not np.isfinite(n):
        raise DegenerateQuaternionError(f"degenerate quaternion (norm {n:.3e})")
    return q / n


def quat_canonical(q) -> np.ndarray:
    """Resolve the double cover by forcing a non-negative scalar part."""
    q = np.asarray(q, dtype=float)
    return -q if q[0] < 0.0 else q


def quat_conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_multiply(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def quat_rotate(q, v) -> np.ndarray:
    """Rotate vector v by unit quaternion q."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    w, x, y, z = q
    # v' = v + 2*r x (r x v + w*v), r = (x, y, z)
    r = np.array([x, y, z])
    t = 2.0 * np.cross(r, v)
    return v + w * t + np.cross(r, t)


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=float)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def matrix_to_quat(m) -> np.ndarray:
    """Rotation matrix to unit quaternion (scalar-first), Shepperd's method."""
    m = np.asarray(m, dtype=float)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] > m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    return quat_normalize(q)


def quat_from_rotvec(r) -> np.ndarray:
    """Exponential map: rotation vector (axis * angle) to quaternion."""
    r = np.asarray(r, dtype=float)
    angle = float(np.linalg.norm(r))
    if angle < 1e-12:
        # first-order expansion keeps the map smooth through zero
        return quat_normalize(np.array([1.0, 0.5 * r[0], 0.5 * r[1], 0.5 * r[2]]))
    axis = r / angle
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], np.sin(half) * axis))


def rotvec_from_quat(q) -> np.ndarray:
    """Logarithmic map: quaternion to rotation vector (axis * angle)."""
    q = quat_canonical(np.asarray(q, dtype=float))
    w = np.clip(q[0], -1.0, 1.0)
    v = q[1:4]
    sin_half = float(np.linalg.norm(v))
    if sin_half < 1e-12:
        return 2.0 * v
    angle = 2.0 * np.arctan2(sin_half, w)
    return (angle / sin_half) * v


def quat_slerp(q0, q1, s: float) -> np.ndarray:
    """Spherical interpolation from q0 (s=0) to q1 (s=1), shortest arc."""
    q0 = quat_normalize(q0)
    q1 = quat_normalize(q1)
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    if dot > 0.9995:
        return quat_normalize(q0 + s * (q1 - q0))
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    return quat_normalize(
        (np.sin((1.0 - s) * theta) * q0 + np.sin(s * theta) * q1) / np.sin(theta)
    )


def quat_angle(a, b) -> float:
    """Geodesic rotation angle between two unit quaternions, radians."""
    dot = abs(float(np.dot(np.asarray(a, float), np.asarray(b, float))))
    return 2.0 * float(np.arccos(np.clip(dot, -1.0, 1.0)))


class Pose7:
    """Position (m) plus unit quaternion, the universal pose representation.

    The quaternion is normalized at construction; positions must be finite.
    Instances are immutable.
    """

    __slots__ = ("p", "q")

    def __init__(self, position, quaternion):
        p = np.array(position, dtype=float)
        if p.shape != (3,):
            raise ValueError(f"position must have 3 components, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError(f"non-finite position {p}")
        q = quat_normalize(quaternion)
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    def __setattr__(self, name, value):
        raise AttributeError("Pose7 is immutable")

    # named component accessors
    @property
    def x(self) -> float:
        return float(self.p[0])

    @property
    def y(self) -> float:
        return float(self.p[1])

    @property
    def z(self) -> float:
        return float(self.p[2])

    @property
    def qw(self) -> float:
        return float(self.q[0])

    @property
    def qx(self) -> float:
        return float(self.q[1])

    @property
    def qy(self) -> float:
        return float(self.q[2])

    @property
    def qz(self) -> float:
        return float(self.q[3])

    @classmethod
    def identity(cls) -> "Pose7":
        return cls((0.0, 0.0, 0.0), (1.0, 0.0, 0.0, 0.0))

    @classmethod
    def from_list(cls, values) -> "Pose7":
        values = list(values)
        if len(values) != 7:
            raise ValueError(f"pose needs 7 values, got {len(values)}")
        return cls(values[:3], values[3:])

    def to_list(self) -> list[float]:
        return [*map(float, self.p), *map(float, self.q)]

    def canonical(self) -> "Pose7":
        """Copy with qw >= 0 (double cover resolved)."""
        return Pose7(self.p, quat_canonical(self.q))

    def compose(self, other: "Pose7") -> "Pose7":
        """This pose applied to other: T_self * T_other."""
        return Pose7(self.p + quat_rotate(self.q, other.p), quat_multiply(self.q, other.q))

    def inverse(self) -> "Pose7":
        q_inv = quat_conjugate(self.q)
        return Pose7(-quat_rotate(q_inv, self.p), q_inv)

    def to_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.q)
        m[:3, 3] = self.p
        return m

    @classmethod
    def from_matrix(cls, m) -> "Pose7":
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"homogeneous transform must be 4x4, got {m.shape}")
        return cls(m[:3, 3], matrix_to_quat(m[:3, :3]))

    def approx_equal(self, other: "Pose7", pos_tol: float = 1e-9, ang_tol: float = 1e-9) -> bool:
        return (
            float(np.linalg.norm(self.p - other.p)) <= pos_tol
            and quat_angle(self.q, other.q) <= ang_tol
        )

    def __repr__(self) -> str:
        return (
            f"Pose7(p=[{self.x:.4f}, {self.y:.4f}, {self.z:.4f}], "
            f"q=[{self.qw:.4f}, {self.qx:.4f}, {self.qy:.4f}, {self.qz:.4f}])"
        )


def pose_distance(a: Pose7, b: Pose7) -> float:
    """Euclidean distance between pose positions; orientation is ignored."""
    return float(np.linalg.norm(a.p - b.p))
