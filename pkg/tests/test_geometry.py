from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cobt.geometry import (
    DegenerateQuaternionError,
    Pose7,
    pose_distance,
    quat_angle,
    quat_multiply,
    quat_normalize,
    quat_rotate,
)

# micrometre-grid coordinates: realistic magnitudes, no squaring underflow
finite = st.integers(min_value=-10_000_000, max_value=10_000_000).map(lambda i: i / 1e6)
quat_component = st.floats(min_value=-5, max_value=5, allow_nan=False)


def test_quat_normalize_scaling_identity():
    assert np.allclose(quat_normalize([2, 0, 0, 0]), [1, 0, 0, 0])


def test_quat_normalize_already_unit():
    assert np.allclose(quat_normalize([0, 0, 0, 1]), [0, 0, 0, 1])


def test_quat_normalize_norm_two():
    assert np.allclose(quat_normalize([1, 1, 1, 1]), [0.5, 0.5, 0.5, 0.5])


def test_quat_normalize_degenerate():
    with pytest.raises(DegenerateQuaternionError, match="degenerate quaternion"):
        quat_normalize([1e-12, 0, 0, 0])


@given(st.tuples(quat_component, quat_component, quat_component, quat_component))
def test_quat_normalize_idempotent_and_unit(q):
    if np.linalg.norm(q) <= 1e-6:
        return
    once = quat_normalize(q)
    assert abs(np.linalg.norm(once) - 1.0) < 1e-9
    assert np.allclose(quat_normalize(once), once, atol=1e-12)


def test_pose_distance_345():
    a = Pose7((0, 0, 0), (1, 0, 0, 0))
    b = Pose7((0.03, 0.04, 0), (1, 0, 0, 0))
    assert pose_distance(a, b) == pytest.approx(0.05)


def test_pose_distance_identity_and_unit():
    a = Pose7((1, 0, 0), (1, 0, 0, 0))
    assert pose_distance(a, a) == 0.0
    assert pose_distance(a, Pose7((0, 0, 0), (1, 0, 0, 0))) == pytest.approx(1.0)


@given(
    st.tuples(finite, finite, finite),
    st.tuples(finite, finite, finite),
)
def test_pose_distance_metric_properties(pa, pb):
    a = Pose7(pa, (1, 0, 0, 0))
    b = Pose7(pb, (1, 0, 0, 0))
    assert pose_distance(a, b) == pose_distance(b, a)
    assert pose_distance(a, b) >= 0
    assert (pose_distance(a, b) == 0) == bool(
        np.array_equal(np.asarray(pa, float), np.asarray(pb, float))
    )


def test_compose_inverse_roundtrip():
    a = Pose7((0.1, 0.2, 0.3), quat_normalize([0.9, 0.1, 0.2, 0.3]))
    b = Pose7((0.4, -0.1, 0.2), quat_normalize([0.7, -0.3, 0.1, 0.2]))
    ab = a.compose(b)
    back = a.inverse().compose(ab)
    assert back.approx_equal(b, 1e-9, 1e-7)


def test_matrix_roundtrip():
    p = Pose7((0.3, -0.2, 0.5), quat_normalize([0.6, 0.4, -0.2, 0.1]))
    again = Pose7.from_matrix(p.to_matrix())
    assert again.approx_equal(p, 1e-9, 1e-7)


def test_quat_rotate_matches_matrix():
    q = quat_normalize([0.8, 0.2, -0.4, 0.1])
    v = np.array([0.3, -0.5, 0.2])
    m = Pose7((0, 0, 0), q).to_matrix()[:3, :3]
    assert np.allclose(quat_rotate(q, v), m @ v, atol=1e-12)


def test_pose7_invariants():
    with pytest.raises(ValueError):
        Pose7((np.inf, 0, 0), (1, 0, 0, 0))
    p = Pose7((0, 0, 0), (2, 0, 0, 0))
    assert abs(np.linalg.norm(p.q) - 1) < 1e-9
    with pytest.raises(AttributeError):
        p.p = np.zeros(3)


def test_quat_angle_halves():
    q0 = np.array([1.0, 0, 0, 0])
    q1 = quat_multiply(np.array([np.cos(0.25), np.sin(0.25), 0, 0]), q0)
    assert quat_angle(q0, q1) == pytest.approx(0.5, abs=1e-9)
