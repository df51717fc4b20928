"""Quaternion, axis-angle and skew-matrix helpers.

Quaternions are Hamilton convention, stored (w, x, y, z). Rotation matrices
map body-frame vectors into the parent frame.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

_ZERO_ANGLE = 1e-8


def normalize_quat(q: np.ndarray) -> np.ndarray:
    """Scale to unit norm. Raises on (near-)zero input."""
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n < 1e-12:
        raise DomainError("cannot normalize a zero quaternion")
    return q / n


def canonicalize_quat(q: np.ndarray) -> np.ndarray:
    """Flip sign so q_w >= 0 (both signs encode the same rotation)."""
    q = np.asarray(q, dtype=float)
    return -q if q[0] < 0 else q.copy()


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector v by quaternion q (body -> parent)."""
    return quat_to_matrix(q) @ np.asarray(v, dtype=float)


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = normalize_quat(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_axis_angle(axis_angle: np.ndarray) -> np.ndarray:
    """Inverse of quat_to_axis_angle; input is angle * unit axis."""
    v = np.asarray(axis_angle, dtype=float)
    theta = np.linalg.norm(v)
    if theta < _ZERO_ANGLE:
        return np.array([1.0, 0.0, 0.0, 0.0])
    axis = v / theta
    half = 0.5 * theta
    return canonicalize_quat(
        np.concatenate([[np.cos(half)], np.sin(half) * axis])
    )


def quat_to_axis_angle(q: np.ndarray, *, warn_tol: float = 1e-3) -> np.ndarray:
    """Rotation vector theta*u of a unit quaternion, |theta*u| in [0, pi].

    Inputs off unit norm by more than ``warn_tol`` are normalized with a
    warning; smaller deviations are normalized silently.
    """
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if abs(n - 1.0) > warn_tol:
        import warnings

        warnings.warn(f"quaternion norm {n:.6f} deviates from 1; normalizing")
    q = canonicalize_quat(normalize_quat(q))
    w = q[0]
    vec = q[1:]
    s = np.linalg.norm(vec)
    theta = 2.0 * np.arctan2(s, w)
    if theta < _ZERO_ANGLE:
        return np.zeros(3)
    return theta * (vec / s)


def quat_from_euler(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Intrinsic z-y-x (yaw, pitch, roll) to quaternion."""
    qz = quat_from_axis_angle([0.0, 0.0, yaw])
    qy = quat_from_axis_angle([0.0, pitch, 0.0])
    qx = quat_from_axis_angle([roll, 0.0, 0.0])
    return canonicalize_quat(quat_multiply(quat_multiply(qz, qy), qx))


def integrate_quat(q: np.ndarray, omega_body: np.ndarray, dt: float) -> np.ndarray:
    """Advance orientation by body angular rate over dt; renormalized."""
    dq = quat_from_axis_angle(np.asarray(omega_body, dtype=float) * dt)
    return canonicalize_quat(normalize_quat(quat_multiply(q, dq)))


def skew(p: np.ndarray) -> np.ndarray:
    """Matrix [p]x with [p]x @ v == cross(p, v)."""
    x, y, z = np.asarray(p, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def geodesic_angle(qa: np.ndarray, qb: np.ndarray) -> float:
    """Rotation angle (rad) taking qa to qb, double-cover safe."""
    qa = normalize_quat(qa)
    qb = normalize_quat(qb)
    d = abs(float(np.dot(qa, qb)))
    return 2.0 * np.arccos(min(1.0, d))
