"""Rotation parameterizations: matrices, quaternions, axis-angle.

Quaternions are (w, x, y, z), unit norm. Axis-angle vectors ("rvec") carry the
rotation axis scaled by the angle in radians. All matrices are 3x3 proper
rotations; nothing here handles reflections.
"""
from __future__ import annotations

import numpy as np


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix such that hat(v) @ u == cross(v, u)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rodrigues(rvec: np.ndarray) -> np.ndarray:
    """Axis-angle vector -> rotation matrix (exponential map)."""
    rvec = np.asarray(rvec, dtype=float)
    angle = np.linalg.norm(rvec)
    if angle < 1e-12:
        # second-order series keeps the map smooth through zero
        k = hat(rvec)
        return np.eye(3) + k + 0.5 * (k @ k)
    axis = rvec / angle
    k = hat(axis)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def rodrigues_inv(rot: np.ndarray) -> np.ndarray:
    """Rotation matrix -> axis-angle vector (log map), angle in [0, pi]."""
    rot = np.asarray(rot, dtype=float)
    cos_angle = np.clip((np.trace(rot) - 1.0) / 2.0, -1.0, 1.0)
    angle = np.arccos(cos_angle)
    if angle < 1e-12:
        # antisymmetric part / 2 is the first-order axis-angle
        return np.array([rot[2, 1] - rot[1, 2],
                         rot[0, 2] - rot[2, 0],
                         rot[1, 0] - rot[0, 1]]) / 2.0
    if np.pi - angle < 1e-6:
        # near pi the antisymmetric part vanishes; use the symmetric part
        m = (rot + np.eye(3)) / 2.0
        axis = np.sqrt(np.maximum(np.diag(m), 0.0))
        # fix signs from the off-diagonal entries
        i = int(np.argmax(axis))
        if axis[i] > 0:
            axis = m[i] / axis[i]
            axis[i] = np.sqrt(max(m[i, i], 0.0))
        n = np.linalg.norm(axis)
        if n > 0:
            axis = axis / n
        return axis * angle
    axis = np.array([rot[2, 1] - rot[1, 2],
                     rot[0, 2] - rot[2, 0],
                     rot[1, 0] - rot[0, 1]]) / (2.0 * np.sin(angle))
    return axis * angle


def quat_from_matrix(rot: np.ndarray) -> np.ndarray:
    """Rotation matrix -> unit quaternion (w, x, y, z), w >= 0."""
    rot = np.asarray(rot, dtype=float)
    t = np.trace(rot)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (rot[2, 1] - rot[1, 2]) / s,
                      (rot[0, 2] - rot[2, 0]) / s,
                      (rot[1, 0] - rot[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(rot)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(rot[i, i] - rot[j, j] - rot[k, k] + 1.0) * 2.0
        q = np.empty(4)
        q[0] = (rot[k, j] - rot[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (rot[j, i] + rot[i, j]) / s
        q[1 + k] = (rot[k, i] + rot[i, k]) / s
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


def matrix_from_quat(q: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) -> rotation matrix."""
    w, x, y, z = np.asarray(q, dtype=float) / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def rotation_angle(rot: np.ndarray) -> float:
    """Geodesic angle of a rotation matrix, radians in [0, pi]."""
    return float(np.arccos(np.clip((np.trace(rot) - 1.0) / 2.0, -1.0, 1.0)))


def angle_between(rot_a: np.ndarray, rot_b: np.ndarray) -> float:
    """Geodesic distance between two rotations, radians."""
    return rotation_angle(rot_a.T @ rot_b)


def nearest_rotation(mat: np.ndarray) -> np.ndarray:
    """Closest proper rotation in the Frobenius sense (polar decomposition)."""
    u, _, vt = np.linalg.svd(np.asarray(mat, dtype=float))
    rot = u @ vt
    if np.linalg.det(rot) < 0:
        u[:, -1] = -u[:, -1]
        rot = u @ vt
    return rot


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation (Shoemake quaternion sampling)."""
    u1, u2, u3 = rng.random(3)
    q = np.array([
        np.sqrt(1 - u1) * np.sin(2 * np.pi * u2),
        np.sqrt(1 - u1) * np.cos(2 * np.pi * u2),
        np.sqrt(u1) * np.sin(2 * np.pi * u3),
        np.sqrt(u1) * np.cos(2 * np.pi * u3),
    ])
    return matrix_from_quat(q)


def mean_rotation(rotations: list[np.ndarray]) -> np.ndarray:
    """Sign-aligned arithmetic quaternion mean, renormalized.

    Adequate when the inputs are mutually close (small inter-view spread);
    not a general Karcher mean.
    """
    quats = np.array([quat_from_matrix(r) for r in rotations])
    ref = quats[0]
    for i in range(1, len(quats)):
        if np.dot(quats[i], ref) < 0:
            quats[i] = -quats[i]
    mean = quats.mean(axis=0)
    return matrix_from_quat(mean / np.linalg.norm(mean))
