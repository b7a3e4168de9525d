"""Rigid-transform math shared across the package.

Quaternions are (w, x, y, z) scalar-first everywhere, unit-norm unless a
function says otherwise.  Angles are radians, distances meters.  Plain float
tuples are used at the API surface so states stay hashable and bit-exact;
numpy only appears inside the heavier routines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]

IDENTITY_QUAT: Quat = (1.0, 0.0, 0.0, 0.0)
ZERO_VEC: Vec3 = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Pose:
    """Position plus orientation of a frame, expressed in its parent frame."""

    pos: Vec3 = ZERO_VEC
    quat: Quat = IDENTITY_QUAT

    def compose(self, other: "Pose") -> "Pose":
        """self then other: the pose of other's frame, given other is expressed in self."""
        return Pose(
            pos=vec_add(self.pos, quat_rotate(self.quat, other.pos)),
            quat=quat_mul(self.quat, other.quat),
        )

    def inverse(self) -> "Pose":
        inv_q = quat_conj(self.quat)
        return Pose(pos=vec_scale(quat_rotate(inv_q, self.pos), -1.0), quat=inv_q)

    def transform_point(self, p: Vec3) -> Vec3:
        return vec_add(self.pos, quat_rotate(self.quat, p))


IDENTITY_POSE = Pose()


def vec_add(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def vec_sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def vec_scale(a: Vec3, s: float) -> Vec3:
    return (a[0] * s, a[1] * s, a[2] * s)


def vec_dot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def vec_cross(a: Vec3, b: Vec3) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def vec_norm(a: Vec3) -> float:
    return math.sqrt(vec_dot(a, a))


def vec_normalize(a: Vec3) -> Vec3:
    n = vec_norm(a)
    if n == 0.0:
        raise ValueError("cannot normalize zero vector")
    return vec_scale(a, 1.0 / n)


def quat_mul(a: Quat, b: Quat) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_conj(q: Quat) -> Quat:
    return (q[0], -q[1], -q[2], -q[3])


def quat_norm(q: Quat) -> float:
    return math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])


def quat_normalize(q: Quat) -> Quat:
    n = quat_norm(q)
    if n == 0.0:
        raise ValueError("cannot normalize zero quaternion")
    return (q[0] / n, q[1] / n, q[2] / n, q[3] / n)


def quat_rotate(q: Quat, v: Vec3) -> Vec3:
    # q v q* expanded; cheaper than building the matrix for a single vector.
    w, x, y, z = q
    tx = 2.0 * (y * v[2] - z * v[1])
    ty = 2.0 * (z * v[0] - x * v[2])
    tz = 2.0 * (x * v[1] - y * v[0])
    return (
        v[0] + w * tx + (y * tz - z * ty),
        v[1] + w * ty + (z * tx - x * tz),
        v[2] + w * tz + (x * ty - y * tx),
    )


def quat_from_axis_angle(axis: Vec3, angle: float) -> Quat:
    half = 0.5 * angle
    s = math.sin(half)
    ax = vec_normalize(axis)
    return (math.cos(half), ax[0] * s, ax[1] * s, ax[2] * s)


def quat_to_axis_angle(q: Quat) -> tuple[Vec3, float]:
    """Rotation vector decomposition, angle in [0, pi]."""
    w, x, y, z = quat_normalize(q)
    if w < 0.0:
        w, x, y, z = -w, -x, -y, -z
    s = math.sqrt(max(0.0, 1.0 - w * w))
    angle = 2.0 * math.atan2(s, w)
    if s < 1e-12:
        return (1.0, 0.0, 0.0), 0.0
    return (x / s, y / s, z / s), angle


def quat_angle_between(a: Quat, b: Quat) -> float:
    """Geodesic angle between two orientations, in [0, pi]; symmetric in its arguments."""
    d = abs(a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3])
    return 2.0 * math.acos(min(1.0, d))


def quat_to_mat(q: Quat) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def mat_to_quat(m: np.ndarray) -> Quat:
    """Shepperd's method; picks the numerically largest pivot."""
    t = m[0, 0] + m[1, 1] + m[2, 2]
    if t > 0.0:
        r = math.sqrt(1.0 + t)
        s = 0.5 / r
        q = (0.5 * r, (m[2, 1] - m[1, 2]) * s, (m[0, 2] - m[2, 0]) * s, (m[1, 0] - m[0, 1]) * s)
    else:
        i = int(np.argmax([m[0, 0], m[1, 1], m[2, 2]]))
        j, k = (i + 1) % 3, (i + 2) % 3
        r = math.sqrt(1.0 + m[i, i] - m[j, j] - m[k, k])
        s = 0.5 / r
        xyz = [0.0, 0.0, 0.0]
        xyz[i] = 0.5 * r
        xyz[j] = (m[j, i] + m[i, j]) * s
        xyz[k] = (m[k, i] + m[i, k]) * s
        q = ((m[k, j] - m[j, k]) * s, xyz[0], xyz[1], xyz[2])
    return quat_normalize(tuple(float(c) for c in q))


def quat_from_rpy(roll: float, pitch: float, yaw: float) -> Quat:
    """Fixed-axis XYZ convention: R = Rz(yaw) Ry(pitch) Rx(roll)."""
    qx = quat_from_axis_angle((1.0, 0.0, 0.0), roll)
    qy = quat_from_axis_angle((0.0, 1.0, 0.0), pitch)
    qz = quat_from_axis_angle((0.0, 0.0, 1.0), yaw)
    return quat_mul(qz, quat_mul(qy, qx))


def quat_to_rpy(q: Quat) -> tuple[float, float, float]:
    m = quat_to_mat(q)
    sy = -m[2, 0]
    sy = min(1.0, max(-1.0, sy))
    pitch = math.asin(sy)
    if abs(sy) < 1.0 - 1e-12:
        roll = math.atan2(m[2, 1], m[2, 2])
        yaw = math.atan2(m[1, 0], m[0, 0])
    else:
        # Gimbal lock: fold everything into roll.
        roll = math.atan2(-m[1, 2], m[1, 1])
        yaw = 0.0
    return roll, pitch, yaw


def quat_from_euler(seq: str, angles: tuple[float, ...]) -> Quat:
    """Intrinsic rotations about the axes named by seq (e.g. "xyz"), applied in order."""
    basis = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}
    q = IDENTITY_QUAT
    for ax, ang in zip(seq, angles):
        q = quat_mul(q, quat_from_axis_angle(basis[ax], ang))
    return q


def rotation_error_vec(q_target: Quat, q_current: Quat) -> Vec3:
    """World-frame rotation vector taking q_current onto q_target, shortest branch."""
    dq = quat_mul(q_target, quat_conj(q_current))
    axis, angle = quat_to_axis_angle(dq)
    return vec_scale(axis, angle)


def look_at_pose(eye: Vec3, target: Vec3, up: Vec3 = (0.0, 0.0, 1.0)) -> Pose:
    """Camera pose whose +X axis points at target, +Z as close to up as possible."""
    fwd = vec_normalize(vec_sub(target, eye))
    left = vec_cross(up, fwd)
    if vec_norm(left) < 1e-9:
        # Looking straight up/down: pick an arbitrary left.
        left = vec_cross((0.0, 1.0, 0.0), fwd)
    left = vec_normalize(left)
    true_up = vec_cross(fwd, left)
    m = np.array([fwd, left, true_up]).T
    return Pose(pos=eye, quat=mat_to_quat(m))
