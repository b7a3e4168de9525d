"""Forward kinematics and Jacobians over canonical assets.

Entity base pose places the asset root: a root free joint (or no root joint)
means the root body sits exactly at the base pose; a root revolute/prismatic
mounting joint hangs the root body off the base pose like any other joint.
dof vectors are ordered by ``asset.actuated_order``.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence

import numpy as np

from .assets import FIXED, FREE, PRISMATIC, REVOLUTE, CanonicalAsset, Joint
from .transforms import Pose, Vec3, quat_from_axis_angle, quat_rotate, vec_cross, vec_sub


def joint_motion(joint: Joint, q: float) -> Pose:
    if joint.kind == REVOLUTE:
        return Pose(quat=quat_from_axis_angle(joint.axis, q))
    if joint.kind == PRISMATIC:
        a = joint.axis
        return Pose(pos=(a[0] * q, a[1] * q, a[2] * q))
    return Pose()


def dof_map(asset: CanonicalAsset, dof_pos: Sequence[float] | Mapping[str, float]) -> dict[str, float]:
    """Normalize a dof vector or name map to {joint_name: q}."""
    if isinstance(dof_pos, Mapping):
        return dict(dof_pos)
    if len(dof_pos) != len(asset.actuated_order):
        raise ValueError(
            f"asset {asset.name!r} has {len(asset.actuated_order)} dofs, got {len(dof_pos)} values"
        )
    return dict(zip(asset.actuated_order, dof_pos))


def forward_kinematics(
    asset: CanonicalAsset,
    base_pose: Pose,
    dof_pos: Sequence[float] | Mapping[str, float],
) -> dict[str, Pose]:
    """World pose of every body frame at the given configuration."""
    q = dof_map(asset, dof_pos)
    poses: dict[str, Pose] = {}
    for body in asset.bodies:  # topological order: parents first
        joint = asset.joint_for_child(body.name)
        parent_pose = base_pose if body.parent is None else poses[body.parent]
        if joint is None or (body.parent is None and joint.kind == FREE):
            poses[body.name] = parent_pose if body.parent is None else parent_pose.compose(body.pose_in_parent)
            continue
        local = joint.origin
        if joint.kind in (REVOLUTE, PRISMATIC):
            local = local.compose(joint_motion(joint, q.get(joint.name, 0.0)))
        poses[body.name] = parent_pose.compose(local)
    return poses


def chain_to(asset: CanonicalAsset, body_name: str) -> list[str]:
    """Body names from the root down to body_name, inclusive."""
    chain = [body_name]
    cur = asset.body(body_name)
    while cur.parent is not None:
        chain.append(cur.parent)
        cur = asset.body(cur.parent)
    return list(reversed(chain))


def jacobian(
    asset: CanonicalAsset,
    base_pose: Pose,
    dof_pos: Sequence[float] | Mapping[str, float],
    ee_body: str,
    poses: dict[str, Pose] | None = None,
) -> np.ndarray:
    """Geometric Jacobian of the ee body frame, 6 x dof, rows (v; w), world frame.

    Columns for joints off the root-to-ee chain are zero.
    """
    if poses is None:
        poses = forward_kinematics(asset, base_pose, dof_pos)
    on_chain = set(chain_to(asset, ee_body))
    p_ee = poses[ee_body].pos
    J = np.zeros((6, len(asset.actuated_order)))
    for col, jname in enumerate(asset.actuated_order):
        joint = asset.joint(jname)
        if joint.child not in on_chain:
            continue
        child_pose = poses[joint.child]
        axis_w = quat_rotate(child_pose.quat, joint.axis)
        if joint.kind == REVOLUTE:
            lever = vec_sub(p_ee, child_pose.pos)
            J[0:3, col] = vec_cross(axis_w, lever)
            J[3:6, col] = axis_w
        elif joint.kind == PRISMATIC:
            J[0:3, col] = axis_w
    return J


def clamp_to_limits(asset: CanonicalAsset, dof: np.ndarray) -> np.ndarray:
    out = dof.copy()
    for i, jname in enumerate(asset.actuated_order):
        lim = asset.joint(jname).limits
        if lim is not None:
            out[i] = min(max(out[i], lim[0]), lim[1])
    return out


def gripper_open_fraction(
    asset: CanonicalAsset, gripper_joints: Sequence[str], dof: Mapping[str, float]
) -> float:
    """Mean normalized opening over the gripper joints; lo = closed, hi = open."""
    if not gripper_joints:
        return 0.0
    total = 0.0
    for name in gripper_joints:
        joint = asset.joint(name)
        lo, hi = joint.limits if joint.limits is not None else (0.0, 1.0)
        span = hi - lo
        frac = (dof.get(name, 0.0) - lo) / span if span > 0 else 0.0
        total += min(1.0, max(0.0, frac))
    return total / len(gripper_joints)


def gripper_dof_from_fraction(
    asset: CanonicalAsset, gripper_joints: Sequence[str], fraction: float
) -> dict[str, float]:
    """Inverse of gripper_open_fraction: fraction 0 -> closed limit, 1 -> open limit."""
    f = min(1.0, max(0.0, fraction))
    out = {}
    for name in gripper_joints:
        joint = asset.joint(name)
        lo, hi = joint.limits if joint.limits is not None else (0.0, 1.0)
        out[name] = lo + f * (hi - lo)
    return out
