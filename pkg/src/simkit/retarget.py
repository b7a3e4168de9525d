"""End-effector path extraction, DLS inverse kinematics, and retargeting.

Retargeting replays a demo as an ee-space path — poses plus gripper opening
— and solves it onto a different arm with damped least squares, warm-starting
every waypoint from the previous solution.  Joints whose Jacobian column is
zero (grippers, branches off the chain) are never touched by the solver;
gripper joints map through the normalized opening fraction instead.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .assets import CanonicalAsset
from .config import RobotConfig, ScenarioConfig, resolve_asset
from .kinematics import (
    clamp_to_limits,
    forward_kinematics,
    gripper_dof_from_fraction,
    gripper_open_fraction,
    jacobian,
)
from .state import EntityState, SceneState, Trajectory, single_env_state
from .transforms import Pose, rotation_error_vec, vec_norm, vec_sub

DEFAULT_LAMBDA = 0.05
DEFAULT_MAX_ITERS = 200
DEFAULT_POS_TOL = 1e-3  # m
DEFAULT_ROT_TOL = 1e-2  # rad


class NoConvergence(Exception):
    def __init__(self, pos_err: float, rot_err: float, iterations: int):
        self.pos_err = pos_err
        self.rot_err = rot_err
        self.iterations = iterations
        super().__init__(
            f"IK did not converge after {iterations} iterations "
            f"(pos_err={pos_err:.6g} m, rot_err={rot_err:.6g} rad)"
        )


@dataclass(frozen=True)
class EeWaypoint:
    pose: Pose
    gripper_open: float  # normalized 0 (closed) .. 1 (open)


@dataclass
class EePath:
    robot: str
    waypoints: list[EeWaypoint]


def _errors(poses, ee_frame: str, target: Pose) -> tuple[np.ndarray, float, float]:
    current = poses[ee_frame]
    e_pos = vec_sub(target.pos, current.pos)
    e_rot = rotation_error_vec(target.quat, current.quat)
    err = np.array([*e_pos, *e_rot])
    return err, vec_norm(e_pos), vec_norm(e_rot)


POS_ERR_CLAMP = 0.2  # m of position error fed to one DLS step
ROT_ERR_CLAMP = 0.5  # rad of rotation error fed to one DLS step
STALL_LIMIT = 8


def _ik_once(
    asset, base_pose, ee_frame, target, q0, pos_tol, rot_tol, max_iters, damping
) -> np.ndarray:
    """One DLS descent: dq = J^T (J J^T + lambda^2 I)^-1 e.

    The error fed to each step is clamped so far targets don't launch the
    iterate across the workspace, the step backtracks when it would raise
    the squared error, and a run of non-improving steps aborts early (the
    iterate is pinned against a limit or a singularity and won't recover).
    """
    q = np.array(q0, dtype=float)
    damp_sq = damping * damping * np.eye(6)
    poses = forward_kinematics(asset, base_pose, q)
    err, pos_err, rot_err = _errors(poses, ee_frame, target)
    cost = float(err @ err)
    stall = 0
    for it in range(max_iters + 1):
        if pos_err < pos_tol and rot_err < rot_tol:
            return q
        if it == max_iters or stall >= STALL_LIMIT:
            break
        clamped = np.concatenate(
            [
                err[:3] * min(1.0, POS_ERR_CLAMP / max(pos_err, 1e-12)),
                err[3:] * min(1.0, ROT_ERR_CLAMP / max(rot_err, 1e-12)),
            ]
        )
        J = jacobian(asset, base_pose, q, ee_frame, poses=poses)
        dq = J.T @ np.linalg.solve(J @ J.T + damp_sq, clamped)
        scale = 1.0
        improved = False
        for _ in range(4):
            q_try = np.array(clamp_to_limits(asset, q + scale * dq))
            poses_try = forward_kinematics(asset, base_pose, q_try)
            err_try, pe_try, re_try = _errors(poses_try, ee_frame, target)
            cost_try = float(err_try @ err_try)
            if cost_try < cost:
                improved = True
                break
            scale *= 0.5
        if not improved:
            q_try = np.array(clamp_to_limits(asset, q + 0.0625 * dq))
            poses_try = forward_kinematics(asset, base_pose, q_try)
            err_try, pe_try, re_try = _errors(poses_try, ee_frame, target)
            cost_try = float(err_try @ err_try)
            stall = stall + 1 if cost_try >= cost - 1e-14 else 0
        q, poses, err, pos_err, rot_err, cost = (
            q_try,
            poses_try,
            err_try,
            pe_try,
            re_try,
            cost_try,
        )
    raise NoConvergence(pos_err, rot_err, max_iters)


def _limit_arrays(asset: CanonicalAsset) -> tuple[np.ndarray, np.ndarray]:
    lo = np.empty(len(asset.actuated_order))
    hi = np.empty(len(asset.actuated_order))
    for i, name in enumerate(asset.actuated_order):
        limits = asset.joint(name).limits
        lo[i], hi[i] = limits if limits is not None else (-np.pi, np.pi)
    return lo, hi


def _target_rng(target: Pose) -> np.random.Generator:
    import hashlib

    text = ",".join(f"{v:.9f}" for v in (*target.pos, *target.quat))
    digest = hashlib.sha256(text.encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def ik_solve(
    asset: CanonicalAsset,
    base_pose: Pose,
    ee_frame: str,
    target: Pose,
    q0,
    pos_tol: float = DEFAULT_POS_TOL,
    rot_tol: float = DEFAULT_ROT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    damping: float = DEFAULT_LAMBDA,
    restarts: int = 32,
) -> np.ndarray:
    """Damped least-squares IK to a world-frame target pose.

    Returns the full dof vector (asset.actuated_order).  A start already
    inside tolerance returns immediately, and a joint the chain to the ee
    doesn't use (zero Jacobian column) never moves.  When the q0 attempt
    stalls, the solver retries from the limit midpoint and then up to
    `restarts` uniform draws over the limit box; the draws are seeded by a
    hash of the target, so the whole solve is a pure function of its
    arguments.
    """
    q = np.array(q0, dtype=float)
    if q.shape != (len(asset.actuated_order),):
        raise ValueError(
            f"q0 has shape {q.shape}, expected ({len(asset.actuated_order)},)"
        )
    lo, hi = _limit_arrays(asset)
    best: NoConvergence | None = None

    def attempt(qs) -> np.ndarray | None:
        nonlocal best
        try:
            return _ik_once(
                asset, base_pose, ee_frame, target, qs, pos_tol, rot_tol, max_iters, damping
            )
        except NoConvergence as exc:
            if best is None or exc.pos_err < best.pos_err:
                best = exc
            return None

    out = attempt(q)
    if out is None:
        out = attempt((lo + hi) / 2.0)
    if out is None and restarts > 0:
        rng = _target_rng(target)
        for _ in range(restarts):
            out = attempt(rng.uniform(lo, hi))
            if out is not None:
                break
    if out is None:
        raise best
    return out


def ee_path_from_trajectory(
    config: ScenarioConfig, traj: Trajectory, robot: str | None = None
) -> EePath:
    """EE waypoints (pose + gripper opening) along a demo's action targets."""
    robot_cfg = _pick_robot(config, traj, robot)
    asset = resolve_asset(config, robot_cfg.asset)
    if robot_cfg.ee_frame is None:
        raise ValueError(f"robot {robot_cfg.name!r} has no ee_frame")
    base = _base_from_state(traj.init_state, robot_cfg)
    waypoints = []
    for action in traj.actions:
        dof = action.get(robot_cfg.name)
        if dof is None:
            raise KeyError(f"action is missing robot {robot_cfg.name!r}")
        if len(dof) != asset.dof_count:
            raise ValueError(
                f"robot {robot_cfg.name!r}: action has {len(dof)} dofs, asset has {asset.dof_count}"
            )
        named = dict(zip(asset.actuated_order, dof))
        poses = forward_kinematics(asset, base, named)
        waypoints.append(
            EeWaypoint(
                pose=poses[robot_cfg.ee_frame],
                gripper_open=gripper_open_fraction(asset, robot_cfg.gripper_joints, named),
            )
        )
    return EePath(robot=robot_cfg.name, waypoints=waypoints)


def _pick_robot(config: ScenarioConfig, traj: Trajectory, robot: str | None) -> RobotConfig:
    if robot is not None:
        for r in config.robots:
            if r.name == robot:
                return r
        raise KeyError(f"no robot named {robot!r} in scenario")
    if traj.actions:
        names = set(traj.actions[0])
        for r in config.robots:
            if r.name in names:
                return r
    if not config.robots:
        raise ValueError("scenario has no robots")
    return config.robots[0]


def _base_from_state(state: SceneState, robot_cfg: RobotConfig) -> Pose:
    try:
        es = state.get(robot_cfg.name)
    except KeyError:
        return robot_cfg.base_pose
    if es.pos is not None and es.rot is not None:
        return Pose(pos=es.pos, quat=es.rot)
    return robot_cfg.base_pose


def solve_ee_path(
    dst_asset: CanonicalAsset,
    dst_cfg: RobotConfig,
    path: EePath,
    q_start=None,
    pos_tol: float = DEFAULT_POS_TOL,
    rot_tol: float = DEFAULT_ROT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> list[np.ndarray]:
    """IK the whole path, warm-starting each waypoint from the previous one."""
    if dst_cfg.ee_frame is None:
        raise ValueError(f"robot {dst_cfg.name!r} has no ee_frame")
    q = (
        np.array(q_start, dtype=float)
        if q_start is not None
        else np.array(dst_cfg.default_dof_pos, dtype=float)
    )
    base = dst_cfg.base_pose
    gripper_idx = [dst_asset.actuated_order.index(j) for j in dst_cfg.gripper_joints]
    out = []
    for wp in path.waypoints:
        q = ik_solve(
            dst_asset,
            base,
            dst_cfg.ee_frame,
            wp.pose,
            q,
            pos_tol=pos_tol,
            rot_tol=rot_tol,
            max_iters=max_iters,
        )
        grip = gripper_dof_from_fraction(dst_asset, dst_cfg.gripper_joints, wp.gripper_open)
        for j, idx in zip(dst_cfg.gripper_joints, gripper_idx):
            q[idx] = grip[j]
        out.append(q.copy())
    return out


def retarget_config(config: ScenarioConfig, dst_robot: RobotConfig, src_name: str) -> ScenarioConfig:
    """Scenario with the source robot swapped for the destination robot."""
    robots = tuple(dst_robot if r.name == src_name else r for r in config.robots)
    return replace(config, robots=robots)


def retarget_trajectory(
    config: ScenarioConfig,
    traj: Trajectory,
    dst_robot: RobotConfig,
    src_robot: str | None = None,
) -> tuple[Trajectory, ScenarioConfig]:
    """Map a demo onto a different arm through its ee path.

    Returns the retargeted trajectory together with the scenario config it
    replays under (source robot swapped out).  Raises NoConvergence if any
    waypoint cannot be reached.
    """
    src_cfg = _pick_robot(config, traj, src_robot)
    path = ee_path_from_trajectory(config, traj, robot=src_cfg.name)
    dst_asset = resolve_asset(config, dst_robot.asset)
    solutions = solve_ee_path(dst_asset, dst_robot, path)

    actions = [{dst_robot.name: tuple(float(v) for v in q)} for q in solutions]

    init_entities = dict(traj.init_state.entities(0))
    init_entities.pop(src_cfg.name, None)
    dof = tuple(dst_robot.default_dof_pos)
    init_entities[dst_robot.name] = EntityState(
        pos=dst_robot.base_pose.pos,
        rot=dst_robot.base_pose.quat,
        lin_vel=(0.0, 0.0, 0.0),
        ang_vel=(0.0, 0.0, 0.0),
        dof_pos=dof,
        dof_vel=tuple(0.0 for _ in dof),
        dof_target=dof,
    )
    out = Trajectory(
        scenario_name=traj.scenario_name,
        init_state=single_env_state(init_entities),
        actions=actions,
        states=None,
        success=False,
        extras=dict(traj.extras),
    )
    return out, retarget_config(config, dst_robot, src_cfg.name)
