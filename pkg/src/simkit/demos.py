"""Scripted demonstration collection.

A small, honest policy: for tasks whose checker asks an object to end up
inside a sphere, plan hover -> descend -> grasp -> lift -> carry -> release
in ee space, solve each waypoint with warm-started IK, and keep the episode
only if the checker agrees afterward.  It is not a general manipulation
planner; it exists so demo-driven pipelines (augmentation, retargeting,
replay) have real recorded inputs to chew on.
"""

from __future__ import annotations

import numpy as np

from .augment import BRIDGE_MAX_STEP, _bridge, randomize_scene
from .backends import launch
from .checkers import AllOf, PositionWithin, SuccessChecker, check_success
from .config import ScenarioConfig, resolve_asset
from .kinematics import forward_kinematics, gripper_dof_from_fraction
from .retarget import _pick_robot, ik_solve
from .state import EntityState, SceneState, Trajectory
from .transforms import Pose, Vec3

HOVER_HEIGHT = 0.12
GRASP_HEIGHT = 0.04
PLACE_HEIGHT = 0.06
SETTLE_STEPS = 3


def _find_pick_place(checker: SuccessChecker) -> tuple[str, Vec3, float] | None:
    if isinstance(checker, PositionWithin):
        return checker.entity, checker.center, checker.radius
    if isinstance(checker, AllOf):
        for c in checker.checkers:
            found = _find_pick_place(c)
            if found is not None:
                return found
    return None


class NoScriptedPolicy(Exception):
    pass


def plan_pick_place(
    config: ScenarioConfig,
    robot: str | None = None,
    hover: float = HOVER_HEIGHT,
    grasp_height: float = GRASP_HEIGHT,
    place_height: float = PLACE_HEIGHT,
) -> Trajectory:
    """Record one scripted pick-and-place episode under the kinematic backend.

    The target object and goal come straight out of the task checker.  The
    returned trajectory has per-step states and success as re-checked from
    the recording, which may be False if the plan didn't work out.
    """
    found = None
    if config.task.checker is not None:
        found = _find_pick_place(config.task.checker)
    if found is None:
        raise NoScriptedPolicy(
            "scripted collection needs a position_within goal in the task checker"
        )
    obj_name, goal, _radius = found

    robot_cfg = _pick_robot_cfg(config, robot)
    asset = resolve_asset(config, robot_cfg.asset)
    gripper_idx = [asset.actuated_order.index(j) for j in robot_cfg.gripper_joints]
    names = {robot_cfg.name: asset.actuated_order}
    for o in config.objects:
        if o.asset is not None:
            names[o.name] = resolve_asset(config, o.asset).actuated_order

    h = launch(config, backend="kin")
    try:
        init = h.initial_state()
        obj = init.get(obj_name, env=0)
        if obj.pos is None:
            raise NoScriptedPolicy(f"object {obj_name!r} has no pose to pick from")
        ox, oy, oz = obj.pos
        gx, gy, gz = goal

        q = np.array(robot_cfg.default_dof_pos, dtype=float)
        down = forward_kinematics(asset, robot_cfg.base_pose, q)[robot_cfg.ee_frame].quat

        # (position, gripper fraction) script; orientation stays at the
        # arm's rest orientation throughout.
        script = [
            ((ox, oy, oz + hover), 1.0),
            ((ox, oy, oz + grasp_height), 1.0),
            ((ox, oy, oz + grasp_height), 0.0),  # close
            ((ox, oy, oz + hover), 0.0),
            ((gx, gy, gz + hover), 0.0),
            ((gx, gy, gz + place_height), 0.0),
            ((gx, gy, gz + place_height), 1.0),  # release
            ((gx, gy, gz + hover), 1.0),
        ]

        actions: list[dict[str, tuple[float, ...]]] = []
        states: list[SceneState] = []
        success = False

        def run_to(q_new: np.ndarray) -> None:
            nonlocal q, success
            for qb in _bridge(q, q_new, BRIDGE_MAX_STEP):
                action = {robot_cfg.name: tuple(float(v) for v in qb)}
                h.set_states(
                    SceneState(
                        envs=({robot_cfg.name: EntityState(dof_target=action[robot_cfg.name])},)
                    )
                )
                h.step()
                actions.append(action)
                current = h.get_states()
                states.append(current)
                if config.task.checker is not None and not success:
                    success = check_success(
                        config.task.checker, current, init_state=init, dof_names=names
                    )
            q = q_new

        for pos, grip in script:
            q_new = ik_solve(
                asset, robot_cfg.base_pose, robot_cfg.ee_frame, Pose(pos=pos, quat=down), q
            )
            gdof = gripper_dof_from_fraction(asset, robot_cfg.gripper_joints, grip)
            for j, idx in zip(robot_cfg.gripper_joints, gripper_idx):
                q_new[idx] = gdof[j]
            run_to(q_new)
        for _ in range(SETTLE_STEPS):
            run_to(q.copy())

        return Trajectory(
            scenario_name=config.name,
            init_state=init,
            actions=actions,
            states=states,
            success=success,
            extras={"source": "scripted"},
        )
    finally:
        h.close()


def _pick_robot_cfg(config: ScenarioConfig, robot: str | None):
    if robot is None:
        if not config.robots:
            raise ValueError("scenario has no robots")
        cfg = config.robots[0]
    else:
        cfg = next((r for r in config.robots if r.name == robot), None)
        if cfg is None:
            raise KeyError(f"no robot named {robot!r} in scenario")
    if cfg.ee_frame is None:
        raise ValueError(f"robot {cfg.name!r} has no ee_frame")
    return cfg


def filter_validated(
    config: ScenarioConfig, demos: list[Trajectory], backend: str = "kin"
) -> list[Trajectory]:
    """Keep only demos whose replay re-reports success.

    This is the gate every recorded demo passes before entering a dataset:
    a demo that merely claims success but doesn't reproduce it is dropped.
    """
    from .envs import replay_trajectory

    kept = []
    for traj in demos:
        result = replay_trajectory(config, traj, backend=backend, record_states=False)
        if result.success:
            kept.append(traj)
    return kept


def collect_demos(
    config: ScenarioConfig,
    count: int,
    seed: int,
    robot: str | None = None,
    max_attempts: int | None = None,
) -> list[Trajectory]:
    """Scripted demos over randomized layouts, replay-validated before return.

    Attempt i randomizes the scene at level 0 with (seed, i), so larger
    counts extend smaller ones.
    """
    if max_attempts is None:
        max_attempts = max(10 * count, count + 10)
    demos: list[Trajectory] = []
    for attempt in range(max_attempts):
        if len(demos) >= count:
            break
        cfg = randomize_scene(config, level=0, seed=seed, split="train", index=attempt)
        try:
            traj = plan_pick_place(cfg, robot=robot)
        except Exception:
            continue
        if not filter_validated(config, [traj]):
            continue
        traj.extras.update({"seed": str(seed), "attempt": str(attempt)})
        demos.append(traj)
    return demos
