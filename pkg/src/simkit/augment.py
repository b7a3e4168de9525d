"""Demo augmentation and domain randomization.

A source demo is cut into subtask segments, each segment's end-effector
motion stored relative to its anchor object.  New episodes re-draw the
scene layout, re-express every segment against the moved anchors, solve
the waypoints back to joint space with warm-started IK, and bridge any
large jumps in joint space.  Every candidate replays under the kinematic
backend and is kept only if the task checker fires, so the output contains
validated successes only.

Randomization draws come from fixed asset pools (materials, camera poses,
lights) with a deterministic train/test split, and every draw is keyed by
(seed, attempt index) so runs of different sizes share a common prefix.
"""

from __future__ import annotations

import colorsys
import hashlib
import math
from dataclasses import dataclass, replace

import numpy as np

from .backends import launch
from .checkers import check_success
from .config import (
    CameraConfig,
    LightConfig,
    MaterialParams,
    ScenarioConfig,
    resolve_asset,
)
from .envs import replay_trajectory
from .kinematics import gripper_dof_from_fraction
from .retarget import ee_path_from_trajectory, ik_solve, _pick_robot
from .state import EntityState, SceneState, Trajectory
from .transforms import Pose

BRIDGE_MAX_STEP = 0.2  # rad (or m for prismatic joints) per control step
TEST_FRACTION = 0.1
SPLIT_SEED = 20795


def _derive_seed(*parts) -> int:
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _rng(*parts) -> np.random.Generator:
    return np.random.default_rng(_derive_seed(*parts))


# ---------------------------------------------------------------------------
# Randomization pools


def _material_pool(tag: str, n: int, sat, val, rough) -> tuple[MaterialParams, ...]:
    rng = _rng("pool", tag)
    out = []
    for _ in range(n):
        h = rng.uniform(0.0, 1.0)
        s = rng.uniform(*sat)
        v = rng.uniform(*val)
        out.append(
            MaterialParams(
                base_color=tuple(round(c, 4) for c in colorsys.hsv_to_rgb(h, s, v)),
                roughness=round(rng.uniform(*rough), 4),
                specular=round(rng.uniform(0.2, 0.8), 4),
                metallic=0.0,
            )
        )
    return tuple(out)


def _camera_pool() -> tuple[Pose, ...]:
    """59 desk-viewing camera poses, most of them in the front half."""
    from .transforms import look_at_pose

    rng = _rng("pool", "cameras")
    poses = []
    for i in range(59):
        front = i < 36
        azimuth = rng.uniform(-60.0, 60.0) if front else rng.uniform(60.0, 300.0)
        radius = rng.uniform(1.0, 2.2)
        height = rng.uniform(0.5, 1.6)
        a = math.radians(azimuth)
        eye = (radius * math.cos(a), radius * math.sin(a), height)
        target = (0.0, 0.0, rng.uniform(0.2, 0.6))
        poses.append(look_at_pose(eye, target))
    return tuple(poses)


def _light_pool() -> tuple[tuple[LightConfig, ...], ...]:
    rng = _rng("pool", "lights")
    rigs = []
    for _ in range(30):
        rigs.append(
            (
                LightConfig(
                    kind="distant",
                    polar=round(rng.uniform(10.0, 60.0), 2),
                    azimuth=round(rng.uniform(0.0, 360.0), 2),
                    intensity=round(rng.uniform(0.6, 1.4), 3),
                    color_temperature=round(rng.uniform(3000.0, 6500.0), 0),
                ),
            )
        )
    for _ in range(10):
        rigs.append(
            (
                LightConfig(
                    kind="cylinder_array",
                    rows=int(rng.integers(1, 4)),
                    cols=int(rng.integers(1, 4)),
                    size=round(rng.uniform(0.05, 0.2), 3),
                    height=round(rng.uniform(1.5, 3.0), 2),
                    intensity=round(rng.uniform(0.6, 1.4), 3),
                    color_temperature=round(rng.uniform(3000.0, 6500.0), 0),
                ),
            )
        )
    return tuple(rigs)


TABLE_MATERIALS = _material_pool("table", 300, sat=(0.1, 0.8), val=(0.3, 0.95), rough=(0.2, 0.9))
WALL_MATERIALS = _material_pool("wall", 150, sat=(0.05, 0.4), val=(0.5, 0.95), rough=(0.4, 1.0))
GROUND_MATERIALS = _material_pool("ground", 150, sat=(0.05, 0.5), val=(0.15, 0.7), rough=(0.4, 1.0))
CAMERA_POSES = _camera_pool()
LIGHT_RIGS = _light_pool()


def split_pool(pool, seed: int = SPLIT_SEED) -> tuple[tuple, tuple]:
    """Deterministic (train, test) partition with a 10% test share."""
    items = tuple(pool)
    n = len(items)
    n_test = int(round(TEST_FRACTION * n))
    order = _rng("split", seed, n).permutation(n)
    test = tuple(items[i] for i in order[:n_test])
    train = tuple(items[i] for i in order[n_test:])
    return train, test


def _draw(pool, split: str, rng: np.random.Generator):
    train, test = split_pool(pool)
    items = test if split == "test" else train
    return items[int(rng.integers(len(items)))]


def _material_for(obj_name: str, shape: str | None) -> tuple[MaterialParams, ...]:
    lowered = obj_name.lower()
    if "wall" in lowered:
        return WALL_MATERIALS
    if shape == "plane" or "ground" in lowered or "floor" in lowered:
        return GROUND_MATERIALS
    return TABLE_MATERIALS


def randomize_scene(
    config: ScenarioConfig,
    level: int,
    seed: int,
    split: str = "train",
    index: int = 0,
) -> ScenarioConfig:
    """Randomized copy of the scenario at the given level.

    Level 0 re-draws object start poses from the task's object ranges;
    level 1 adds materials, level 2 camera poses, level 3 lighting and
    full reflectance parameters.  Draws are pure functions of
    (seed, split, index).
    """
    if level not in (0, 1, 2, 3):
        raise ValueError(f"level must be 0..3, got {level}")
    if split not in ("train", "test"):
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    rng = _rng(seed, split, index)

    ranged = {r.entity: r for r in config.task.object_ranges}
    objects = []
    for obj in config.objects:
        if obj.name in ranged:
            r = ranged[obj.name]
            pos = tuple(float(rng.uniform(lo, hi)) for lo, hi in zip(r.lo, r.hi))
            obj = replace(obj, base_pose=Pose(pos=pos, quat=obj.base_pose.quat))
        if level >= 1:
            mat = _draw(_material_for(obj.name, obj.shape), split, rng)
            if level >= 3:
                mat = replace(
                    mat,
                    roughness=float(rng.uniform(0.0, 1.0)),
                    specular=float(rng.uniform(0.0, 1.0)),
                    metallic=float(rng.uniform(0.0, 1.0)),
                )
            obj = replace(obj, material=mat)
        objects.append(obj)

    cameras = config.cameras
    if level >= 2:
        cameras = tuple(
            replace(cam, pose=_draw(CAMERA_POSES, split, rng)) for cam in config.cameras
        )

    lights = config.lights
    if level >= 3:
        lights = _draw(LIGHT_RIGS, split, rng)

    return replace(config, objects=tuple(objects), cameras=cameras, lights=lights)


# ---------------------------------------------------------------------------
# Demo segmentation


@dataclass
class Segment:
    """One subtask's slice of a demo, ee motion expressed in the anchor frame."""

    name: str
    anchor: str | None
    start: int  # first action index
    end: int  # one past the last action index
    rel_poses: list[Pose]
    grip: list[float]


def _dof_names(config: ScenarioConfig) -> dict[str, tuple[str, ...]]:
    names = {}
    for r in config.robots:
        names[r.name] = resolve_asset(config, r.asset).actuated_order
    for o in config.objects:
        if o.asset is not None:
            names[o.name] = resolve_asset(config, o.asset).actuated_order
    return names


def _anchor_pose(state: SceneState, anchor: str | None) -> Pose:
    if anchor is None:
        return Pose()
    es = state.get(anchor)
    if es.pos is None or es.rot is None:
        raise ValueError(f"anchor {anchor!r} has no pose in state")
    return Pose(pos=es.pos, quat=es.rot)


def segment_demo(
    config: ScenarioConfig, traj: Trajectory, robot: str | None = None
) -> list[Segment]:
    """Split a demo at the steps where each subtask's done predicate fires.

    Trailing actions after the last boundary are folded into the final
    segment.  Demos recorded without per-step states are replayed under the
    kinematic backend to recover them.
    """
    path = ee_path_from_trajectory(config, traj, robot=robot)
    n = len(traj.actions)
    if n == 0:
        raise ValueError("cannot segment an empty trajectory")

    if traj.states is not None and len(traj.states) == n:
        states = list(traj.states)
        init = traj.init_state
    else:
        result = replay_trajectory(config, traj, backend="kin", record_states=True)
        states = result.states
        h = launch(config, backend="kin")
        try:
            from .state import merge_states

            init = merge_states(h.initial_state(), traj.init_state)
        finally:
            h.close()

    subtasks = config.task.subtasks
    if not subtasks:
        bounds = [("task", None, 0, n)]
    else:
        names = _dof_names(config)
        bounds = []
        prev = 0
        for k, st in enumerate(subtasks):
            if st.done is None:
                if k != len(subtasks) - 1:
                    raise ValueError(f"subtask {st.name!r} has no done predicate")
                bounds.append((st.name, st.anchor, prev, n))
                prev = n
                break
            fire = None
            for i in range(prev, n):
                if check_success(st.done, states[i], init_state=init, dof_names=names):
                    fire = i
                    break
            if fire is None:
                raise ValueError(f"subtask {st.name!r} never completes in the demo")
            bounds.append((st.name, st.anchor, prev, fire + 1))
            prev = fire + 1
        if prev < n:
            name, anchor, start, _ = bounds[-1]
            bounds[-1] = (name, anchor, start, n)

    segments = []
    for name, anchor, start, end in bounds:
        before = init if start == 0 else states[start - 1]
        inv = _anchor_pose(before, anchor).inverse()
        segments.append(
            Segment(
                name=name,
                anchor=anchor,
                start=start,
                end=end,
                rel_poses=[inv.compose(path.waypoints[i].pose) for i in range(start, end)],
                grip=[path.waypoints[i].gripper_open for i in range(start, end)],
            )
        )
    return segments


# ---------------------------------------------------------------------------
# Augmented episode generation


def _bridge(q_from: np.ndarray, q_to: np.ndarray, max_step: float) -> list[np.ndarray]:
    """Linear joint-space path ending at q_to, each step bounded by max_step."""
    delta = q_to - q_from
    span = float(np.max(np.abs(delta))) if delta.size else 0.0
    steps = max(1, int(math.ceil(span / max_step)))
    return [q_from + delta * ((k + 1) / steps) for k in range(steps)]


def generate_augmented(
    config: ScenarioConfig,
    demos: list[Trajectory],
    count: int,
    seed: int,
    level: int = 0,
    split: str = "train",
) -> list[Trajectory]:
    """Run `count` augmentation attempts and return the validated episodes.

    Each attempt draws a source demo and a randomized scene, replays the
    re-anchored segments through IK under the kinematic backend, and keeps
    the episode only if the task checker reports success — so the yield is
    at most `count` and every returned episode is a success.  Attempt i is
    a pure function of (seed, i): requesting more samples extends a smaller
    request rather than reshuffling it.
    """
    if not demos:
        raise ValueError("need at least one source demo")
    if config.task.checker is None:
        raise ValueError("scenario has no task checker to validate against")
    robot_cfg = _pick_robot(config, demos[0], None)
    if robot_cfg.ee_frame is None:
        raise ValueError(f"robot {robot_cfg.name!r} has no ee_frame")
    asset = resolve_asset(config, robot_cfg.asset)
    gripper_idx = [asset.actuated_order.index(j) for j in robot_cfg.gripper_joints]
    segmented = [segment_demo(config, d, robot=robot_cfg.name) for d in demos]

    accepted: list[Trajectory] = []
    for attempt in range(count):
        rng = _rng(seed, "augment", attempt)
        demo_idx = int(rng.integers(len(demos)))
        cfg = randomize_scene(config, level, seed, split=split, index=attempt)
        traj = _attempt_episode(cfg, segmented[demo_idx], robot_cfg, asset, gripper_idx)
        if traj is None:
            continue
        traj.extras.update(
            {
                "seed": str(seed),
                "attempt": str(attempt),
                "source": str(demo_idx),
                "level": str(level),
                "split": split,
            }
        )
        accepted.append(traj)
    return accepted


def _attempt_episode(cfg, segments, robot_cfg, asset, gripper_idx) -> Trajectory | None:
    names = _dof_names(cfg)
    h = launch(cfg, backend="kin")
    try:
        init = h.initial_state()
        q = np.array(robot_cfg.default_dof_pos, dtype=float)
        actions = []
        success = False
        for seg in segments:
            anchor = _anchor_pose(h.get_states(), seg.anchor)
            for rel, grip in zip(seg.rel_poses, seg.grip):
                target = anchor.compose(rel)
                try:
                    q_new = ik_solve(asset, robot_cfg.base_pose, robot_cfg.ee_frame, target, q)
                except Exception:
                    return None
                gdof = gripper_dof_from_fraction(asset, robot_cfg.gripper_joints, grip)
                for j, idx in zip(robot_cfg.gripper_joints, gripper_idx):
                    q_new[idx] = gdof[j]
                for qb in _bridge(q, q_new, BRIDGE_MAX_STEP):
                    action = {robot_cfg.name: tuple(float(v) for v in qb)}
                    h.set_states(
                        SceneState(
                            envs=(
                                {robot_cfg.name: EntityState(dof_target=action[robot_cfg.name])},
                            )
                        )
                    )
                    h.step()
                    actions.append(action)
                    if not success:
                        success = check_success(
                            cfg.task.checker,
                            h.get_states(),
                            init_state=init,
                            dof_names=names,
                        )
                q = q_new
        if not success:
            return None
        return Trajectory(
            scenario_name=cfg.name,
            init_state=init,
            actions=actions,
            states=None,
            success=True,
            extras={},
        )
    finally:
        h.close()
