"""Handler contract and the scene machinery shared by both backends.

A handler owns one or more identical worlds (parallel envs) built from a
scenario config and exposes launch / get_states / set_states / step / render
/ get_extra / close.  Parallel envs never interact; stepping n envs is
bit-identical to stepping each alone.

Free primitive bodies carry linear and angular *momentum* as state; velocity
views are derived.  Robots and articulated objects have static bases and
joint state dicts; their link poses come from forward kinematics.

A robot with gripper joints and an ee frame can grab a nearby free body:
when the gripper closes (mean normalized opening falls below 0.5) the nearest
free body within the grasp radius is welded to the ee frame until the gripper
opens again.  A welded body's momenta are zeroed and contacts skip it.  Both
backends share this so kinematic replays of manipulation demos work.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from ..assets import CanonicalAsset
from ..config import (
    CameraConfig,
    ObjectConfig,
    RobotConfig,
    ScenarioConfig,
    resolve_asset,
)
from ..kinematics import forward_kinematics, gripper_open_fraction
from ..state import EntityState, SceneState, StateQuery, apply_query
from ..transforms import Pose, Quat, Vec3, quat_norm, quat_normalize, quat_to_mat

DEFAULT_GRASP_RADIUS = 0.10
GRIPPER_CLOSE_THRESHOLD = 0.5


class BackendError(Exception):
    pass


class UnknownEntity(BackendError):
    def __init__(self, name: str):
        self.entity = name
        super().__init__(f"no entity named {name!r} in the scene")


class DofLengthMismatch(BackendError):
    def __init__(self, entity: str, expected: int, actual: int):
        self.entity = entity
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"entity {entity!r}: dof vector has length {actual}, expected {expected}"
        )


class InvalidState(BackendError):
    pass


class RenderError(BackendError):
    pass


def sphere_inertia(mass: float, r: float) -> tuple[float, float, float]:
    i = 0.4 * mass * r * r
    return (i, i, i)


def box_inertia(mass: float, dims: tuple[float, ...]) -> tuple[float, float, float]:
    dx, dy, dz = dims[0], dims[1], dims[2]
    k = mass / 12.0
    return (k * (dy * dy + dz * dz), k * (dx * dx + dz * dz), k * (dx * dx + dy * dy))


@dataclass
class _RigidBody:
    """Free or static primitive body; momenta are the dynamic state."""

    pos: np.ndarray
    quat: Quat
    lin_mom: np.ndarray
    ang_mom: np.ndarray
    inv_mass: float
    inertia_diag: np.ndarray  # body frame; zeros when static
    shape: str
    dims: tuple[float, ...]
    restitution: float

    @property
    def static(self) -> bool:
        return self.inv_mass == 0.0

    def lin_vel(self) -> np.ndarray:
        return self.lin_mom * self.inv_mass

    def inv_inertia_world(self) -> np.ndarray:
        # Recomputed from the current orientation; diag inertia is body-frame.
        if self.static:
            return np.zeros((3, 3))
        rot = quat_to_mat(self.quat)
        return rot @ np.diag(1.0 / self.inertia_diag) @ rot.T

    def ang_vel(self) -> np.ndarray:
        return self.inv_inertia_world() @ self.ang_mom


@dataclass
class _Articulation:
    """Robot or articulated object: static base plus joint states."""

    base_pose: Pose
    dof_pos: dict[str, float]
    dof_vel: dict[str, float]
    dof_target: dict[str, float]
    attached: tuple[str, Pose] | None = None  # (rigid body name, ee->body transform)


class _World:
    """Mutable state of one env."""

    def __init__(self) -> None:
        self.rigid: dict[str, _RigidBody] = {}
        self.artic: dict[str, _Articulation] = {}


class Handler:
    """One simulation backend bound to a scenario config."""

    backend_name = "base"

    def __init__(self, config: ScenarioConfig, num_envs: int = 1):
        if num_envs < 1:
            raise BackendError("num_envs must be >= 1")
        self.config = config
        self.num_envs = num_envs
        self.step_count = 0
        self._closed = False

        self._robot_cfgs: dict[str, RobotConfig] = {r.name: r for r in config.robots}
        self._object_cfgs: dict[str, ObjectConfig] = {o.name: o for o in config.objects}
        self._assets: dict[str, CanonicalAsset] = {}
        for r in config.robots:
            self._assets[r.name] = resolve_asset(config, r.asset)
        for o in config.objects:
            if o.kind == "articulated":
                self._assets[o.name] = resolve_asset(config, o.asset)

        extras = config.backend_extras.get(self.backend_name, {})
        self.grasp_radius = float(extras.get("grasp_radius", DEFAULT_GRASP_RADIUS))
        self.joint_tau = float(extras.get("joint_tau", 0.05))

        self.worlds = [self._build_world() for _ in range(num_envs)]
        self._initial = self.get_states()

    # -- construction -----------------------------------------------------

    def _build_world(self) -> _World:
        w = _World()
        for r in self.config.robots:
            asset = self._assets[r.name]
            dof = dict(zip(asset.actuated_order, r.default_dof_pos))
            w.artic[r.name] = _Articulation(
                base_pose=Pose(pos=r.base_pose.pos, quat=quat_normalize(r.base_pose.quat)),
                dof_pos=dict(dof),
                dof_vel={j: 0.0 for j in asset.actuated_order},
                dof_target=dict(dof),
            )
        for o in self.config.objects:
            base = Pose(pos=o.base_pose.pos, quat=quat_normalize(o.base_pose.quat))
            if o.kind == "articulated":
                asset = self._assets[o.name]
                w.artic[o.name] = _Articulation(
                    base_pose=base,
                    dof_pos={j: 0.0 for j in asset.actuated_order},
                    dof_vel={j: 0.0 for j in asset.actuated_order},
                    dof_target={j: 0.0 for j in asset.actuated_order},
                )
                continue
            mass = o.mass
            static = mass == 0.0 or o.shape == "plane"
            if o.shape == "sphere":
                inertia = sphere_inertia(mass, o.dims[0]) if not static else (0.0, 0.0, 0.0)
            elif o.shape == "box":
                inertia = box_inertia(mass, o.dims) if not static else (0.0, 0.0, 0.0)
            else:
                inertia = (0.0, 0.0, 0.0)
            w.rigid[o.name] = _RigidBody(
                pos=np.array(base.pos, dtype=float),
                quat=base.quat,
                lin_mom=np.zeros(3),
                ang_mom=np.zeros(3),
                inv_mass=0.0 if static else 1.0 / mass,
                inertia_diag=np.array(inertia, dtype=float),
                shape=o.shape or "sphere",
                dims=o.dims,
                restitution=o.restitution,
            )
        return w

    # -- state access -----------------------------------------------------

    def dof_names(self) -> dict[str, tuple[str, ...]]:
        """Entity name -> actuated joint order, for articulated entities."""
        return {name: asset.actuated_order for name, asset in self._assets.items()}

    def _entity_state(self, w: _World, name: str) -> EntityState:
        if name in w.rigid:
            b = w.rigid[name]
            return EntityState(
                pos=tuple(float(x) for x in b.pos),
                rot=b.quat,
                lin_vel=tuple(float(x) for x in b.lin_vel()) if not b.static else (0.0, 0.0, 0.0),
                ang_vel=tuple(float(x) for x in b.ang_vel()) if not b.static else (0.0, 0.0, 0.0),
                dof_pos=(),
                dof_vel=(),
                dof_target=(),
            )
        a = w.artic[name]
        order = self._assets[name].actuated_order
        return EntityState(
            pos=a.base_pose.pos,
            rot=a.base_pose.quat,
            lin_vel=(0.0, 0.0, 0.0),
            ang_vel=(0.0, 0.0, 0.0),
            dof_pos=tuple(a.dof_pos[j] for j in order),
            dof_vel=tuple(a.dof_vel[j] for j in order),
            dof_target=tuple(a.dof_target[j] for j in order),
        )

    def get_states(self, query: StateQuery | None = None) -> SceneState:
        self._check_open()
        envs = []
        for w in self.worlds:
            env: dict[str, EntityState] = {}
            for name in sorted(list(w.rigid) + list(w.artic)):
                env[name] = self._entity_state(w, name)
            envs.append(env)
        return apply_query(SceneState(envs=tuple(envs)), query)

    def set_states(self, state: SceneState, env_indices: list[int] | None = None) -> None:
        self._check_open()
        indices = list(range(self.num_envs)) if env_indices is None else list(env_indices)
        if state.num_envs != len(indices):
            raise InvalidState(
                f"state has {state.num_envs} envs but {len(indices)} env indices targeted"
            )
        for src_env, idx in zip(state.envs, indices):
            if not 0 <= idx < self.num_envs:
                raise InvalidState(f"env index {idx} out of range")
            w = self.worlds[idx]
            for name, es in src_env.items():
                self._apply_entity_state(w, name, es)

    def _apply_entity_state(self, w: _World, name: str, es: EntityState) -> None:
        if name in w.rigid:
            b = w.rigid[name]
            if es.rot is not None:
                self._check_quat(name, es.rot)
                b.quat = es.rot
            if es.pos is not None:
                b.pos = np.array(es.pos, dtype=float)
            if es.lin_vel is not None:
                if b.static:
                    if any(v != 0.0 for v in es.lin_vel):
                        raise InvalidState(f"entity {name!r} is static; cannot set lin_vel")
                else:
                    b.lin_mom = np.array(es.lin_vel, dtype=float) / b.inv_mass
            if es.ang_vel is not None:
                if b.static:
                    if any(v != 0.0 for v in es.ang_vel):
                        raise InvalidState(f"entity {name!r} is static; cannot set ang_vel")
                else:
                    rot = quat_to_mat(b.quat)
                    inertia_w = rot @ np.diag(b.inertia_diag) @ rot.T
                    b.ang_mom = inertia_w @ np.array(es.ang_vel, dtype=float)
            for f in ("dof_pos", "dof_vel", "dof_target"):
                v = getattr(es, f)
                if v is not None and len(v) != 0:
                    raise DofLengthMismatch(name, 0, len(v))
            return
        if name in w.artic:
            a = w.artic[name]
            order = self._assets[name].actuated_order
            if es.pos is not None or es.rot is not None:
                pos = es.pos if es.pos is not None else a.base_pose.pos
                rot = es.rot if es.rot is not None else a.base_pose.quat
                if es.rot is not None:
                    self._check_quat(name, es.rot)
                a.base_pose = Pose(pos=pos, quat=rot)
            for vel in (es.lin_vel, es.ang_vel):
                if vel is not None and any(v != 0.0 for v in vel):
                    raise InvalidState(f"entity {name!r} has a static base; velocities must be zero")
            for f, store in (("dof_pos", a.dof_pos), ("dof_vel", a.dof_vel), ("dof_target", a.dof_target)):
                v = getattr(es, f)
                if v is None:
                    continue
                if len(v) != len(order):
                    raise DofLengthMismatch(name, len(order), len(v))
                for j, val in zip(order, v):
                    store[j] = float(val)
            return
        raise UnknownEntity(name)

    @staticmethod
    def _check_quat(name: str, q: Quat) -> None:
        if abs(quat_norm(q) - 1.0) > 1e-6:
            raise InvalidState(f"entity {name!r}: quaternion is not normalized")

    # -- stepping ---------------------------------------------------------

    def step(self) -> None:
        self._check_open()
        dt = self.config.sim.dt
        for w in self.worlds:
            for _ in range(self.config.sim.decimation):
                self._substep(w, dt)
        self.step_count += 1

    def _substep(self, w: _World, dt: float) -> None:
        raise NotImplementedError

    def _update_articulations(self, w: _World, dt: float) -> None:
        raise NotImplementedError

    def _update_attachments(self, w: _World) -> None:
        for rname in sorted(w.artic):
            cfg = self._robot_cfgs.get(rname)
            if cfg is None or not cfg.gripper_joints or cfg.ee_frame is None:
                continue
            a = w.artic[rname]
            asset = self._assets[rname]
            fraction = gripper_open_fraction(asset, cfg.gripper_joints, a.dof_pos)
            ee_pose = self._ee_pose(rname, a)
            if a.attached is None:
                if fraction < GRIPPER_CLOSE_THRESHOLD:
                    target = self._nearest_free_body(w, ee_pose.pos)
                    if target is not None:
                        body = w.rigid[target]
                        body_pose = Pose(pos=tuple(float(x) for x in body.pos), quat=body.quat)
                        rel = ee_pose.inverse().compose(body_pose)
                        body.lin_mom = np.zeros(3)
                        body.ang_mom = np.zeros(3)
                        a.attached = (target, rel)
            else:
                name, rel = a.attached
                if fraction >= GRIPPER_CLOSE_THRESHOLD:
                    a.attached = None
                else:
                    body = w.rigid[name]
                    new_pose = ee_pose.compose(rel)
                    body.pos = np.array(new_pose.pos, dtype=float)
                    body.quat = quat_normalize(new_pose.quat)
                    body.lin_mom = np.zeros(3)
                    body.ang_mom = np.zeros(3)

    def _nearest_free_body(self, w: _World, ee_pos: Vec3) -> str | None:
        attached_elsewhere = {a.attached[0] for a in w.artic.values() if a.attached is not None}
        best: tuple[float, str] | None = None
        for name in sorted(w.rigid):
            b = w.rigid[name]
            if b.static or name in attached_elsewhere:
                continue
            d = math.dist(tuple(float(x) for x in b.pos), ee_pos)
            if d <= self.grasp_radius and (best is None or d < best[0]):
                best = (d, name)
        return best[1] if best else None

    def _ee_pose(self, rname: str, a: _Articulation) -> Pose:
        cfg = self._robot_cfgs[rname]
        poses = forward_kinematics(self._assets[rname], a.base_pose, a.dof_pos)
        return poses[cfg.ee_frame]

    def _attached_bodies(self, w: _World) -> set[str]:
        return {a.attached[0] for a in w.artic.values() if a.attached is not None}

    # -- rendering --------------------------------------------------------

    def render(self, camera: str | None = None, env: int = 0) -> np.ndarray:
        self._check_open()
        from .render import render_scene

        if not self.config.cameras:
            raise RenderError("scenario has no cameras")
        cam: CameraConfig | None = None
        if camera is None:
            cam = self.config.cameras[0]
        else:
            for c in self.config.cameras:
                if c.name == camera:
                    cam = c
            if cam is None:
                raise RenderError(f"no camera named {camera!r}")
        return render_scene(self._render_prims(self.worlds[env]), cam, self.config.lights)

    def _render_prims(self, w: _World) -> list[dict]:
        prims: list[dict] = []
        for name in sorted(w.rigid):
            b = w.rigid[name]
            mat = self._object_cfgs[name].material
            prims.append(
                {
                    "shape": b.shape,
                    "pose": Pose(pos=tuple(float(x) for x in b.pos), quat=b.quat),
                    "dims": b.dims,
                    "color": mat.base_color,
                }
            )
        for name in sorted(w.artic):
            a = w.artic[name]
            asset = self._assets[name]
            poses = forward_kinematics(asset, a.base_pose, a.dof_pos)
            obj_cfg = self._object_cfgs.get(name)
            fallback = obj_cfg.material.base_color if obj_cfg is not None else (0.6, 0.6, 0.65)
            for body in asset.bodies:
                for g in body.geoms:
                    if g.shape not in ("sphere", "box", "plane") or g.role == "collision":
                        continue
                    prims.append(
                        {
                            "shape": g.shape,
                            "pose": poses[body.name].compose(g.pose),
                            "dims": g.dims,
                            "color": g.rgba[:3] if g.rgba is not None else fallback,
                        }
                    )
        return prims

    # -- misc -------------------------------------------------------------

    def get_extra(self) -> dict:
        return {
            "backend": self.backend_name,
            "num_envs": self.num_envs,
            "step_count": self.step_count,
        }

    def initial_state(self) -> SceneState:
        return self._initial

    def close(self) -> None:
        self._closed = True

    def _check_open(self) -> None:
        if self._closed:
            raise BackendError("handler is closed")


def resolve_backend_name(backend: str | None) -> str:
    if backend is not None:
        return backend
    return os.environ.get("SIMKIT_BACKEND", "dyn")
