"""Scenario configuration: the universal description every backend consumes.

Configs are frozen dataclasses built from the scenario text grammar (see
scenario_io).  Field-for-field round-trips hold: parse -> serialize -> parse
gives an equal config.  apply_overrides and validate work on the plain-tree
form so dotted override paths and error paths line up with the file syntax.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

from . import checkers as ck
from .assets import CanonicalAsset, load_asset
from .scenario_io import (
    ScenarioSyntaxError,
    parse_scalar,
    parse_tree,
    serialize_tree,
)
from .transforms import Pose, Quat, Vec3, look_at_pose, quat_norm

DEFAULT_DT = 1.0 / 60.0
DEFAULT_GRAVITY: Vec3 = (0.0, 0.0, -9.81)
DEFAULT_RESTITUTION = 0.5
DEFAULT_SOLVER_ITERATIONS = 8

PRIMITIVE_SHAPES = ("sphere", "box", "plane")


class ConfigError(Exception):
    """Raised for malformed scenario trees and bad overrides; message carries the path."""


@dataclass(frozen=True)
class MaterialParams:
    base_color: Vec3 = (0.7, 0.7, 0.7)
    roughness: float = 0.5
    specular: float = 0.5
    metallic: float = 0.0


@dataclass(frozen=True)
class CameraConfig:
    name: str
    pose: Pose = Pose()
    vertical_fov: float = 45.0  # degrees
    width: int = 256
    height: int = 256


@dataclass(frozen=True)
class LightConfig:
    kind: str = "distant"  # distant | cylinder_array
    polar: float = 30.0  # degrees from zenith (distant)
    azimuth: float = 0.0  # degrees (distant)
    rows: int = 1  # grid shape (cylinder_array)
    cols: int = 1
    size: float = 0.1  # cylinder radius, m
    height: float = 2.0  # mounting height, m
    intensity: float = 1.0
    color_temperature: float = 6500.0  # kelvin


@dataclass(frozen=True)
class SimParams:
    dt: float = DEFAULT_DT
    decimation: int = 1
    gravity: Vec3 = DEFAULT_GRAVITY
    solver_iterations: int = DEFAULT_SOLVER_ITERATIONS


@dataclass(frozen=True)
class RobotConfig:
    name: str
    asset: "str | CanonicalAsset" = ""
    base_pose: Pose = Pose()
    default_dof_pos: tuple[float, ...] = ()
    ee_frame: str | None = None
    gripper_joints: tuple[str, ...] = ()


@dataclass(frozen=True)
class ObjectConfig:
    name: str
    kind: str = "primitive"  # primitive | articulated
    shape: str | None = None  # primitive only
    dims: tuple[float, ...] = ()
    asset: "str | CanonicalAsset | None" = None  # articulated only
    base_pose: Pose = Pose()
    mass: float = 1.0  # 0 means static
    restitution: float = DEFAULT_RESTITUTION
    material: MaterialParams = MaterialParams()


@dataclass(frozen=True)
class ObjectRange:
    """Uniform position range for episode-start randomization of one entity."""

    entity: str
    lo: Vec3
    hi: Vec3


@dataclass(frozen=True)
class SubtaskSpec:
    name: str
    anchor: str  # entity whose frame anchors this segment
    done: ck.SuccessChecker | None = None


@dataclass(frozen=True)
class TaskConfig:
    episode_length: int = 100
    instruction: str = ""
    checker: ck.SuccessChecker | None = None
    object_ranges: tuple[ObjectRange, ...] = ()
    subtasks: tuple[SubtaskSpec, ...] = ()


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    robots: tuple[RobotConfig, ...] = ()
    objects: tuple[ObjectConfig, ...] = ()
    cameras: tuple[CameraConfig, ...] = ()
    lights: tuple[LightConfig, ...] = ()
    task: TaskConfig = TaskConfig()
    sim: SimParams = SimParams()
    backend_extras: dict = field(default_factory=dict)
    base_dir: str = field(default=".", compare=False)


# ---------------------------------------------------------------------------
# tree -> config


def _want(tree, kind, path):
    if not isinstance(tree, kind):
        names = kind.__name__ if not isinstance(kind, tuple) else "/".join(k.__name__ for k in kind)
        raise ConfigError(f"{path}: expected {names}, got {type(tree).__name__}")
    return tree


def _num(v, path) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    return float(v)


def _int(v, path) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    return v


def _str(v, path) -> str:
    if not isinstance(v, str):
        raise ConfigError(f"{path}: expected a string, got {v!r}")
    return v


def _vec(v, n, path) -> tuple[float, ...]:
    if not isinstance(v, list) or len(v) != n:
        raise ConfigError(f"{path}: expected a {n}-vector")
    return tuple(float(x) for x in v)


def _floats(v, path) -> tuple[float, ...]:
    if not isinstance(v, list):
        raise ConfigError(f"{path}: expected a list of numbers")
    return tuple(float(x) for x in v)


def _check_keys(tree: dict, allowed, path):
    for k in tree:
        if k not in allowed:
            raise ConfigError(f"{path}: unknown field {k!r}")


def _pose_from_tree(tree, path) -> Pose:
    _want(tree, dict, path)
    _check_keys(tree, ("pos", "quat", "look_at"), path)
    pos = _vec(tree["pos"], 3, f"{path}.pos") if "pos" in tree else (0.0, 0.0, 0.0)
    if "look_at" in tree:
        if "quat" in tree:
            raise ConfigError(f"{path}: give either quat or look_at, not both")
        target = _vec(tree["look_at"], 3, f"{path}.look_at")
        return look_at_pose(pos, target)
    quat = tuple(_vec(tree["quat"], 4, f"{path}.quat")) if "quat" in tree else (1.0, 0.0, 0.0, 0.0)
    return Pose(pos=pos, quat=quat)


_CHECKER_KEYS = {
    "position_within",
    "position_shift",
    "joint_pos_threshold",
    "relative_pose",
    "all",
    "any",
}


def checker_from_tree(tree, path) -> ck.SuccessChecker:
    _want(tree, dict, path)
    if len(tree) != 1:
        raise ConfigError(f"{path}: a checker needs exactly one kind key, got {sorted(tree)}")
    kind, body = next(iter(tree.items()))
    if kind not in _CHECKER_KEYS:
        raise ConfigError(f"{path}: unknown checker kind {kind!r}")
    p = f"{path}.{kind}"
    if kind in ("all", "any"):
        _want(body, list, p)
        subs = tuple(checker_from_tree(item, f"{p}.{i}") for i, item in enumerate(body))
        if not subs:
            raise ConfigError(f"{p}: needs at least one sub-checker")
        return ck.AllOf(subs) if kind == "all" else ck.AnyOf(subs)
    _want(body, dict, p)
    if kind == "position_within":
        _check_keys(body, ("entity", "center", "radius"), p)
        return ck.PositionWithin(
            entity=_str(body.get("entity"), f"{p}.entity"),
            center=_vec(body.get("center"), 3, f"{p}.center"),
            radius=_num(body.get("radius"), f"{p}.radius"),
        )
    if kind == "position_shift":
        _check_keys(body, ("entity", "axis", "min_shift"), p)
        return ck.PositionShift(
            entity=_str(body.get("entity"), f"{p}.entity"),
            axis=_vec(body.get("axis"), 3, f"{p}.axis"),
            min_shift=_num(body.get("min_shift"), f"{p}.min_shift"),
        )
    if kind == "joint_pos_threshold":
        _check_keys(body, ("entity", "joint", "threshold", "direction"), p)
        direction = body.get("direction", "ge")
        if direction not in ("ge", "le"):
            raise ConfigError(f"{p}.direction: expected 'ge' or 'le', got {direction!r}")
        return ck.JointPosThreshold(
            entity=_str(body.get("entity"), f"{p}.entity"),
            joint=_str(body.get("joint"), f"{p}.joint"),
            threshold=_num(body.get("threshold"), f"{p}.threshold"),
            direction=direction,
        )
    _check_keys(body, ("entity_a", "entity_b", "target_rel", "max_pos_err", "max_rot_err"), p)
    return ck.RelativePose(
        entity_a=_str(body.get("entity_a"), f"{p}.entity_a"),
        entity_b=_str(body.get("entity_b"), f"{p}.entity_b"),
        target_rel=_pose_from_tree(body.get("target_rel", {}), f"{p}.target_rel"),
        max_pos_err=_num(body.get("max_pos_err"), f"{p}.max_pos_err"),
        max_rot_err=_num(body.get("max_rot_err"), f"{p}.max_rot_err"),
    )


def _material_from_tree(tree, path) -> MaterialParams:
    _want(tree, dict, path)
    _check_keys(tree, ("base_color", "roughness", "specular", "metallic"), path)
    kw = {}
    if "base_color" in tree:
        kw["base_color"] = _vec(tree["base_color"], 3, f"{path}.base_color")
    for k in ("roughness", "specular", "metallic"):
        if k in tree:
            kw[k] = _num(tree[k], f"{path}.{k}")
    return MaterialParams(**kw)


def _robot_from_tree(tree, path) -> RobotConfig:
    _want(tree, dict, path)
    allowed = ("name", "asset", "base_pose", "default_dof_pos", "ee_frame", "gripper_joints")
    _check_keys(tree, allowed, path)
    if "name" not in tree:
        raise ConfigError(f"{path}: robot needs a name")
    kw: dict = {"name": _str(tree["name"], f"{path}.name")}
    if "asset" in tree:
        kw["asset"] = _str(tree["asset"], f"{path}.asset")
    if "base_pose" in tree:
        kw["base_pose"] = _pose_from_tree(tree["base_pose"], f"{path}.base_pose")
    if "default_dof_pos" in tree:
        kw["default_dof_pos"] = _floats(tree["default_dof_pos"], f"{path}.default_dof_pos")
    if "ee_frame" in tree:
        kw["ee_frame"] = _str(tree["ee_frame"], f"{path}.ee_frame")
    if "gripper_joints" in tree:
        v = tree["gripper_joints"]
        if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
            raise ConfigError(f"{path}.gripper_joints: expected a list of joint names")
        kw["gripper_joints"] = tuple(v)
    return RobotConfig(**kw)


def _object_from_tree(tree, path) -> ObjectConfig:
    _want(tree, dict, path)
    allowed = ("name", "kind", "shape", "dims", "asset", "base_pose", "mass", "restitution", "material")
    _check_keys(tree, allowed, path)
    if "name" not in tree:
        raise ConfigError(f"{path}: object needs a name")
    kw: dict = {"name": _str(tree["name"], f"{path}.name")}
    if "kind" in tree:
        kind = _str(tree["kind"], f"{path}.kind")
        if kind not in ("primitive", "articulated"):
            raise ConfigError(f"{path}.kind: expected primitive or articulated, got {kind!r}")
        kw["kind"] = kind
    if "shape" in tree:
        kw["shape"] = _str(tree["shape"], f"{path}.shape")
    if "dims" in tree:
        kw["dims"] = _floats(tree["dims"], f"{path}.dims")
    if "asset" in tree:
        kw["asset"] = _str(tree["asset"], f"{path}.asset")
    if "base_pose" in tree:
        kw["base_pose"] = _pose_from_tree(tree["base_pose"], f"{path}.base_pose")
    if "mass" in tree:
        kw["mass"] = _num(tree["mass"], f"{path}.mass")
    if "restitution" in tree:
        kw["restitution"] = _num(tree["restitution"], f"{path}.restitution")
    if "material" in tree:
        kw["material"] = _material_from_tree(tree["material"], f"{path}.material")
    return ObjectConfig(**kw)


def _camera_from_tree(tree, path) -> CameraConfig:
    _want(tree, dict, path)
    _check_keys(tree, ("name", "pose", "vertical_fov", "width", "height"), path)
    if "name" not in tree:
        raise ConfigError(f"{path}: camera needs a name")
    kw: dict = {"name": _str(tree["name"], f"{path}.name")}
    if "pose" in tree:
        kw["pose"] = _pose_from_tree(tree["pose"], f"{path}.pose")
    if "vertical_fov" in tree:
        kw["vertical_fov"] = _num(tree["vertical_fov"], f"{path}.vertical_fov")
    for k in ("width", "height"):
        if k in tree:
            kw[k] = _int(tree[k], f"{path}.{k}")
    return CameraConfig(**kw)


def _light_from_tree(tree, path) -> LightConfig:
    _want(tree, dict, path)
    allowed = ("kind", "polar", "azimuth", "rows", "cols", "size", "height", "intensity", "color_temperature")
    _check_keys(tree, allowed, path)
    kw: dict = {}
    if "kind" in tree:
        kind = _str(tree["kind"], f"{path}.kind")
        if kind not in ("distant", "cylinder_array"):
            raise ConfigError(f"{path}.kind: expected distant or cylinder_array, got {kind!r}")
        kw["kind"] = kind
    for k in ("polar", "azimuth", "size", "height", "intensity", "color_temperature"):
        if k in tree:
            kw[k] = _num(tree[k], f"{path}.{k}")
    for k in ("rows", "cols"):
        if k in tree:
            kw[k] = _int(tree[k], f"{path}.{k}")
    return LightConfig(**kw)


def _subtask_from_tree(tree, path) -> SubtaskSpec:
    _want(tree, dict, path)
    _check_keys(tree, ("name", "anchor", "done"), path)
    if "name" not in tree or "anchor" not in tree:
        raise ConfigError(f"{path}: subtask needs name and anchor")
    done = checker_from_tree(tree["done"], f"{path}.done") if "done" in tree else None
    return SubtaskSpec(
        name=_str(tree["name"], f"{path}.name"),
        anchor=_str(tree["anchor"], f"{path}.anchor"),
        done=done,
    )


def _task_from_tree(tree, path) -> TaskConfig:
    _want(tree, dict, path)
    _check_keys(tree, ("episode_length", "instruction", "checker", "object_ranges", "subtasks"), path)
    kw: dict = {}
    if "episode_length" in tree:
        kw["episode_length"] = _int(tree["episode_length"], f"{path}.episode_length")
    if "instruction" in tree:
        kw["instruction"] = _str(tree["instruction"], f"{path}.instruction")
    if "checker" in tree:
        kw["checker"] = checker_from_tree(tree["checker"], f"{path}.checker")
    if "object_ranges" in tree:
        _want(tree["object_ranges"], list, f"{path}.object_ranges")
        ranges = []
        for i, item in enumerate(tree["object_ranges"]):
            p = f"{path}.object_ranges.{i}"
            _want(item, dict, p)
            _check_keys(item, ("entity", "lo", "hi"), p)
            ranges.append(
                ObjectRange(
                    entity=_str(item.get("entity"), f"{p}.entity"),
                    lo=_vec(item.get("lo"), 3, f"{p}.lo"),
                    hi=_vec(item.get("hi"), 3, f"{p}.hi"),
                )
            )
        kw["object_ranges"] = tuple(ranges)
    if "subtasks" in tree:
        _want(tree["subtasks"], list, f"{path}.subtasks")
        kw["subtasks"] = tuple(
            _subtask_from_tree(item, f"{path}.subtasks.{i}") for i, item in enumerate(tree["subtasks"])
        )
    return TaskConfig(**kw)


def _sim_from_tree(tree, path) -> SimParams:
    _want(tree, dict, path)
    _check_keys(tree, ("dt", "decimation", "gravity", "solver_iterations"), path)
    kw: dict = {}
    if "dt" in tree:
        kw["dt"] = _num(tree["dt"], f"{path}.dt")
    if "decimation" in tree:
        kw["decimation"] = _int(tree["decimation"], f"{path}.decimation")
    if "gravity" in tree:
        kw["gravity"] = _vec(tree["gravity"], 3, f"{path}.gravity")
    if "solver_iterations" in tree:
        kw["solver_iterations"] = _int(tree["solver_iterations"], f"{path}.solver_iterations")
    return SimParams(**kw)


def config_from_tree(tree, base_dir: str = ".") -> ScenarioConfig:
    _want(tree, dict, "scenario")
    allowed = ("name", "robots", "objects", "cameras", "lights", "task", "sim", "backend_extras")
    _check_keys(tree, allowed, "scenario")
    if "name" not in tree:
        raise ConfigError("scenario: missing name")
    kw: dict = {"name": _str(tree["name"], "name"), "base_dir": base_dir}
    for key, builder in (
        ("robots", _robot_from_tree),
        ("objects", _object_from_tree),
        ("cameras", _camera_from_tree),
        ("lights", _light_from_tree),
    ):
        if key in tree:
            _want(tree[key], list, key)
            kw[key] = tuple(builder(item, f"{key}.{i}") for i, item in enumerate(tree[key]))
    if "task" in tree:
        kw["task"] = _task_from_tree(tree["task"], "task")
    if "sim" in tree:
        kw["sim"] = _sim_from_tree(tree["sim"], "sim")
    if "backend_extras" in tree:
        extras = _want(tree["backend_extras"], dict, "backend_extras")
        for bk, bv in extras.items():
            _want(bv, dict, f"backend_extras.{bk}")
        kw["backend_extras"] = extras
    return ScenarioConfig(**kw)


# ---------------------------------------------------------------------------
# config -> tree


def _pose_to_tree(pose: Pose) -> dict:
    return {"pos": list(pose.pos), "quat": list(pose.quat)}


def checker_to_tree(checker: ck.SuccessChecker) -> dict:
    if isinstance(checker, ck.PositionWithin):
        return {"position_within": {"entity": checker.entity, "center": list(checker.center), "radius": checker.radius}}
    if isinstance(checker, ck.PositionShift):
        return {"position_shift": {"entity": checker.entity, "axis": list(checker.axis), "min_shift": checker.min_shift}}
    if isinstance(checker, ck.JointPosThreshold):
        return {
            "joint_pos_threshold": {
                "entity": checker.entity,
                "joint": checker.joint,
                "threshold": checker.threshold,
                "direction": checker.direction,
            }
        }
    if isinstance(checker, ck.RelativePose):
        return {
            "relative_pose": {
                "entity_a": checker.entity_a,
                "entity_b": checker.entity_b,
                "target_rel": _pose_to_tree(checker.target_rel),
                "max_pos_err": checker.max_pos_err,
                "max_rot_err": checker.max_rot_err,
            }
        }
    if isinstance(checker, ck.AllOf):
        return {"all": [checker_to_tree(c) for c in checker.checkers]}
    if isinstance(checker, ck.AnyOf):
        return {"any": [checker_to_tree(c) for c in checker.checkers]}
    raise ConfigError(f"checker {type(checker).__name__} cannot be serialized")


def config_to_tree(cfg: ScenarioConfig) -> dict:
    tree: dict = {"name": cfg.name}
    if cfg.robots:
        robots = []
        for r in cfg.robots:
            if not isinstance(r.asset, str):
                raise ConfigError(f"robot {r.name!r}: inline assets cannot be serialized")
            item: dict = {"name": r.name, "asset": r.asset, "base_pose": _pose_to_tree(r.base_pose)}
            if r.default_dof_pos:
                item["default_dof_pos"] = list(r.default_dof_pos)
            if r.ee_frame is not None:
                item["ee_frame"] = r.ee_frame
            if r.gripper_joints:
                item["gripper_joints"] = list(r.gripper_joints)
            robots.append(item)
        tree["robots"] = robots
    if cfg.objects:
        objects = []
        for o in cfg.objects:
            item = {"name": o.name, "kind": o.kind}
            if o.kind == "primitive":
                item["shape"] = o.shape
                item["dims"] = list(o.dims)
            else:
                if not isinstance(o.asset, str):
                    raise ConfigError(f"object {o.name!r}: inline assets cannot be serialized")
                item["asset"] = o.asset
            item["base_pose"] = _pose_to_tree(o.base_pose)
            item["mass"] = o.mass
            item["restitution"] = o.restitution
            item["material"] = {
                "base_color": list(o.material.base_color),
                "roughness": o.material.roughness,
                "specular": o.material.specular,
                "metallic": o.material.metallic,
            }
            objects.append(item)
        tree["objects"] = objects
    if cfg.cameras:
        tree["cameras"] = [
            {
                "name": c.name,
                "pose": _pose_to_tree(c.pose),
                "vertical_fov": c.vertical_fov,
                "width": c.width,
                "height": c.height,
            }
            for c in cfg.cameras
        ]
    if cfg.lights:
        lights = []
        for l in cfg.lights:
            item = {"kind": l.kind}
            if l.kind == "distant":
                item["polar"] = l.polar
                item["azimuth"] = l.azimuth
            else:
                item["rows"] = l.rows
                item["cols"] = l.cols
                item["size"] = l.size
                item["height"] = l.height
            item["intensity"] = l.intensity
            item["color_temperature"] = l.color_temperature
            lights.append(item)
        tree["lights"] = lights
    task: dict = {"episode_length": cfg.task.episode_length}
    if cfg.task.instruction:
        task["instruction"] = cfg.task.instruction
    if cfg.task.checker is not None:
        task["checker"] = checker_to_tree(cfg.task.checker)
    if cfg.task.object_ranges:
        task["object_ranges"] = [
            {"entity": r.entity, "lo": list(r.lo), "hi": list(r.hi)} for r in cfg.task.object_ranges
        ]
    if cfg.task.subtasks:
        subtasks = []
        for s in cfg.task.subtasks:
            item = {"name": s.name, "anchor": s.anchor}
            if s.done is not None:
                item["done"] = checker_to_tree(s.done)
            subtasks.append(item)
        task["subtasks"] = subtasks
    tree["task"] = task
    tree["sim"] = {
        "dt": cfg.sim.dt,
        "decimation": cfg.sim.decimation,
        "gravity": list(cfg.sim.gravity),
        "solver_iterations": cfg.sim.solver_iterations,
    }
    if cfg.backend_extras:
        # Deep-copied so override application never mutates the source config.
        tree["backend_extras"] = {k: dict(v) for k, v in cfg.backend_extras.items()}
    return tree


# ---------------------------------------------------------------------------
# public entry points


def parse_scenario(source: str, base_dir: str = ".") -> ScenarioConfig:
    try:
        tree = parse_tree(source)
    except ScenarioSyntaxError as e:
        raise ConfigError(str(e)) from None
    return config_from_tree(tree, base_dir=base_dir)


def load_scenario(path: str) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            source = f.read()
    except OSError as e:
        raise ConfigError(f"{path}: {e}") from None
    base = os.path.dirname(os.path.abspath(path))
    try:
        return parse_scenario(source, base_dir=base)
    except ConfigError as e:
        raise ConfigError(f"{path}: {e}") from None


def serialize_scenario(cfg: ScenarioConfig) -> str:
    return serialize_tree(config_to_tree(cfg))


def save_scenario(cfg: ScenarioConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize_scenario(cfg))


# ---------------------------------------------------------------------------
# overrides


def _parse_override(spec: str) -> tuple[list[str], object]:
    if "=" not in spec:
        raise ConfigError(f"override {spec!r} must look like dotted.path=value")
    path, _, raw = spec.partition("=")
    path = path.strip()
    if not path:
        raise ConfigError(f"override {spec!r} has an empty path")
    try:
        value = parse_scalar(raw.strip())
    except ScenarioSyntaxError as e:
        raise ConfigError(f"override {spec!r}: {e}") from None
    return path.split("."), value


def apply_overrides(cfg: ScenarioConfig, overrides: list[str]) -> ScenarioConfig:
    """Apply `dotted.path=value` overrides, last-wins, returning a new config.

    List fields are addressed by zero-based index.  Unknown fields and type
    mismatches raise ConfigError naming the offending path.
    """
    if not overrides:
        return cfg
    tree = config_to_tree(cfg)
    for spec in overrides:
        segments, value = _parse_override(spec)
        node = tree
        walked: list[str] = []
        for seg in segments[:-1]:
            walked.append(seg)
            node = _descend(node, seg, walked)
        leaf = segments[-1]
        _assign(node, leaf, value, segments)
    return config_from_tree(tree, base_dir=cfg.base_dir)


def _descend(node, seg: str, walked: list[str]):
    where = ".".join(walked)
    if isinstance(node, list):
        try:
            idx = int(seg)
        except ValueError:
            raise ConfigError(f"{where}: expected a list index, got {seg!r}") from None
        if not 0 <= idx < len(node):
            raise ConfigError(f"{where}: index {idx} out of range (length {len(node)})")
        return node[idx]
    if isinstance(node, dict):
        if seg not in node:
            raise ConfigError(f"{where}: unknown field")
        return node[seg]
    raise ConfigError(f"{where}: cannot descend into a scalar")


def _assign(node, leaf: str, value, segments: list[str]):
    where = ".".join(segments)
    if isinstance(node, list):
        try:
            idx = int(leaf)
        except ValueError:
            raise ConfigError(f"{where}: expected a list index, got {leaf!r}") from None
        if not 0 <= idx < len(node):
            raise ConfigError(f"{where}: index {idx} out of range (length {len(node)})")
        node[idx] = value
    elif isinstance(node, dict):
        node[leaf] = value
    else:
        raise ConfigError(f"{where}: cannot assign into a scalar")


# ---------------------------------------------------------------------------
# asset resolution


_asset_cache: dict[str, CanonicalAsset] = {}


def resolve_asset(cfg: ScenarioConfig, ref: "str | CanonicalAsset") -> CanonicalAsset:
    """Load an asset reference, caching parses by absolute path."""
    if isinstance(ref, CanonicalAsset):
        return ref
    path = ref if os.path.isabs(ref) else os.path.join(cfg.base_dir, ref)
    path = os.path.normpath(path)
    cached = _asset_cache.get(path)
    if cached is None:
        cached = load_asset(path)
        _asset_cache[path] = cached
    return cached


# ---------------------------------------------------------------------------
# validation


def _check_quat(q: Quat, path: str, problems: list[str]) -> None:
    if abs(quat_norm(q) - 1.0) > 1e-6:
        problems.append(f"{path}: quaternion is not normalized (|q| = {quat_norm(q):.9f})")


def _validate_entity_asset(cfg, ref, path, problems) -> CanonicalAsset | None:
    try:
        return resolve_asset(cfg, ref)
    except Exception as e:
        problems.append(f"{path}: asset failed to load: {e}")
        return None


def validate(cfg: ScenarioConfig) -> list[str]:
    """Deterministic list of violations; empty means the config can launch."""
    problems: list[str] = []
    if not cfg.name:
        problems.append("name: must not be empty")
    if not cfg.robots and not cfg.objects:
        problems.append("scenario: needs at least one robot or object")

    seen: dict[str, str] = {}
    for i, r in enumerate(cfg.robots):
        path = f"robots.{i}"
        if not r.name:
            problems.append(f"{path}.name: must not be empty")
        if r.name in seen:
            problems.append(f"{path}.name: duplicate entity name {r.name!r} (also {seen[r.name]})")
        seen[r.name] = path
        _check_quat(r.base_pose.quat, f"{path}.base_pose.quat", problems)
        if not r.asset:
            problems.append(f"{path}.asset: robot needs an asset")
            continue
        asset = _validate_entity_asset(cfg, r.asset, f"{path}.asset", problems)
        if asset is None:
            continue
        if len(r.default_dof_pos) != asset.dof_count:
            problems.append(
                f"{path}.default_dof_pos: length {len(r.default_dof_pos)} does not match "
                f"asset dof count {asset.dof_count}"
            )
        if r.ee_frame is not None and all(b.name != r.ee_frame for b in asset.bodies):
            problems.append(f"{path}.ee_frame: no body named {r.ee_frame!r} in asset")
        for g in r.gripper_joints:
            if g not in asset.actuated_order:
                problems.append(f"{path}.gripper_joints: {g!r} is not an actuated joint of the asset")

    for i, o in enumerate(cfg.objects):
        path = f"objects.{i}"
        if not o.name:
            problems.append(f"{path}.name: must not be empty")
        if o.name in seen:
            problems.append(f"{path}.name: duplicate entity name {o.name!r} (also {seen[o.name]})")
        seen[o.name] = path
        _check_quat(o.base_pose.quat, f"{path}.base_pose.quat", problems)
        if o.mass < 0:
            problems.append(f"{path}.mass: must be >= 0")
        if not 0.0 <= o.restitution <= 1.0:
            problems.append(f"{path}.restitution: must be within [0, 1]")
        if o.kind == "primitive":
            if o.shape not in PRIMITIVE_SHAPES:
                problems.append(f"{path}.shape: expected one of {PRIMITIVE_SHAPES}, got {o.shape!r}")
            else:
                arity = {"sphere": 1, "box": 3, "plane": 2}[o.shape]
                if len(o.dims) < arity:
                    problems.append(f"{path}.dims: {o.shape} needs {arity} dims")
                elif any(d <= 0 for d in o.dims[:arity]):
                    problems.append(f"{path}.dims: must be positive")
        else:
            if o.asset is None:
                problems.append(f"{path}.asset: articulated object needs an asset")
            else:
                _validate_entity_asset(cfg, o.asset, f"{path}.asset", problems)
        mat = o.material
        for comp in mat.base_color:
            if not 0.0 <= comp <= 1.0:
                problems.append(f"{path}.material.base_color: components must be within [0, 1]")
                break
        for k in ("roughness", "specular", "metallic"):
            v = getattr(mat, k)
            if not 0.0 <= v <= 1.0:
                problems.append(f"{path}.material.{k}: must be within [0, 1]")

    cam_names = set()
    for i, c in enumerate(cfg.cameras):
        path = f"cameras.{i}"
        if c.name in cam_names:
            problems.append(f"{path}.name: duplicate camera name {c.name!r}")
        cam_names.add(c.name)
        if not 0.0 < c.vertical_fov < 180.0:
            problems.append(f"{path}.vertical_fov: must be within (0, 180) degrees")
        if c.width < 1 or c.height < 1:
            problems.append(f"{path}: width and height must be >= 1")
        _check_quat(c.pose.quat, f"{path}.pose.quat", problems)

    for i, l in enumerate(cfg.lights):
        path = f"lights.{i}"
        if l.intensity < 0:
            problems.append(f"{path}.intensity: must be >= 0")
        if l.kind == "cylinder_array" and (l.rows < 1 or l.cols < 1):
            problems.append(f"{path}: cylinder_array rows and cols must be >= 1")
        if l.color_temperature <= 0:
            problems.append(f"{path}.color_temperature: must be positive kelvin")

    if cfg.task.episode_length < 1:
        problems.append("task.episode_length: must be >= 1")
    if cfg.task.checker is not None:
        for ent in sorted(ck.checker_entities(cfg.task.checker)):
            if ent not in seen:
                problems.append(f"task.checker: references unknown entity {ent!r}")
        problems.extend(_validate_joint_refs(cfg, cfg.task.checker, "task.checker", seen))
    for i, rng in enumerate(cfg.task.object_ranges):
        path = f"task.object_ranges.{i}"
        if rng.entity not in seen:
            problems.append(f"{path}.entity: unknown entity {rng.entity!r}")
        if any(lo > hi for lo, hi in zip(rng.lo, rng.hi)):
            problems.append(f"{path}: lo must be <= hi componentwise")
    for i, s in enumerate(cfg.task.subtasks):
        path = f"task.subtasks.{i}"
        if s.anchor not in seen:
            problems.append(f"{path}.anchor: unknown entity {s.anchor!r}")
        if s.done is not None:
            for ent in sorted(ck.checker_entities(s.done)):
                if ent not in seen:
                    problems.append(f"{path}.done: references unknown entity {ent!r}")

    if not cfg.sim.dt > 0:
        problems.append("sim.dt: must be positive")
    if cfg.sim.decimation < 1:
        problems.append("sim.decimation: must be >= 1")
    if cfg.sim.solver_iterations < 1:
        problems.append("sim.solver_iterations: must be >= 1")
    if not all(math.isfinite(g) for g in cfg.sim.gravity):
        problems.append("sim.gravity: must be finite")

    return problems


def _validate_joint_refs(cfg: ScenarioConfig, checker, path: str, seen: dict) -> list[str]:
    problems: list[str] = []
    if isinstance(checker, ck.JointPosThreshold):
        ent_cfg = None
        for r in cfg.robots:
            if r.name == checker.entity:
                ent_cfg = r
        for o in cfg.objects:
            if o.name == checker.entity:
                ent_cfg = o
        if ent_cfg is not None and getattr(ent_cfg, "asset", None):
            try:
                asset = resolve_asset(cfg, ent_cfg.asset)
            except Exception:
                return problems
            if checker.joint not in asset.actuated_order:
                problems.append(
                    f"{path}: entity {checker.entity!r} has no actuated joint {checker.joint!r}"
                )
    elif isinstance(checker, (ck.AllOf, ck.AnyOf)):
        for i, c in enumerate(checker.checkers):
            problems.extend(_validate_joint_refs(cfg, c, f"{path}.{i}", seen))
    return problems


def scene_entity_names(cfg: ScenarioConfig) -> list[str]:
    return [r.name for r in cfg.robots] + [o.name for o in cfg.objects]
