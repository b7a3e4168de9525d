"""Canonical articulated-asset model plus URDF/MJCF import and URDF export.

The canonical form is a single rooted body tree.  Every non-root body is
connected to its parent by exactly one joint; a joint with ``parent=None`` is
the root's mounting joint (only ``free`` makes sense there).  The child body
frame coincides with the joint frame: a joint moves its child by
``origin * motion(q)`` relative to the parent frame, with the axis expressed
in the child frame.  MJCF joints anchored away from the body origin are
re-expressed in this form by shifting the child frame onto the anchor.

Angles are radians, lengths meters, quaternions (w, x, y, z).  Box dims are
full extents (URDF convention); MJCF half-sizes are doubled on import.
"""

from __future__ import annotations

import math
import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace

import numpy as np

from .transforms import (
    IDENTITY_QUAT,
    Pose,
    Quat,
    Vec3,
    mat_to_quat,
    quat_from_euler,
    quat_from_rpy,
    quat_mul,
    quat_normalize,
    quat_rotate,
    quat_to_rpy,
    vec_add,
    vec_normalize,
    vec_sub,
)

REVOLUTE = "revolute"
PRISMATIC = "prismatic"
FIXED = "fixed"
FREE = "free"

JOINT_KINDS = (REVOLUTE, PRISMATIC, FIXED, FREE)

# Axis placeholder for joints whose kind has no axis (fixed/free).
NO_AXIS: Vec3 = (1.0, 0.0, 0.0)


class AssetError(Exception):
    """Base class for asset import/export failures; message carries file context."""


class MalformedAsset(AssetError):
    pass


class UnsupportedJointKind(AssetError):
    pass


@dataclass(frozen=True)
class Inertial:
    mass: float = 0.0
    com: Vec3 = (0.0, 0.0, 0.0)
    rot: Quat = IDENTITY_QUAT
    diag: Vec3 = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Geom:
    shape: str  # sphere | box | plane | mesh
    pose: Pose = Pose()
    dims: tuple[float, ...] = ()
    mesh_path: str | None = None
    role: str = "both"  # visual | collision | both
    rgba: tuple[float, float, float, float] | None = None


@dataclass(frozen=True)
class Body:
    name: str
    parent: str | None
    pose_in_parent: Pose = Pose()
    inertial: Inertial = Inertial()
    geoms: tuple[Geom, ...] = ()


@dataclass(frozen=True)
class Joint:
    name: str
    kind: str
    parent: str | None
    child: str
    origin: Pose = Pose()
    axis: Vec3 = NO_AXIS
    limits: tuple[float, float] | None = None


@dataclass(frozen=True)
class CanonicalAsset:
    name: str
    bodies: tuple[Body, ...]  # topological order, root first
    joints: tuple[Joint, ...]  # document order
    actuated_order: tuple[str, ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def body(self, name: str) -> Body:
        for b in self.bodies:
            if b.name == name:
                return b
        raise KeyError(f"no body named {name!r} in asset {self.name!r}")

    def joint(self, name: str) -> Joint:
        for j in self.joints:
            if j.name == name:
                return j
        raise KeyError(f"no joint named {name!r} in asset {self.name!r}")

    def joint_for_child(self, body_name: str) -> Joint | None:
        for j in self.joints:
            if j.child == body_name:
                return j
        return None

    @property
    def root(self) -> Body:
        return self.bodies[0]

    @property
    def dof_count(self) -> int:
        return len(self.actuated_order)


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_vec(v) -> str:
    return " ".join(_fmt(x) for x in v)


def _floats(text: str, path: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.split()]
    except ValueError:
        raise MalformedAsset(f"{path}: bad number in {what}: {text!r}") from None


def _validate_tree(name: str, bodies: list[Body], joints: list[Joint], path: str) -> None:
    body_names = [b.name for b in bodies]
    if len(set(body_names)) != len(body_names):
        raise MalformedAsset(f"{path}: duplicate body names in {name!r}")
    joint_names = [j.name for j in joints]
    if len(set(joint_names)) != len(joint_names):
        raise MalformedAsset(f"{path}: duplicate joint names in {name!r}")
    known = set(body_names)
    roots = [b for b in bodies if b.parent is None]
    if len(roots) != 1:
        raise MalformedAsset(
            f"{path}: asset {name!r} must have exactly one root body, found "
            f"{[b.name for b in roots]}"
        )
    for b in bodies:
        if b.parent is not None and b.parent not in known:
            raise MalformedAsset(f"{path}: body {b.name!r} has unknown parent {b.parent!r}")
    for j in joints:
        if j.child not in known:
            raise MalformedAsset(f"{path}: joint {j.name!r} has unknown child {j.child!r}")
        if j.parent is not None and j.parent not in known:
            raise MalformedAsset(f"{path}: joint {j.name!r} has unknown parent {j.parent!r}")
        if j.limits is not None and j.limits[0] > j.limits[1]:
            raise MalformedAsset(f"{path}: joint {j.name!r} has limits lo > hi")
    # Reject cycles / disconnected bodies: every body must reach the root.
    parent_of = {b.name: b.parent for b in bodies}
    root_name = roots[0].name
    for b in bodies:
        seen = set()
        cur: str | None = b.name
        while cur is not None:
            if cur in seen:
                raise MalformedAsset(f"{path}: body tree of {name!r} contains a cycle at {cur!r}")
            seen.add(cur)
            cur = parent_of[cur]
        if root_name not in seen:
            raise MalformedAsset(f"{path}: body {b.name!r} is not connected to the root")


def _topo_sort(bodies: list[Body]) -> list[Body]:
    by_parent: dict[str | None, list[Body]] = {}
    for b in bodies:
        by_parent.setdefault(b.parent, []).append(b)
    ordered: list[Body] = []
    stack = list(reversed(by_parent.get(None, [])))
    while stack:
        b = stack.pop()
        ordered.append(b)
        stack.extend(reversed(by_parent.get(b.name, [])))
    return ordered


def _finish(name: str, bodies: list[Body], joints: list[Joint], warnings: list[str], path: str) -> CanonicalAsset:
    _validate_tree(name, bodies, joints, path)
    actuated = tuple(j.name for j in joints if j.kind in (REVOLUTE, PRISMATIC))
    return CanonicalAsset(
        name=name,
        bodies=tuple(_topo_sort(bodies)),
        joints=tuple(joints),
        actuated_order=actuated,
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# URDF import


def _parse_origin(el: ET.Element | None) -> Pose:
    if el is None:
        return Pose()
    xyz = [float(t) for t in el.get("xyz", "0 0 0").split()]
    rpy = [float(t) for t in el.get("rpy", "0 0 0").split()]
    return Pose(pos=tuple(xyz), quat=quat_from_rpy(*rpy))


def _diagonalize(full: np.ndarray) -> tuple[Quat, Vec3]:
    scale = max(1.0, float(np.abs(full).max()))
    off = max(abs(full[0, 1]), abs(full[0, 2]), abs(full[1, 2]))
    if off <= 1e-12 * scale:
        # Already diagonal: keep the axis order so round-trips are exact.
        return IDENTITY_QUAT, (float(full[0, 0]), float(full[1, 1]), float(full[2, 2]))
    w, v = np.linalg.eigh(full)
    if np.linalg.det(v) < 0:
        v = v.copy()
        v[:, 0] = -v[:, 0]
    return mat_to_quat(v), (float(w[0]), float(w[1]), float(w[2]))


def _parse_urdf_inertial(el: ET.Element | None, path: str) -> Inertial:
    if el is None:
        return Inertial()
    origin = _parse_origin(el.find("origin"))
    mass_el = el.find("mass")
    mass = float(mass_el.get("value", "0")) if mass_el is not None else 0.0
    inertia_el = el.find("inertia")
    if inertia_el is None:
        return Inertial(mass=mass, com=origin.pos, rot=origin.quat)
    g = lambda k: float(inertia_el.get(k, "0"))
    full = np.array(
        [
            [g("ixx"), g("ixy"), g("ixz")],
            [g("ixy"), g("iyy"), g("iyz")],
            [g("ixz"), g("iyz"), g("izz")],
        ]
    )
    rot, diag = _diagonalize(full)
    if rot != IDENTITY_QUAT:
        # Compose the diagonalizing rotation with the declared inertial origin.
        rot = quat_mul(origin.quat, rot)
    else:
        rot = origin.quat
    return Inertial(mass=mass, com=origin.pos, rot=rot, diag=diag)


def _parse_urdf_geometry(geo: ET.Element, path: str, warnings: list[str]) -> tuple[str, tuple, str | None] | None:
    box = geo.find("box")
    if box is not None:
        return "box", tuple(_floats(box.get("size", "0 0 0"), path, "box size")), None
    sph = geo.find("sphere")
    if sph is not None:
        return "sphere", (float(sph.get("radius", "0")),), None
    mesh = geo.find("mesh")
    if mesh is not None:
        return "mesh", (), mesh.get("filename", "")
    for tag in ("cylinder", "capsule"):
        if geo.find(tag) is not None:
            warnings.append(f"{path}: unsupported geometry <{tag}> skipped")
            return None
    warnings.append(f"{path}: empty or unrecognized <geometry> skipped")
    return None


def _parse_urdf_geoms(link: ET.Element, path: str, warnings: list[str]) -> tuple[Geom, ...]:
    raw: list[Geom] = []
    for role in ("visual", "collision"):
        for el in link.findall(role):
            parsed = None
            geo = el.find("geometry")
            if geo is not None:
                parsed = _parse_urdf_geometry(geo, path, warnings)
            if parsed is None:
                continue
            shape, dims, mesh_path = parsed
            rgba = None
            mat = el.find("material")
            if mat is not None:
                color = mat.find("color")
                if color is not None:
                    vals = _floats(color.get("rgba", "1 1 1 1"), path, "material rgba")
                    rgba = tuple((vals + [1.0])[:4])
            raw.append(
                Geom(
                    shape=shape,
                    pose=_parse_origin(el.find("origin")),
                    dims=dims,
                    mesh_path=mesh_path,
                    role=role,
                    rgba=rgba,
                )
            )
    # A visual/collision pair with identical geometry collapses to one "both"
    # geom, so exported MJCF-sourced assets re-parse to the same structure.
    merged: list[Geom] = []
    used: set[int] = set()
    for i, g in enumerate(raw):
        if i in used:
            continue
        if g.role == "visual":
            for k, h in enumerate(raw):
                if (
                    k not in used
                    and k != i
                    and h.role == "collision"
                    and (h.shape, h.pose, h.dims, h.mesh_path) == (g.shape, g.pose, g.dims, g.mesh_path)
                ):
                    used.add(k)
                    g = replace(g, role="both")
                    break
        merged.append(g)
        used.add(i)
    return tuple(merged)


_URDF_JOINT_KINDS = {
    "revolute": REVOLUTE,
    "continuous": REVOLUTE,
    "prismatic": PRISMATIC,
    "fixed": FIXED,
    "floating": FREE,
}


def parse_urdf(path: str) -> CanonicalAsset:
    """Parse a URDF file into canonical form.

    Raises MalformedAsset on XML or tree violations, UnsupportedJointKind on
    joint types outside revolute/continuous/prismatic/fixed/floating.
    """
    try:
        tree = ET.parse(path)
    except ET.ParseError as e:
        raise MalformedAsset(f"{path}: XML parse error: {e}") from None
    except OSError as e:
        raise MalformedAsset(f"{path}: {e}") from None
    robot = tree.getroot()
    if robot.tag != "robot":
        raise MalformedAsset(f"{path}: root element is <{robot.tag}>, expected <robot>")
    name = robot.get("name", os.path.splitext(os.path.basename(path))[0])
    warnings: list[str] = []

    links: dict[str, ET.Element] = {}
    for link in robot.findall("link"):
        lname = link.get("name")
        if lname is None:
            raise MalformedAsset(f"{path}: <link> without a name")
        links[lname] = link
    if not links:
        raise MalformedAsset(f"{path}: no links")

    for tag in ("transmission", "gazebo", "mimic"):
        if robot.find(tag) is not None:
            warnings.append(f"{path}: <{tag}> ignored")

    joints: list[Joint] = []
    child_to_joint: dict[str, Joint] = {}
    for jel in robot.findall("joint"):
        jname = jel.get("name")
        jtype = jel.get("type")
        if jname is None or jtype is None:
            raise MalformedAsset(f"{path}: <joint> missing name or type")
        if jtype not in _URDF_JOINT_KINDS:
            raise UnsupportedJointKind(f"{path}: joint {jname!r} has unsupported type {jtype!r}")
        if jel.find("mimic") is not None:
            warnings.append(f"{path}: joint {jname!r} <mimic> ignored")
        parent_el = jel.find("parent")
        child_el = jel.find("child")
        if parent_el is None or child_el is None:
            raise MalformedAsset(f"{path}: joint {jname!r} missing parent or child")
        kind = _URDF_JOINT_KINDS[jtype]
        axis = NO_AXIS
        if kind in (REVOLUTE, PRISMATIC):
            axis_el = jel.find("axis")
            axis = (1.0, 0.0, 0.0)
            if axis_el is not None:
                axis = tuple(_floats(axis_el.get("xyz", "1 0 0"), path, "joint axis"))
            axis = vec_normalize(axis)
        limits = None
        limit_el = jel.find("limit")
        if limit_el is not None and jtype != "continuous" and kind in (REVOLUTE, PRISMATIC):
            limits = (float(limit_el.get("lower", "0")), float(limit_el.get("upper", "0")))
        j = Joint(
            name=jname,
            kind=kind,
            parent=parent_el.get("link"),
            child=child_el.get("link"),
            origin=_parse_origin(jel.find("origin")),
            axis=axis,
            limits=limits,
        )
        joints.append(j)
        if j.child in child_to_joint:
            raise MalformedAsset(f"{path}: link {j.child!r} is the child of two joints")
        child_to_joint[j.child] = j

    bodies: list[Body] = []
    for lname, link in links.items():
        j = child_to_joint.get(lname)
        bodies.append(
            Body(
                name=lname,
                parent=j.parent if j is not None else None,
                pose_in_parent=j.origin if j is not None else Pose(),
                inertial=_parse_urdf_inertial(link.find("inertial"), path),
                geoms=_parse_urdf_geoms(link, path, warnings),
            )
        )

    asset = _finish(name, bodies, joints, warnings, path)
    return _collapse_world_root(asset)


def _collapse_world_root(asset: CanonicalAsset) -> CanonicalAsset:
    """Fold the `world` link export convention back into a root mounting joint.

    A bare massless, geomless root named `world` with a single joint to a
    single child is how export_urdf writes assets whose root is attached to
    the world by a joint (a free-floating MJCF body, a pendulum hinged to the
    world).  Collapsing it restores parent=None on that joint.
    """
    root = asset.root
    if root.name != "world" or root.geoms or root.inertial.mass != 0.0:
        return asset
    mount = [j for j in asset.joints if j.parent == "world"]
    children = [b for b in asset.bodies if b.parent == "world"]
    if len(mount) != 1 or len(children) != 1:
        return asset
    j = mount[0]
    bodies = tuple(
        replace(b, parent=None) if b.name == j.child else b
        for b in asset.bodies
        if b.name != "world"
    )
    joints = tuple(replace(k, parent=None) if k.name == j.name else k for k in asset.joints)
    return replace(asset, bodies=bodies, joints=joints)


# ---------------------------------------------------------------------------
# MJCF import


class _Defaults:
    """Resolved MJCF default classes: per-class, per-tag attribute dicts."""

    def __init__(self) -> None:
        self.classes: dict[str, dict[str, dict[str, str]]] = {"main": {}}
        self.parent: dict[str, str | None] = {"main": None}

    def collect(self, el: ET.Element, cls: str = "main", parent: str | None = None) -> None:
        if cls not in self.classes:
            self.classes[cls] = {}
            self.parent[cls] = parent
        for child in el:
            if child.tag == "default":
                sub = child.get("class")
                if sub is None:
                    continue
                self.collect(child, sub, cls)
            else:
                self.classes[cls].setdefault(child.tag, {}).update(child.attrib)

    def resolve(self, tag: str, cls: str | None) -> dict[str, str]:
        chain: list[str] = []
        cur = cls if cls in self.classes else "main"
        while cur is not None:
            chain.append(cur)
            cur = self.parent.get(cur)
        merged: dict[str, str] = {}
        for c in reversed(chain):
            merged.update(self.classes[c].get(tag, {}))
        return merged


_MJCF_JOINT_KINDS = {"hinge": REVOLUTE, "slide": PRISMATIC, "free": FREE}


class _MjcfCtx:
    def __init__(self, path: str, angle_deg: bool, eulerseq: str, defaults: _Defaults, meshes: dict[str, str]):
        self.path = path
        self.angle_deg = angle_deg
        self.eulerseq = eulerseq
        self.defaults = defaults
        self.meshes = meshes
        self.warnings: list[str] = []
        self.bodies: list[Body] = []
        self.joints: list[Joint] = []
        self.counter = 0

    def to_rad(self, v: float) -> float:
        return math.radians(v) if self.angle_deg else v

    def orient(self, attrs: dict[str, str], what: str) -> Quat:
        if "quat" in attrs:
            return quat_normalize(tuple(_floats(attrs["quat"], self.path, what)))
        if "euler" in attrs:
            ang = [self.to_rad(a) for a in _floats(attrs["euler"], self.path, what)]
            return quat_from_euler(self.eulerseq, tuple(ang))
        if "axisangle" in attrs:
            self.warnings.append(f"{self.path}: axisangle orientation on {what} not supported, using identity")
        return IDENTITY_QUAT


def _mjcf_attrs(ctx: _MjcfCtx, el: ET.Element, cls_hint: str | None) -> dict[str, str]:
    merged = ctx.defaults.resolve(el.tag, el.get("class", cls_hint))
    merged.update(el.attrib)
    return merged


def _parse_mjcf_geom(ctx: _MjcfCtx, el: ET.Element, cls_hint: str | None, shift: Vec3) -> Geom | None:
    a = _mjcf_attrs(ctx, el, cls_hint)
    gtype = a.get("type", "sphere")
    size = _floats(a.get("size", "0"), ctx.path, "geom size") if "size" in a or gtype != "mesh" else []
    pos = tuple(_floats(a.get("pos", "0 0 0"), ctx.path, "geom pos"))
    pose = Pose(pos=vec_sub(pos, shift), quat=ctx.orient(a, f"geom {a.get('name', '?')}"))
    rgba = None
    if "rgba" in a:
        vals = _floats(a["rgba"], ctx.path, "geom rgba")
        rgba = tuple((vals + [1.0])[:4])
    if gtype == "sphere":
        return Geom(shape="sphere", pose=pose, dims=(size[0],), rgba=rgba)
    if gtype == "box":
        if len(size) < 3:
            raise MalformedAsset(f"{ctx.path}: box geom needs 3 size values")
        return Geom(shape="box", pose=pose, dims=(2 * size[0], 2 * size[1], 2 * size[2]), rgba=rgba)
    if gtype == "plane":
        sx = 2 * size[0] if len(size) > 0 and size[0] > 0 else 20.0
        sy = 2 * size[1] if len(size) > 1 and size[1] > 0 else 20.0
        return Geom(shape="plane", pose=pose, dims=(sx, sy), rgba=rgba)
    if gtype == "mesh":
        ref = a.get("mesh", "")
        mesh_file = ctx.meshes.get(ref)
        if mesh_file is None:
            raise MalformedAsset(f"{ctx.path}: geom references unknown mesh {ref!r}")
        return Geom(shape="mesh", pose=pose, mesh_path=mesh_file, rgba=rgba)
    ctx.warnings.append(f"{ctx.path}: unsupported geom type {gtype!r} skipped")
    return None


def _parse_mjcf_inertial(ctx: _MjcfCtx, el: ET.Element, shift: Vec3) -> Inertial:
    a = el.attrib
    mass = float(a.get("mass", "0"))
    com = tuple(_floats(a.get("pos", "0 0 0"), ctx.path, "inertial pos"))
    com = vec_sub(com, shift)
    rot = ctx.orient(a, "inertial")
    if "diaginertia" in a:
        d = _floats(a["diaginertia"], ctx.path, "diaginertia")
        return Inertial(mass=mass, com=com, rot=rot, diag=(d[0], d[1], d[2]))
    if "fullinertia" in a:
        f = _floats(a["fullinertia"], ctx.path, "fullinertia")
        full = np.array(
            [
                [f[0], f[3], f[4]],
                [f[3], f[1], f[5]],
                [f[4], f[5], f[2]],
            ]
        )
        extra, diag = _diagonalize(full)
        if extra != IDENTITY_QUAT:
            rot = quat_mul(rot, extra)
        return Inertial(mass=mass, com=com, rot=rot, diag=diag)
    return Inertial(mass=mass, com=com, rot=rot)


def _parse_mjcf_body(ctx: _MjcfCtx, el: ET.Element, parent: str | None, cls_hint: str | None) -> None:
    name = el.get("name")
    if name is None:
        ctx.counter += 1
        name = f"body{ctx.counter}"
    cls_hint = el.get("childclass", cls_hint)

    pos = tuple(_floats(el.get("pos", "0 0 0"), ctx.path, "body pos"))
    quat = ctx.orient(el.attrib, f"body {name}")

    joint_els = el.findall("joint") + el.findall("freejoint")
    if len(joint_els) > 1:
        raise MalformedAsset(
            f"{ctx.path}: body {name!r} has {len(joint_els)} joints; at most one is supported"
        )

    shift: Vec3 = (0.0, 0.0, 0.0)
    joint: Joint | None = None
    if joint_els:
        jel = joint_els[0]
        if jel.tag == "freejoint":
            ja = dict(jel.attrib)
            ja["type"] = "free"
        else:
            ja = _mjcf_attrs(ctx, jel, cls_hint)
        jtype = ja.get("type", "hinge")
        if jtype not in _MJCF_JOINT_KINDS:
            raise UnsupportedJointKind(
                f"{ctx.path}: joint type {jtype!r} on body {name!r} is not supported"
            )
        kind = _MJCF_JOINT_KINDS[jtype]
        jname = ja.get("name") or f"{name}_joint"
        axis = NO_AXIS
        limits = None
        if kind in (REVOLUTE, PRISMATIC):
            axis = vec_normalize(tuple(_floats(ja.get("axis", "0 0 1"), ctx.path, "joint axis")))
            # The joint anchor becomes the child frame origin.
            shift = tuple(_floats(ja.get("pos", "0 0 0"), ctx.path, "joint pos"))
            if "range" in ja and ja.get("limited", "true" if "range" in ja else "false") != "false":
                lo, hi = _floats(ja["range"], ctx.path, "joint range")
                if kind == REVOLUTE:
                    lo, hi = ctx.to_rad(lo), ctx.to_rad(hi)
                limits = (lo, hi)
        elif kind == FREE and parent is not None:
            # Allowed in canonical form; URDF export will reject it.
            pass
        origin = Pose(pos=vec_add(pos, quat_rotate(quat, shift)), quat=quat)
        joint = Joint(name=jname, kind=kind, parent=parent, child=name, origin=origin, axis=axis, limits=limits)
    else:
        origin = Pose(pos=pos, quat=quat)
        if parent is not None:
            joint = Joint(name=f"{name}_fixed", kind=FIXED, parent=parent, child=name, origin=origin)
        elif origin != Pose():
            # A jointless root at an offset still needs its placement to
            # survive export, so mount it to the world with a fixed joint.
            joint = Joint(name=f"{name}_mount", kind=FIXED, parent=None, child=name, origin=origin)

    geoms: list[Geom] = []
    inertial = Inertial()
    for child in el:
        if child.tag == "geom":
            g = _parse_mjcf_geom(ctx, child, cls_hint, shift)
            if g is not None:
                geoms.append(g)
        elif child.tag == "inertial":
            inertial = _parse_mjcf_inertial(ctx, child, shift)
        elif child.tag in ("joint", "freejoint", "body"):
            pass
        elif child.tag in ("site", "camera", "light"):
            ctx.warnings.append(f"{ctx.path}: <{child.tag}> on body {name!r} ignored")
        else:
            ctx.warnings.append(f"{ctx.path}: unsupported element <{child.tag}> on body {name!r} ignored")

    body_origin = joint.origin if joint is not None else origin
    ctx.bodies.append(
        Body(name=name, parent=parent, pose_in_parent=body_origin, inertial=inertial, geoms=tuple(geoms))
    )
    if joint is not None:
        ctx.joints.append(joint)

    for child in el.findall("body"):
        sub_pos = tuple(_floats(child.get("pos", "0 0 0"), ctx.path, "body pos"))
        if shift != (0.0, 0.0, 0.0):
            child.set("pos", _fmt_vec(vec_sub(sub_pos, shift)))
        _parse_mjcf_body(ctx, child, name, cls_hint)


def parse_mjcf(path: str) -> CanonicalAsset:
    """Parse an MJCF model into canonical form.

    Honors compiler angle/eulerseq and default-class inheritance.  Hinge maps
    to revolute, slide to prismatic, free stays free; ball joints raise
    UnsupportedJointKind.  Joints anchored off the body origin shift the child
    frame onto the anchor so the canonical origin*motion(q) rule holds.
    """
    try:
        tree = ET.parse(path)
    except ET.ParseError as e:
        raise MalformedAsset(f"{path}: XML parse error: {e}") from None
    except OSError as e:
        raise MalformedAsset(f"{path}: {e}") from None
    root = tree.getroot()
    if root.tag != "mujoco":
        raise MalformedAsset(f"{path}: root element is <{root.tag}>, expected <mujoco>")
    name = root.get("model", os.path.splitext(os.path.basename(path))[0])

    compiler = root.find("compiler")
    angle_deg = True
    eulerseq = "xyz"
    if compiler is not None:
        angle_deg = compiler.get("angle", "degree") != "radian"
        eulerseq = compiler.get("eulerseq", "xyz")
        if not all(c in "xyz" for c in eulerseq) or len(eulerseq) != 3:
            raise MalformedAsset(f"{path}: unsupported eulerseq {eulerseq!r}")

    defaults = _Defaults()
    for del_ in root.findall("default"):
        defaults.collect(del_)

    meshes: dict[str, str] = {}
    for asset_el in root.findall("asset"):
        for m in asset_el.findall("mesh"):
            file = m.get("file", "")
            mname = m.get("name") or os.path.splitext(os.path.basename(file))[0]
            meshes[mname] = file

    ctx = _MjcfCtx(path, angle_deg, eulerseq, defaults, meshes)
    for tag in ("tendon", "actuator", "equality", "sensor", "contact"):
        if root.find(tag) is not None:
            ctx.warnings.append(f"{path}: <{tag}> section ignored")

    worldbodies = root.findall("worldbody")
    if len(worldbodies) != 1:
        raise MalformedAsset(f"{path}: expected exactly one <worldbody>, found {len(worldbodies)}")
    world = worldbodies[0]

    world_geoms = world.findall("geom")
    world_bodies = world.findall("body")
    for child in world:
        if child.tag in ("light", "camera", "site"):
            ctx.warnings.append(f"{path}: worldbody <{child.tag}> ignored")

    if len(world_bodies) == 1 and not world_geoms:
        _parse_mjcf_body(ctx, world_bodies[0], None, None)
    else:
        # Keep worldbody content: synthesize a fixed root holding its geoms.
        geoms = []
        for gel in world_geoms:
            g = _parse_mjcf_geom(ctx, gel, None, (0.0, 0.0, 0.0))
            if g is not None:
                geoms.append(g)
        ctx.bodies.append(Body(name="world", parent=None, geoms=tuple(geoms)))
        for bel in world_bodies:
            _parse_mjcf_body(ctx, bel, "world", None)
        if not ctx.bodies[0].geoms and not world_bodies:
            raise MalformedAsset(f"{path}: empty worldbody")

    return _finish(name, ctx.bodies, ctx.joints, ctx.warnings, path)


# ---------------------------------------------------------------------------
# URDF export


def _origin_xml(pose: Pose, indent: str) -> str:
    rpy = quat_to_rpy(pose.quat)
    return f'{indent}<origin xyz="{_fmt_vec(pose.pos)}" rpy="{_fmt_vec(rpy)}"/>\n'


def _geometry_xml(g: Geom, indent: str) -> str:
    if g.shape == "box":
        inner = f'<box size="{_fmt_vec(g.dims)}"/>'
    elif g.shape == "sphere":
        inner = f'<sphere radius="{_fmt(g.dims[0])}"/>'
    elif g.shape == "plane":
        # URDF has no plane primitive; emit a thin box of the same footprint.
        inner = f'<box size="{_fmt(g.dims[0])} {_fmt(g.dims[1])} 0.001"/>'
    elif g.shape == "mesh":
        inner = f'<mesh filename="{g.mesh_path or ""}"/>'
    else:
        raise AssetError(f"cannot export geom shape {g.shape!r}")
    return f"{indent}<geometry>{inner}</geometry>\n"


def export_urdf(asset: CanonicalAsset, path: str) -> None:
    """Write the asset as URDF.

    A root free joint is emitted through the usual `world` link + floating
    joint convention, which parse_urdf folds back.  A free joint anywhere else
    has no URDF representation and raises AssetError.
    """
    for j in asset.joints:
        if j.kind == FREE and j.parent is not None:
            raise AssetError(
                f"asset {asset.name!r}: free joint {j.name!r} with non-root child "
                f"{j.child!r} cannot be represented in URDF"
            )

    out: list[str] = [f'<robot name="{asset.name}">\n']

    root_mount = next((j for j in asset.joints if j.parent is None), None)
    if root_mount is not None:
        out.append('  <link name="world"/>\n')

    for b in asset.bodies:
        out.append(f'  <link name="{b.name}">\n')
        ine = b.inertial
        if ine.mass != 0.0 or ine.diag != (0.0, 0.0, 0.0):
            out.append("    <inertial>\n")
            out.append(_origin_xml(Pose(pos=ine.com, quat=ine.rot), "      "))
            out.append(f'      <mass value="{_fmt(ine.mass)}"/>\n')
            d = ine.diag
            out.append(
                f'      <inertia ixx="{_fmt(d[0])}" ixy="0.0" ixz="0.0" '
                f'iyy="{_fmt(d[1])}" iyz="0.0" izz="{_fmt(d[2])}"/>\n'
            )
            out.append("    </inertial>\n")
        for g in b.geoms:
            roles = ("visual", "collision") if g.role == "both" else (g.role,)
            for role in roles:
                out.append(f"    <{role}>\n")
                out.append(_origin_xml(g.pose, "      "))
                out.append(_geometry_xml(g, "      "))
                if role == "visual" and g.rgba is not None:
                    out.append(
                        f'      <material name="{b.name}_mat"><color rgba="{_fmt_vec(g.rgba)}"/></material>\n'
                    )
                out.append(f"    </{role}>\n")
        out.append("  </link>\n")

    kind_to_urdf = {REVOLUTE: "revolute", PRISMATIC: "prismatic", FIXED: "fixed", FREE: "floating"}
    for j in asset.joints:
        jtype = kind_to_urdf[j.kind]
        if j.kind == REVOLUTE and j.limits is None:
            jtype = "continuous"
        out.append(f'  <joint name="{j.name}" type="{jtype}">\n')
        out.append(_origin_xml(j.origin, "    "))
        out.append(f'    <parent link="{j.parent if j.parent is not None else "world"}"/>\n')
        out.append(f'    <child link="{j.child}"/>\n')
        if j.kind in (REVOLUTE, PRISMATIC):
            out.append(f'    <axis xyz="{_fmt_vec(j.axis)}"/>\n')
            if j.limits is not None:
                out.append(
                    f'    <limit lower="{_fmt(j.limits[0])}" upper="{_fmt(j.limits[1])}" '
                    f'effort="100.0" velocity="10.0"/>\n'
                )
        out.append("  </joint>\n")
    out.append("</robot>\n")

    with open(path, "w", encoding="utf-8") as f:
        f.write("".join(out))


# ---------------------------------------------------------------------------
# Mesh reference resolution


def resolve_mesh_refs(asset: CanonicalAsset, base_dir: str) -> CanonicalAsset:
    """Resolve mesh file references against base_dir.

    Order: the reference as given; a same-stem `.obj` next to it; a literal
    `textured.obj` in the referenced directory.  Unresolved references are
    kept verbatim with a warning.
    """
    warnings = list(asset.warnings)

    def resolve_one(ref: str) -> str:
        cand = ref if os.path.isabs(ref) else os.path.join(base_dir, ref)
        if os.path.isfile(cand):
            return ref
        stem_obj = os.path.splitext(cand)[0] + ".obj"
        if os.path.isfile(stem_obj):
            return os.path.relpath(stem_obj, base_dir) if not os.path.isabs(ref) else stem_obj
        textured = os.path.join(os.path.dirname(cand), "textured.obj")
        if os.path.isfile(textured):
            return os.path.relpath(textured, base_dir) if not os.path.isabs(ref) else textured
        warnings.append(f"mesh reference {ref!r} not found under {base_dir!r}; kept as-is")
        return ref

    new_bodies = []
    for b in asset.bodies:
        new_geoms = tuple(
            replace(g, mesh_path=resolve_one(g.mesh_path)) if g.shape == "mesh" and g.mesh_path else g
            for g in b.geoms
        )
        new_bodies.append(replace(b, geoms=new_geoms))
    return replace(asset, bodies=tuple(new_bodies), warnings=tuple(warnings))


def convert_mjcf_to_urdf(src: str, dst: str, mesh_dir: str | None = None) -> tuple[str, ...]:
    """MJCF to URDF conversion pipeline; returns the warning list."""
    asset = parse_mjcf(src)
    asset = resolve_mesh_refs(asset, mesh_dir if mesh_dir is not None else os.path.dirname(src) or ".")
    export_urdf(asset, dst)
    return asset.warnings


def load_asset(path: str) -> CanonicalAsset:
    """Dispatch on extension: .urdf -> URDF, .xml/.mjcf -> MJCF."""
    ext = os.path.splitext(path)[1].lower()
    if ext == ".urdf":
        return parse_urdf(path)
    if ext in (".xml", ".mjcf"):
        return parse_mjcf(path)
    raise AssetError(f"{path}: unknown asset extension {ext!r}")
