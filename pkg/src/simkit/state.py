"""Scene state containers and the RVT1 trajectory file format.

A SceneState holds one entity-name -> EntityState map per parallel
environment.  EntityState fields are None when absent, so partial states
express both set_states updates and filtered get_states results.  Tuples of
floats keep states hashable and comparisons bit-exact.

RVT1 is a little-endian binary container: magic "RVT1", u16 major/minor
version, length-prefixed sections (header, init state, actions, optional
per-step states), then a CRC32 of everything before it.  Unknown trailing
sections are skipped so minor versions can extend the format; an unknown
major version is rejected.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field, replace

from .transforms import Quat, Vec3, quat_angle_between, vec_norm, vec_sub

FORMAT_MAGIC = b"RVT1"
FORMAT_MAJOR = 1
FORMAT_MINOR = 0

STATE_FIELDS = ("pos", "rot", "lin_vel", "ang_vel", "dof_pos", "dof_vel", "dof_target")


class TrajectoryFormatError(Exception):
    pass


@dataclass(frozen=True)
class EntityState:
    pos: Vec3 | None = None
    rot: Quat | None = None
    lin_vel: Vec3 | None = None
    ang_vel: Vec3 | None = None
    dof_pos: tuple[float, ...] | None = None
    dof_vel: tuple[float, ...] | None = None
    dof_target: tuple[float, ...] | None = None


@dataclass(frozen=True)
class SceneState:
    envs: tuple[dict[str, EntityState], ...]

    @property
    def num_envs(self) -> int:
        return len(self.envs)

    def entities(self, env: int = 0) -> dict[str, EntityState]:
        return self.envs[env]

    def get(self, name: str, env: int = 0) -> EntityState:
        try:
            return self.envs[env][name]
        except KeyError:
            raise KeyError(f"no entity {name!r} in state") from None


def single_env_state(entities: dict[str, EntityState]) -> SceneState:
    return SceneState(envs=(entities,))


@dataclass(frozen=True)
class StateQuery:
    """Restricts get_states: None means everything."""

    entities: tuple[str, ...] | None = None
    fields: tuple[str, ...] | None = None


# Action: per-robot dof_target vectors for one control step.
Action = dict[str, tuple[float, ...]]


@dataclass
class Trajectory:
    scenario_name: str
    init_state: SceneState
    actions: list[Action] = field(default_factory=list)
    states: list[SceneState] | None = None
    success: bool = False
    extras: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class EntityDiff:
    pos_err: float = 0.0
    rot_err: float = 0.0
    dof_err: float = 0.0


@dataclass(frozen=True)
class DiffReport:
    entities: dict[str, EntityDiff]

    @property
    def max_pos_err(self) -> float:
        return max((d.pos_err for d in self.entities.values()), default=0.0)

    @property
    def max_rot_err(self) -> float:
        return max((d.rot_err for d in self.entities.values()), default=0.0)

    @property
    def max_dof_err(self) -> float:
        return max((d.dof_err for d in self.entities.values()), default=0.0)

    @property
    def max_err(self) -> float:
        return max(self.max_pos_err, self.max_rot_err, self.max_dof_err)


def apply_query(state: SceneState, query: StateQuery | None) -> SceneState:
    if query is None or (query.entities is None and query.fields is None):
        return state
    envs = []
    for env in state.envs:
        out: dict[str, EntityState] = {}
        for name, es in env.items():
            if query.entities is not None and name not in query.entities:
                continue
            if query.fields is None:
                out[name] = es
            else:
                kept = {f: getattr(es, f) for f in query.fields}
                out[name] = EntityState(**kept)
        envs.append(out)
    return SceneState(envs=tuple(envs))


def merge_states(base: SceneState, overlay: SceneState) -> SceneState:
    """Overlay fields overwrite base fields; missing overlay fields fall back to base.

    Neither input is mutated.  Entities only present in the overlay are added.
    """
    if base.num_envs != overlay.num_envs:
        raise ValueError(
            f"cannot merge states with {base.num_envs} and {overlay.num_envs} envs"
        )
    envs = []
    for benv, oenv in zip(base.envs, overlay.envs):
        merged = dict(benv)
        for name, oes in oenv.items():
            bes = merged.get(name)
            if bes is None:
                merged[name] = oes
            else:
                updates = {
                    f: getattr(oes, f) for f in STATE_FIELDS if getattr(oes, f) is not None
                }
                merged[name] = replace(bes, **updates)
        envs.append(merged)
    return SceneState(envs=tuple(envs))


def _tuple_diff(a: tuple | None, b: tuple | None) -> float:
    if a is None or b is None:
        return 0.0
    if len(a) != len(b):
        raise ValueError("dof vectors differ in length")
    return max((abs(x - y) for x, y in zip(a, b)), default=0.0)


def diff_states(a: SceneState, b: SceneState) -> DiffReport:
    """Per-entity worst-case pose and dof discrepancies; symmetric."""
    if a.num_envs != b.num_envs:
        raise ValueError("states have different env counts")
    acc: dict[str, EntityDiff] = {}
    for aenv, benv in zip(a.envs, b.envs):
        if set(aenv) != set(benv):
            only_a = sorted(set(aenv) - set(benv))
            only_b = sorted(set(benv) - set(aenv))
            raise ValueError(f"entity sets differ: only in a={only_a}, only in b={only_b}")
        for name, ae in aenv.items():
            be = benv[name]
            pos_err = vec_norm(vec_sub(ae.pos, be.pos)) if ae.pos is not None and be.pos is not None else 0.0
            rot_err = quat_angle_between(ae.rot, be.rot) if ae.rot is not None and be.rot is not None else 0.0
            dof_err = _tuple_diff(ae.dof_pos, be.dof_pos)
            prev = acc.get(name, EntityDiff())
            acc[name] = EntityDiff(
                pos_err=max(prev.pos_err, pos_err),
                rot_err=max(prev.rot_err, rot_err),
                dof_err=max(prev.dof_err, dof_err),
            )
    return DiffReport(entities=acc)


# ---------------------------------------------------------------------------
# RVT1 binary encoding


class _Writer:
    def __init__(self) -> None:
        self.parts: list[bytes] = []

    def raw(self, b: bytes) -> None:
        self.parts.append(b)

    def u8(self, v: int) -> None:
        self.parts.append(struct.pack("<B", v))

    def u16(self, v: int) -> None:
        self.parts.append(struct.pack("<H", v))

    def u32(self, v: int) -> None:
        self.parts.append(struct.pack("<I", v))

    def f64s(self, vals) -> None:
        self.parts.append(struct.pack(f"<{len(vals)}d", *vals))

    def string(self, s: str) -> None:
        b = s.encode("utf-8")
        self.u16(len(b))
        self.raw(b)

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.off = 0

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise TrajectoryFormatError("truncated trajectory data")
        out = self.data[self.off : self.off + n]
        self.off += n
        return out

    def u8(self) -> int:
        return struct.unpack("<B", self.take(1))[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f64s(self, n: int) -> tuple[float, ...]:
        return struct.unpack(f"<{n}d", self.take(8 * n))

    def string(self) -> str:
        n = self.u16()
        return self.take(n).decode("utf-8")

    @property
    def remaining(self) -> int:
        return len(self.data) - self.off


def _write_entity_state(w: _Writer, es: EntityState) -> None:
    mask = 0
    for i, f in enumerate(STATE_FIELDS):
        if getattr(es, f) is not None:
            mask |= 1 << i
    w.u8(mask)
    for f, arity in (("pos", 3), ("rot", 4), ("lin_vel", 3), ("ang_vel", 3)):
        v = getattr(es, f)
        if v is not None:
            w.f64s(v)
    for f in ("dof_pos", "dof_vel", "dof_target"):
        v = getattr(es, f)
        if v is not None:
            w.u16(len(v))
            w.f64s(v)


def _read_entity_state(r: _Reader) -> EntityState:
    mask = r.u8()
    vals: dict[str, tuple] = {}
    for i, (f, arity) in enumerate((("pos", 3), ("rot", 4), ("lin_vel", 3), ("ang_vel", 3))):
        if mask & (1 << i):
            vals[f] = r.f64s(arity)
    for i, f in enumerate(("dof_pos", "dof_vel", "dof_target"), start=4):
        if mask & (1 << i):
            n = r.u16()
            vals[f] = r.f64s(n)
    return EntityState(**vals)


def _write_scene_state(w: _Writer, state: SceneState) -> None:
    w.u32(state.num_envs)
    for env in state.envs:
        w.u16(len(env))
        for name, es in env.items():
            w.string(name)
            _write_entity_state(w, es)


def _read_scene_state(r: _Reader) -> SceneState:
    n_envs = r.u32()
    envs = []
    for _ in range(n_envs):
        n_ent = r.u16()
        env: dict[str, EntityState] = {}
        for _ in range(n_ent):
            name = r.string()
            env[name] = _read_entity_state(r)
        envs.append(env)
    return SceneState(envs=tuple(envs))


def _section(payload: bytes) -> bytes:
    return struct.pack("<I", len(payload)) + payload


def serialize_trajectory(traj: Trajectory) -> bytes:
    w = _Writer()
    w.raw(FORMAT_MAGIC)
    w.u16(FORMAT_MAJOR)
    w.u16(FORMAT_MINOR)

    head = _Writer()
    head.string(traj.scenario_name)
    head.u8(1 if traj.success else 0)
    head.u16(len(traj.extras))
    for k, v in traj.extras.items():
        head.string(k)
        head.string(v)
    w.raw(_section(head.getvalue()))

    init = _Writer()
    _write_scene_state(init, traj.init_state)
    w.raw(_section(init.getvalue()))

    acts = _Writer()
    acts.u32(len(traj.actions))
    for action in traj.actions:
        acts.u8(len(action))
        for robot, dof in action.items():
            acts.string(robot)
            acts.u16(len(dof))
            acts.f64s(dof)
    w.raw(_section(acts.getvalue()))

    if traj.states is None:
        w.raw(_section(b""))
    else:
        st = _Writer()
        st.u32(len(traj.states))
        for s in traj.states:
            _write_scene_state(st, s)
        w.raw(_section(st.getvalue()))

    body = w.getvalue()
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def deserialize_trajectory(data: bytes) -> Trajectory:
    if len(data) < 12:
        raise TrajectoryFormatError("data too short for an RVT1 trajectory")
    if data[:4] != FORMAT_MAGIC:
        raise TrajectoryFormatError(f"bad magic {data[:4]!r}, expected {FORMAT_MAGIC!r}")
    stored_crc = struct.unpack("<I", data[-4:])[0]
    actual_crc = zlib.crc32(data[:-4]) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise TrajectoryFormatError(
            f"CRC mismatch: stored {stored_crc:#010x}, computed {actual_crc:#010x}"
        )
    r = _Reader(data[:-4])
    r.take(4)  # magic
    major = r.u16()
    minor = r.u16()
    if major != FORMAT_MAJOR:
        raise TrajectoryFormatError(f"unsupported major version {major}")

    head = _Reader(r.take(r.u32()))
    scenario_name = head.string()
    success = head.u8() != 0
    extras: dict[str, str] = {}
    for _ in range(head.u16()):
        k = head.string()
        extras[k] = head.string()

    init = _Reader(r.take(r.u32()))
    init_state = _read_scene_state(init)

    acts = _Reader(r.take(r.u32()))
    actions: list[Action] = []
    for _ in range(acts.u32()):
        action: Action = {}
        for _ in range(acts.u8()):
            robot = acts.string()
            n = acts.u16()
            action[robot] = acts.f64s(n)
        actions.append(action)

    states_payload = r.take(r.u32())
    states: list[SceneState] | None = None
    if states_payload:
        sr = _Reader(states_payload)
        states = [_read_scene_state(sr) for _ in range(sr.u32())]

    # Skip sections a newer minor version may have appended.
    while r.remaining > 0:
        r.take(r.u32())

    return Trajectory(
        scenario_name=scenario_name,
        init_state=init_state,
        actions=actions,
        states=states,
        success=success,
        extras=extras,
    )


def save_trajectory(traj: Trajectory, path: str) -> None:
    with open(path, "wb") as f:
        f.write(serialize_trajectory(traj))


def load_trajectory(path: str) -> Trajectory:
    with open(path, "rb") as f:
        return deserialize_trajectory(f.read())
