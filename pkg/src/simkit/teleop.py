"""Teleoperation: wire codec, session state machine, WebSocket server.

The wire format is plain text so every client — browser, script, netcat —
speaks it the same way.  One message per line:

    client -> server
        HELLO [token]
        CMD <seq> <t_ms> <tx> <ty> <tz> <oriflag> <qw> <qx> <qy> <qz> <grip>
        BYE

    server -> client
        WELCOME <token> <last_seq>
        STATE <seq> <t_ms>            (first line; then per entity)
        E <name> <px> <py> <pz> <qw> <qx> <qy> <qz>
        D <name> <q0> <q1> ...
        OK <seq>                      (frame coalesced, no step taken)
        ERR <code> <detail>

`seq` must increase strictly; an old or repeated value is rejected so a
reconnecting client can't double-apply buffered frames.  Frames arriving
faster than MIN_INTERVAL_MS of logical time don't step the simulation:
their orientation and grip toggles are folded into the next applied frame,
while their translation is dropped — held buttons move the arm at the same
rate no matter how fast the client spams.

Translation units are button-ticks: each applied frame moves the target
by translate * speed / rate meters.  `grip` is an edge, not a level — a 1
toggles the gripper between open and closed.  The session tracks a target
end-effector pose, solves it to joint space, steps the handler, and records
every applied action so a teleop run can be saved as a demo.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass, field

import numpy as np

from .backends import Handler, launch
from .checkers import check_success
from .config import RobotConfig, ScenarioConfig, resolve_asset
from .kinematics import forward_kinematics, gripper_dof_from_fraction
from .retarget import DEFAULT_MAX_ITERS, NoConvergence, ik_solve
from .state import EntityState, SceneState, Trajectory
from .transforms import Pose, Quat, Vec3, quat_from_axis_angle, quat_mul, quat_normalize

DEFAULT_PORT = 8571
WS_PATH = "/teleop"
MIN_INTERVAL_MS = 20  # logical ms between applied frames (50 Hz)
DEFAULT_SPEED = 0.25  # m/s of ee translation while a button is held
ROT_STEP = 0.1  # rad per orientation key press

KEYMAP: dict[str, Vec3] = {
    "up": (1.0, 0.0, 0.0),
    "down": (-1.0, 0.0, 0.0),
    "left": (0.0, 1.0, 0.0),
    "right": (0.0, -1.0, 0.0),
    "e": (0.0, 0.0, 1.0),
    "d": (0.0, 0.0, -1.0),
}
ROTKEYS: dict[str, tuple[Vec3, float]] = {
    "q": ((1.0, 0.0, 0.0), ROT_STEP),
    "w": ((1.0, 0.0, 0.0), -ROT_STEP),
    "a": ((0.0, 1.0, 0.0), ROT_STEP),
    "s": ((0.0, 1.0, 0.0), -ROT_STEP),
    "z": ((0.0, 0.0, 1.0), ROT_STEP),
    "x": ((0.0, 0.0, 1.0), -ROT_STEP),
}
GRIP_KEY = "space"


class ProtocolError(Exception):
    pass


class DuplicateOrStale(Exception):
    def __init__(self, seq: int, last: int):
        self.seq = seq
        self.last = last
        super().__init__(f"seq {seq} is not after {last}")


@dataclass(frozen=True)
class Command:
    seq: int
    t_ms: int
    translate: Vec3 = (0.0, 0.0, 0.0)
    ori: Quat | None = None
    grip_toggle: bool = False


def _num(token: str, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ProtocolError(f"bad {what}: {token!r}") from None


def _int(token: str, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ProtocolError(f"bad {what}: {token!r}") from None


def decode_command(line: str) -> Command:
    parts = line.split()
    if not parts or parts[0] != "CMD":
        raise ProtocolError(f"expected CMD, got {line.split(maxsplit=1)[0] if line.split() else ''!r}")
    if len(parts) != 12:
        raise ProtocolError(f"CMD needs 11 fields, got {len(parts) - 1}")
    seq = _int(parts[1], "seq")
    t_ms = _int(parts[2], "t_ms")
    if seq < 0 or t_ms < 0:
        raise ProtocolError("seq and t_ms must be non-negative")
    translate = tuple(_num(p, "translate") for p in parts[3:6])
    oriflag = parts[6]
    if oriflag not in ("0", "1"):
        raise ProtocolError(f"bad oriflag: {oriflag!r}")
    ori = None
    if oriflag == "1":
        q = tuple(_num(p, "quat") for p in parts[7:11])
        n = sum(c * c for c in q) ** 0.5
        if abs(n - 1.0) > 1e-3:
            raise ProtocolError(f"quat norm {n:.4f} is not 1")
        ori = quat_normalize(q)
    grip = parts[11]
    if grip not in ("0", "1"):
        raise ProtocolError(f"bad grip: {grip!r}")
    return Command(seq=seq, t_ms=t_ms, translate=translate, ori=ori, grip_toggle=grip == "1")


def encode_command(cmd: Command) -> str:
    q = cmd.ori if cmd.ori is not None else (1.0, 0.0, 0.0, 0.0)
    fields = [
        "CMD",
        str(cmd.seq),
        str(cmd.t_ms),
        *(repr(float(v)) for v in cmd.translate),
        "1" if cmd.ori is not None else "0",
        *(repr(float(v)) for v in q),
        "1" if cmd.grip_toggle else "0",
    ]
    return " ".join(fields)


def encode_state(seq: int, t_ms: int, state: SceneState, env: int = 0) -> str:
    lines = [f"STATE {seq} {t_ms}"]
    for name, es in state.entities(env).items():
        if es.pos is not None and es.rot is not None:
            nums = " ".join(repr(float(v)) for v in (*es.pos, *es.rot))
            lines.append(f"E {name} {nums}")
    for name, es in state.entities(env).items():
        if es.dof_pos:  # a dof-less body has nothing to say on a D line
            nums = " ".join(repr(float(v)) for v in es.dof_pos)
            lines.append(f"D {name} {nums}")
    return "\n".join(lines)


def decode_state(text: str) -> tuple[int, int, dict[str, EntityState]]:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines or not lines[0].startswith("STATE "):
        raise ProtocolError("expected STATE header")
    head = lines[0].split()
    if len(head) != 3:
        raise ProtocolError("STATE needs seq and t_ms")
    seq, t_ms = _int(head[1], "seq"), _int(head[2], "t_ms")
    entities: dict[str, EntityState] = {}
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "E":
            if len(parts) != 9:
                raise ProtocolError(f"E line needs 8 fields: {ln!r}")
            nums = [_num(p, "pose") for p in parts[2:]]
            prev = entities.get(parts[1], EntityState())
            entities[parts[1]] = EntityState(
                pos=tuple(nums[:3]),
                rot=tuple(nums[3:]),
                dof_pos=prev.dof_pos,
            )
        elif parts[0] == "D":
            if len(parts) < 3:
                raise ProtocolError(f"D line needs dofs: {ln!r}")
            prev = entities.get(parts[1], EntityState())
            entities[parts[1]] = EntityState(
                pos=prev.pos,
                rot=prev.rot,
                dof_pos=tuple(_num(p, "dof") for p in parts[2:]),
            )
        else:
            raise ProtocolError(f"unknown state line: {ln!r}")
    return seq, t_ms, entities


class TeleopSession:
    """Applies one client's command stream to a handler and records it.

    The session owns a target ee pose and a gripper open/closed bit.  Each
    applied command nudges the target, solves IK, writes the dof target,
    and steps; the reply carries the post-step scene so the client renders
    truth rather than its own echo.
    """

    def __init__(
        self,
        config: ScenarioConfig,
        handler: Handler | None = None,
        robot: str | None = None,
        speed: float = DEFAULT_SPEED,
    ):
        self.config = config
        self.own_handler = handler is None
        self.handler = handler if handler is not None else launch(config, backend="kin")
        if self.handler.num_envs != 1:
            raise ValueError("teleop needs a single-env handler")
        self.robot_cfg = self._find_robot(robot)
        if self.robot_cfg.ee_frame is None:
            raise ValueError(f"robot {self.robot_cfg.name!r} has no ee_frame")
        self.asset = resolve_asset(config, self.robot_cfg.asset)
        self.speed = speed
        self.token = secrets.token_hex(4)

        self.last_seq = -1
        self.last_applied_t: int | None = None
        self.pending_ori: Quat | None = None
        self.pending_toggle = False
        self.gripper_closed = False
        self.success = False

        self._gripper_idx = [
            self.asset.actuated_order.index(j) for j in self.robot_cfg.gripper_joints
        ]
        self._dof_names = self.handler.dof_names()
        self.init_state = self.handler.initial_state()
        self.actions: list[dict[str, tuple[float, ...]]] = []

        self.q = np.array(self.robot_cfg.default_dof_pos, dtype=float)
        poses = forward_kinematics(self.asset, self.robot_cfg.base_pose, self.q)
        self.target: Pose = poses[self.robot_cfg.ee_frame]

    def _find_robot(self, robot: str | None) -> RobotConfig:
        if robot is None:
            if not self.config.robots:
                raise ValueError("scenario has no robots")
            return self.config.robots[0]
        for r in self.config.robots:
            if r.name == robot:
                return r
        raise KeyError(f"no robot named {robot!r} in scenario")

    def handle_line(self, line: str) -> str:
        """One request line in, one reply message out.  Never raises for
        wire-level problems; those map to ERR replies."""
        try:
            cmd = decode_command(line)
        except ProtocolError as exc:
            return f"ERR protocol {exc}"
        try:
            return self.apply(cmd)
        except DuplicateOrStale as exc:
            return f"ERR stale {exc.seq}"

    def apply(self, cmd: Command) -> str:
        if cmd.seq <= self.last_seq:
            raise DuplicateOrStale(cmd.seq, self.last_seq)
        self.last_seq = cmd.seq

        over_rate = (
            self.last_applied_t is not None
            and cmd.t_ms - self.last_applied_t < MIN_INTERVAL_MS
        )
        if over_rate:
            if cmd.ori is not None:
                self.pending_ori = cmd.ori
            if cmd.grip_toggle:
                self.pending_toggle = not self.pending_toggle
            return f"OK {cmd.seq}"

        ori = cmd.ori if cmd.ori is not None else self.pending_ori
        toggle = cmd.grip_toggle ^ self.pending_toggle
        self.pending_ori = None
        self.pending_toggle = False
        self.last_applied_t = cmd.t_ms

        rate = 1000.0 / MIN_INTERVAL_MS
        step = self.speed / rate
        pos = tuple(p + t * step for p, t in zip(self.target.pos, cmd.translate))
        quat = ori if ori is not None else self.target.quat
        self.target = Pose(pos=pos, quat=quat)
        if toggle:
            self.gripper_closed = not self.gripper_closed

        try:
            self.q = ik_solve(
                self.asset,
                self.robot_cfg.base_pose,
                self.robot_cfg.ee_frame,
                self.target,
                self.q,
                max_iters=min(DEFAULT_MAX_ITERS, 50),
                restarts=0,
            )
        except NoConvergence:
            pass  # unreachable target: hold the best-known q, keep teleoperating
        gdof = gripper_dof_from_fraction(
            self.asset, self.robot_cfg.gripper_joints, 0.0 if self.gripper_closed else 1.0
        )
        for j, idx in zip(self.robot_cfg.gripper_joints, self._gripper_idx):
            self.q[idx] = gdof[j]

        action = {self.robot_cfg.name: tuple(float(v) for v in self.q)}
        self.handler.set_states(
            SceneState(envs=({self.robot_cfg.name: EntityState(dof_target=action[self.robot_cfg.name])},))
        )
        self.handler.step()
        self.actions.append(action)
        state = self.handler.get_states()
        if self.config.task.checker is not None and not self.success:
            self.success = check_success(
                self.config.task.checker,
                state,
                init_state=self.init_state,
                dof_names=self._dof_names,
            )
        return encode_state(cmd.seq, cmd.t_ms, state)

    def finalize(self) -> Trajectory:
        return Trajectory(
            scenario_name=self.config.name,
            init_state=self.init_state,
            actions=list(self.actions),
            states=None,
            success=self.success,
            extras={"source": "teleop"},
        )

    def close(self) -> None:
        if self.own_handler:
            self.handler.close()


@dataclass
class KeyboardDriver:
    """Turns key presses into protocol commands.

    Arrows move in the table plane, e/d move vertically, q/w a/s z/x tilt
    about the ee's own axes, space toggles the gripper.  The driver keeps
    the composed orientation and only sets the orientation flag on frames
    where a rotation key participated.
    """

    quat: Quat = (1.0, 0.0, 0.0, 0.0)
    seq: int = 0

    def frame(self, keys: list[str], t_ms: int) -> Command:
        tx = ty = tz = 0.0
        rotated = False
        grip = False
        for key in keys:
            k = key.lower()
            if k in KEYMAP:
                dx, dy, dz = KEYMAP[k]
                tx, ty, tz = tx + dx, ty + dy, tz + dz
            elif k in ROTKEYS:
                axis, angle = ROTKEYS[k]
                self.quat = quat_normalize(
                    quat_mul(self.quat, quat_from_axis_angle(axis, angle))
                )
                rotated = True
            elif k == GRIP_KEY:
                grip = True
            else:
                raise KeyError(f"unmapped key: {key!r}")
        self.seq += 1
        return Command(
            seq=self.seq,
            t_ms=t_ms,
            translate=(tx, ty, tz),
            ori=self.quat if rotated else None,
            grip_toggle=grip,
        )

    def press(self, key: str, t_ms: int) -> Command:
        return self.frame([key], t_ms)


class TeleopServer:
    """WebSocket front door: one session per token, resumable across drops."""

    def __init__(
        self,
        config: ScenarioConfig,
        port: int = DEFAULT_PORT,
        robot: str | None = None,
        static_dir: str | None = None,
    ):
        self.config = config
        self.port = port
        self.robot = robot
        self.static_dir = static_dir
        self.sessions: dict[str, TeleopSession] = {}

    def _session_for(self, token: str | None) -> TeleopSession:
        if token is not None and token in self.sessions:
            return self.sessions[token]
        session = TeleopSession(self.config, robot=self.robot)
        self.sessions[session.token] = session
        return session

    def handle_hello(self, line: str) -> tuple[TeleopSession | None, str]:
        parts = line.split()
        if not parts or parts[0] != "HELLO":
            return None, "ERR protocol expected HELLO"
        token = parts[1] if len(parts) > 1 else None
        session = self._session_for(token)
        return session, f"WELCOME {session.token} {session.last_seq}"

    def handle_connection(self, ws) -> None:
        session: TeleopSession | None = None
        for message in ws:
            line = message.strip()
            if session is None:
                session, reply = self.handle_hello(line)
                ws.send(reply)
                if session is None:
                    break
                continue
            if line.startswith("BYE"):
                ws.send("BYE")
                break
            ws.send(session.handle_line(line))

    def _process_request(self, connection, request):
        if request.path.split("?")[0] == WS_PATH:
            return None  # proceed with the websocket handshake
        return self._static_response(connection, request.path)

    def _static_response(self, connection, path: str):
        import mimetypes
        import os

        if self.static_dir is None:
            return connection.respond(404, "no static content\n")
        rel = path.split("?")[0].lstrip("/") or "index.html"
        full = os.path.realpath(os.path.join(self.static_dir, rel))
        root = os.path.realpath(self.static_dir)
        if not full.startswith(root + os.sep) and full != root:
            return connection.respond(404, "not found\n")
        if os.path.isdir(full):
            full = os.path.join(full, "index.html")
        if not os.path.isfile(full):
            return connection.respond(404, "not found\n")
        ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
        with open(full, "rb") as f:
            body = f.read()
        response = connection.respond(200, "")
        # Headers is a multidict and __setitem__ appends, so drop the
        # placeholders respond() wrote for its empty text body first.
        del response.headers["Content-Type"]
        del response.headers["Content-Length"]
        response.headers["Content-Type"] = ctype
        response.headers["Content-Length"] = str(len(body))
        response.body = body
        return response

    def serve_forever(self) -> None:
        from websockets.sync.server import serve

        with serve(
            self.handle_connection,
            host="0.0.0.0",
            port=self.port,
            process_request=self._process_request,
        ) as server:
            server.serve_forever()

    def close(self) -> None:
        for session in self.sessions.values():
            session.close()
        self.sessions.clear()
