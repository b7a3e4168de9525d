/**
 * Wire codec for the teleop WebSocket protocol.
 *
 * Client -> server, one text line per message:
 *   HELLO [token]
 *   CMD <seq> <t_ms> <tx> <ty> <tz> <oriflag 0|1> <qw> <qx> <qy> <qz> <grip 0|1>
 *   BYE
 * Server -> client:
 *   WELCOME <token> <last_seq>
 *   STATE <seq> <t_ms> followed by E (pose) and D (dof) entity lines
 *   OK <seq> | ERR <code> <detail> | BYE
 *
 * Numbers travel as shortest round-trip decimals.  String(n) emits exactly
 * that, and everything it emits parses as a float on the server side.
 */

export const WS_PATH = "/teleop";
export const SEND_INTERVAL_MS = 20; // one CMD per tick -> 50 Hz

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // w, x, y, z

export interface Command {
  seq: number;
  tMs: number;
  translate: Vec3;
  ori: Quat | null;
  gripToggle: boolean;
}

export interface EntityPose {
  pos: Vec3 | null;
  rot: Quat | null;
  dofPos: number[] | null;
}

export interface StateFrame {
  seq: number;
  tMs: number;
  entities: Record<string, EntityPose>;
}

export class ProtocolError extends Error {}

const INT_RE = /^[+-]?\d+$/;
const NUM_RE = /^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$/;

function fields(line: string): string[] {
  return line.split(/\s+/).filter((p) => p.length > 0);
}

function intField(token: string, what: string): number {
  if (!INT_RE.test(token)) {
    throw new ProtocolError(`bad ${what}: '${token}'`);
  }
  return parseInt(token, 10);
}

function numField(token: string, what: string): number {
  if (!NUM_RE.test(token)) {
    throw new ProtocolError(`bad ${what}: '${token}'`);
  }
  return Number(token);
}

export function encodeCommand(cmd: Command): string {
  const q = cmd.ori ?? [1, 0, 0, 0];
  return [
    "CMD",
    String(cmd.seq),
    String(cmd.tMs),
    ...cmd.translate.map(String),
    cmd.ori !== null ? "1" : "0",
    ...q.map(String),
    cmd.gripToggle ? "1" : "0",
  ].join(" ");
}

export function decodeCommand(line: string): Command {
  const parts = fields(line);
  if (parts.length === 0 || parts[0] !== "CMD") {
    throw new ProtocolError(`expected CMD, got '${parts[0] ?? ""}'`);
  }
  if (parts.length !== 12) {
    throw new ProtocolError(`CMD needs 11 fields, got ${parts.length - 1}`);
  }
  const seq = intField(parts[1], "seq");
  const tMs = intField(parts[2], "t_ms");
  if (seq < 0 || tMs < 0) {
    throw new ProtocolError("seq and t_ms must be non-negative");
  }
  const translate = parts.slice(3, 6).map((p) => numField(p, "translate")) as Vec3;
  const oriflag = parts[6];
  if (oriflag !== "0" && oriflag !== "1") {
    throw new ProtocolError(`bad oriflag: '${oriflag}'`);
  }
  let ori: Quat | null = null;
  if (oriflag === "1") {
    const q = parts.slice(7, 11).map((p) => numField(p, "quat")) as Quat;
    const n = Math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    if (Math.abs(n - 1) > 1e-3) {
      throw new ProtocolError(`quat norm ${n.toFixed(4)} is not 1`);
    }
    ori = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
  }
  const grip = parts[11];
  if (grip !== "0" && grip !== "1") {
    throw new ProtocolError(`bad grip: '${grip}'`);
  }
  return { seq, tMs, translate, ori, gripToggle: grip === "1" };
}

export function decodeState(text: string): StateFrame {
  const lines = text.split("\n").filter((ln) => ln.trim().length > 0);
  if (lines.length === 0 || !lines[0].startsWith("STATE ")) {
    throw new ProtocolError("expected STATE header");
  }
  const head = fields(lines[0]);
  if (head.length !== 3) {
    throw new ProtocolError("STATE needs seq and t_ms");
  }
  const seq = intField(head[1], "seq");
  const tMs = intField(head[2], "t_ms");
  const entities: Record<string, EntityPose> = {};
  for (const ln of lines.slice(1)) {
    const parts = fields(ln);
    if (parts[0] === "E") {
      if (parts.length !== 9) {
        throw new ProtocolError(`E line needs 8 fields: '${ln}'`);
      }
      const nums = parts.slice(2).map((p) => numField(p, "pose"));
      const prev = entities[parts[1]];
      entities[parts[1]] = {
        pos: nums.slice(0, 3) as Vec3,
        rot: nums.slice(3) as Quat,
        dofPos: prev?.dofPos ?? null,
      };
    } else if (parts[0] === "D") {
      if (parts.length < 3) {
        throw new ProtocolError(`D line needs dofs: '${ln}'`);
      }
      const prev = entities[parts[1]];
      entities[parts[1]] = {
        pos: prev?.pos ?? null,
        rot: prev?.rot ?? null,
        dofPos: parts.slice(2).map((p) => numField(p, "dof")),
      };
    } else {
      throw new ProtocolError(`unknown state line: '${ln}'`);
    }
  }
  return { seq, tMs, entities };
}

export function decodeWelcome(line: string): { token: string; lastSeq: number } {
  const parts = fields(line);
  if (parts.length !== 3 || parts[0] !== "WELCOME") {
    throw new ProtocolError(`expected WELCOME, got '${line}'`);
  }
  return { token: parts[1], lastSeq: intField(parts[2], "last_seq") };
}
