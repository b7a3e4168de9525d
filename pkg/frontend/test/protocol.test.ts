import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import {
  decodeCommand,
  decodeState,
  decodeWelcome,
  encodeCommand,
  ProtocolError,
  type Command,
  type EntityPose,
  type Quat,
  type Vec3,
} from "../src/protocol.js";

// the same fixture the server's test suite runs against
const GOLDEN_URL = new URL("../../tests/fixtures/teleop_golden.json", import.meta.url);

interface CommandCase {
  name: string;
  line: string;
  valid: boolean;
  seq?: number;
  t_ms?: number;
  translate?: number[];
  ori?: number[] | null;
  grip_toggle?: boolean;
}

interface StateCase {
  name: string;
  text: string;
  valid: boolean;
  seq?: number;
  t_ms?: number;
  entities?: Record<string, { pos?: number[]; rot?: number[]; dof_pos?: number[] }>;
}

const golden = JSON.parse(readFileSync(GOLDEN_URL, "utf8")) as {
  commands: CommandCase[];
  states: StateCase[];
};

describe("golden commands", () => {
  for (const c of golden.commands.filter((c) => c.valid)) {
    it(`decodes ${c.name}`, () => {
      const cmd = decodeCommand(c.line);
      expect(cmd.seq).toBe(c.seq);
      expect(cmd.tMs).toBe(c.t_ms);
      expect(cmd.translate).toEqual(c.translate);
      if (c.ori === null || c.ori === undefined) {
        expect(cmd.ori).toBeNull();
      } else {
        for (let i = 0; i < 4; i++) {
          expect(cmd.ori![i]).toBeCloseTo(c.ori[i], 12);
        }
      }
      expect(cmd.gripToggle).toBe(c.grip_toggle);
      // encode -> decode is the identity on commands
      expect(decodeCommand(encodeCommand(cmd))).toEqual(cmd);
    });

    it(`encodes ${c.name} to the exact fixture bytes`, () => {
      const cmd: Command = {
        seq: c.seq!,
        tMs: c.t_ms!,
        translate: c.translate as Vec3,
        ori: (c.ori as Quat | null | undefined) ?? null,
        gripToggle: c.grip_toggle!,
      };
      expect(encodeCommand(cmd)).toBe(c.line);
    });
  }

  for (const c of golden.commands.filter((c) => !c.valid)) {
    it(`rejects ${c.name}`, () => {
      expect(() => decodeCommand(c.line)).toThrow(ProtocolError);
    });
  }

  it("reports field-level errors like the server", () => {
    expect(() => decodeCommand("CMD 6 120 0 0 0 0 1 0 0 0")).toThrow("CMD needs 11 fields, got 10");
    expect(() => decodeCommand("CMD -1 140 0 0 0 0 1 0 0 0 0")).toThrow("must be non-negative");
    expect(() => decodeCommand("CMD 7 160 0 0 0 1 2 0 0 0 0")).toThrow("quat norm 2.0000 is not 1");
    expect(() => decodeCommand("CMD 8 180 0 0 0 0 1 0 0 0 2")).toThrow("bad grip: '2'");
    expect(() => decodeCommand("NOPE 9 200 0 0 0 0 1 0 0 0 0")).toThrow("expected CMD");
    expect(() => decodeCommand("CMD 1.5 220 0 0 0 0 1 0 0 0 0")).toThrow("bad seq: '1.5'");
    expect(() => decodeCommand("CMD 9 220 0 0 0 2 1 0 0 0 0")).toThrow("bad oriflag: '2'");
    expect(() => decodeCommand("CMD 1 20 0x1 0 0 0 1 0 0 0 0")).toThrow("bad translate");
    expect(() => decodeCommand("")).toThrow("expected CMD");
  });

  it("accepts both bare and trailing-zero decimals", () => {
    const a = decodeCommand("CMD 1 20 0.005 0 0 0 1 0 0 0 0");
    const b = decodeCommand("CMD 1 20 0.005 0.0 0.0 0 1.0 0.0 0.0 0.0 0");
    expect(a).toEqual(b);
  });
});

describe("golden states", () => {
  for (const c of golden.states.filter((c) => c.valid)) {
    it(`decodes ${c.name}`, () => {
      const frame = decodeState(c.text);
      expect(frame.seq).toBe(c.seq);
      expect(frame.tMs).toBe(c.t_ms);
      const expected: Record<string, EntityPose> = {};
      for (const [name, f] of Object.entries(c.entities!)) {
        expected[name] = {
          pos: (f.pos as Vec3 | undefined) ?? null,
          rot: (f.rot as Quat | undefined) ?? null,
          dofPos: f.dof_pos ?? null,
        };
      }
      expect(frame.entities).toEqual(expected);
    });
  }

  for (const c of golden.states.filter((c) => !c.valid)) {
    it(`rejects ${c.name}`, () => {
      expect(() => decodeState(c.text)).toThrow(ProtocolError);
    });
  }

  it("decodes a live server frame with repr-style floats", () => {
    const frame = decodeState(
      "STATE 0 0\n" +
        "E arm 0.0 0.0 0.0 1.0 0.0 0.0 0.0\n" +
        "E cube 0.45 0.1 0.02 1.0 0.0 0.0 0.0\n" +
        "E table 0.45 0.0 -0.02 1.0 0.0 0.0 0.0\n" +
        "D arm 0.0 0.907995231597848 0.0 1.5814301360611978 0.0 0.6520802895108533 0.0 0.04 0.04",
    );
    expect(Object.keys(frame.entities).sort()).toEqual(["arm", "cube", "table"]);
    expect(frame.entities.arm.pos).toEqual([0, 0, 0]);
    expect(frame.entities.arm.dofPos).toHaveLength(9);
    expect(frame.entities.cube.pos).toEqual([0.45, 0.1, 0.02]);
    expect(frame.entities.cube.dofPos).toBeNull();
  });

  it("rejects malformed state lines like the server", () => {
    expect(() => decodeState("HELLO there")).toThrow("expected STATE header");
    expect(() => decodeState("STATE 1 2\nX what 1 2 3")).toThrow("unknown state line");
    expect(() => decodeState("STATE 1 2\nE cube 1 2 3")).toThrow("E line needs 8 fields");
    expect(() => decodeState("STATE 1 2\nD cube")).toThrow("D line needs dofs");
  });
});

describe("welcome", () => {
  it("parses fresh and resumed sessions", () => {
    expect(decodeWelcome("WELCOME ab12 -1")).toEqual({ token: "ab12", lastSeq: -1 });
    expect(decodeWelcome("WELCOME ab12 499")).toEqual({ token: "ab12", lastSeq: 499 });
  });

  it("rejects anything else", () => {
    expect(() => decodeWelcome("WELCOME ab12")).toThrow(ProtocolError);
    expect(() => decodeWelcome("ERR protocol expected HELLO")).toThrow(ProtocolError);
  });
});
