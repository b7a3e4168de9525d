import { execFileSync } from "node:child_process";
import { afterEach, describe, expect, it, vi } from "vitest";

import { TeleopClient, wsUrl, type SocketLike, type Status } from "../src/client.js";
import { makeControls, type Controls } from "../src/controls.js";
import { decodeCommand, type StateFrame } from "../src/protocol.js";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  readyState = 0; // CONNECTING
  onopen: (() => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    if (this.readyState !== 3) {
      this.readyState = 3;
      this.onclose?.();
    }
  }

  // test-side drivers
  open(): void {
    this.readyState = 1;
    this.onopen?.();
  }

  reply(data: string): void {
    this.onmessage?.({ data });
  }

  drop(): void {
    this.readyState = 3;
    this.onclose?.();
  }
}

interface Harness {
  client: TeleopClient;
  controls: Controls;
  sockets: FakeSocket[];
  statuses: Status[];
  states: StateFrame[];
}

function harness(): Harness {
  const controls = makeControls();
  const sockets: FakeSocket[] = [];
  const statuses: Status[] = [];
  const states: StateFrame[] = [];
  const client = new TeleopClient({
    url: "ws://robot:8571/teleop",
    controls,
    makeSocket: () => {
      const s = new FakeSocket();
      sockets.push(s);
      return s;
    },
    onStatus: (s) => statuses.push(s),
    onState: (f) => states.push(f),
  });
  return { client, controls, sockets, statuses, states };
}

function openFresh(h: Harness, welcome = "WELCOME aa11 -1"): FakeSocket {
  h.client.connect();
  const ws = h.sockets[h.sockets.length - 1];
  ws.open();
  ws.reply(welcome);
  return ws;
}

let active: TeleopClient | null = null;

afterEach(() => {
  active?.close();
  active = null;
  vi.useRealTimers();
});

function frames(ws: FakeSocket): string[] {
  return ws.sent.filter((line) => line.startsWith("CMD"));
}

describe("send loop", () => {
  it("emits one parseable frame per 20 ms tick", () => {
    vi.useFakeTimers();
    const h = harness();
    active = h.client;
    const ws = openFresh(h);
    vi.advanceTimersByTime(100);
    const sent = frames(ws);
    expect(sent).toHaveLength(5);
    sent.forEach((line, i) => {
      const cmd = decodeCommand(line);
      expect(cmd.seq).toBe(i);
      expect(cmd.translate).toEqual([0, 0, 0]);
      expect(cmd.ori).toBeNull();
      expect(cmd.gripToggle).toBe(false);
    });
    const stamps = sent.map((line) => decodeCommand(line).tMs);
    expect(stamps).toEqual([20, 40, 60, 80, 100]);
  });

  it("sends the combined vector while two buttons are held", () => {
    vi.useFakeTimers();
    const h = harness();
    active = h.client;
    const ws = openFresh(h);
    h.controls.pressed.add("+x");
    h.controls.pressed.add("+z");
    vi.advanceTimersByTime(40);
    h.controls.pressed.clear();
    vi.advanceTimersByTime(20);
    const sent = frames(ws).map(decodeCommand);
    expect(sent[0].translate).toEqual([1, 0, 1]);
    expect(sent[1].translate).toEqual([1, 0, 1]);
    expect(sent[2].translate).toEqual([0, 0, 0]);
  });

  it("carries oriflag 0 whenever the orientation switch is off", () => {
    vi.useFakeTimers();
    const h = harness();
    active = h.client;
    const ws = openFresh(h);
    h.controls.orientation = [0.5, 0.5, 0.5, 0.5];
    vi.advanceTimersByTime(20); // switch off: attitude must not leak
    h.controls.orientationEnabled = true;
    vi.advanceTimersByTime(20);
    h.controls.orientationEnabled = false;
    vi.advanceTimersByTime(20);
    const flags = frames(ws).map((line) => line.split(" ")[6]);
    expect(flags).toEqual(["0", "1", "0"]);
    expect(decodeCommand(frames(ws)[1]).ori).toEqual([0.5, 0.5, 0.5, 0.5]);
  });

  it("sends the gripper toggle exactly once per press", () => {
    vi.useFakeTimers();
    const h = harness();
    active = h.client;
    const ws = openFresh(h);
    h.controls.gripPending = true;
    vi.advanceTimersByTime(60);
    const grips = frames(ws).map((line) => decodeCommand(line).gripToggle);
    expect(grips).toEqual([true, false, false]);
  });

  it("drops ticks while disconnected and keeps the toggle pending", () => {
    vi.useFakeTimers();
    const h = harness();
    active = h.client;
    const ws = openFresh(h);
    vi.advanceTimersByTime(40);
    ws.drop();
    h.controls.gripPending = true;
    vi.advanceTimersByTime(200); // ticks during the outage emit nothing
    expect(frames(ws)).toHaveLength(2);
    vi.advanceTimersByTime(300); // backoff elapses at 500 ms
    expect(h.sockets).toHaveLength(2); // one reconnect under way
    const ws2 = h.sockets[1];
    ws2.open();
    ws2.reply("WELCOME aa11 1");
    vi.advanceTimersByTime(40);
    const resumed = frames(ws2).map(decodeCommand);
    expect(resumed[0].gripToggle).toBe(true);
    expect(resumed[1].gripToggle).toBe(false);
  });
});

describe("session lifecycle", () => {
  it("handshakes and reports connected", () => {
    vi.useFakeTimers();
    const h = harness();
    active = h.client;
    const ws = openFresh(h);
    expect(ws.sent[0]).toBe("HELLO");
    expect(h.client.token).toBe("aa11");
    expect(h.statuses).toEqual(["connecting", "connected"]);
  });

  it("resumes seq and timestamps for a known token", () => {
    vi.useFakeTimers();
    const h = harness();
    active = h.client;
    const ws = openFresh(h);
    vi.advanceTimersByTime(100); // seq 0..4 go out
    ws.drop();
    vi.advanceTimersByTime(500);
    const ws2 = h.sockets[1];
    ws2.open();
    expect(ws2.sent[0]).toBe("HELLO aa11");
    ws2.reply("WELCOME aa11 4");
    vi.advanceTimersByTime(20);
    const cmd = decodeCommand(frames(ws2)[0]);
    expect(cmd.seq).toBe(5);
    expect(cmd.tMs).toBeGreaterThan(100); // clock did not restart
  });

  it("starts a fresh stream when the server mints a new token", () => {
    vi.useFakeTimers();
    const h = harness();
    active = h.client;
    const ws = openFresh(h);
    vi.advanceTimersByTime(100);
    ws.drop();
    vi.advanceTimersByTime(500);
    const ws2 = h.sockets[1];
    ws2.open();
    ws2.reply("WELCOME bb22 -1"); // server restarted and lost the session
    vi.advanceTimersByTime(20);
    const cmd = decodeCommand(frames(ws2)[0]);
    expect(h.client.token).toBe("bb22");
    expect(cmd.seq).toBe(0);
    expect(cmd.tMs).toBe(20);
  });

  it("retries with doubling backoff and a single outstanding timer", () => {
    vi.useFakeTimers();
    const h = harness();
    active = h.client;
    openFresh(h).drop();
    expect(h.statuses).toEqual(["connecting", "connected", "retrying"]);
    vi.advanceTimersByTime(499);
    expect(h.sockets).toHaveLength(1);
    vi.advanceTimersByTime(1);
    expect(h.sockets).toHaveLength(2);
    h.sockets[1].drop(); // connect attempt fails outright
    vi.advanceTimersByTime(999);
    expect(h.sockets).toHaveLength(2); // second wait is 1000 ms
    vi.advanceTimersByTime(1);
    expect(h.sockets).toHaveLength(3);
    h.sockets[2].open();
    h.sockets[2].reply("WELCOME aa11 -1");
    expect(h.client.status).toBe("connected");
  });

  it("ignores a manual connect while a socket is live", () => {
    vi.useFakeTimers();
    const h = harness();
    active = h.client;
    openFresh(h);
    h.client.connect();
    expect(h.sockets).toHaveLength(1);
  });

  it("stores state frames and surfaces them to the callback", () => {
    vi.useFakeTimers();
    const h = harness();
    active = h.client;
    const ws = openFresh(h);
    ws.reply("STATE 0 20\nE cube 0.45 0.1 0.02 1.0 0.0 0.0 0.0");
    expect(h.states).toHaveLength(1);
    expect(h.client.latest?.entities.cube.pos).toEqual([0.45, 0.1, 0.02]);
  });

  it("keeps streaming after a server ERR", () => {
    vi.useFakeTimers();
    const h = harness();
    active = h.client;
    const ws = openFresh(h);
    ws.reply("ERR stale 7");
    expect(h.client.lastError).toBe("ERR stale 7");
    expect(h.client.status).toBe("connected");
    vi.advanceTimersByTime(20);
    expect(frames(ws)).toHaveLength(1);
  });

  it("says BYE on disconnect and stays down", () => {
    vi.useFakeTimers();
    const h = harness();
    active = h.client;
    const ws = openFresh(h);
    h.client.disconnect();
    expect(ws.sent[ws.sent.length - 1]).toBe("BYE");
    expect(h.client.status).toBe("disconnected");
    vi.advanceTimersByTime(10000);
    expect(h.sockets).toHaveLength(1); // no reconnect after a deliberate close
  });
});

describe("wsUrl", () => {
  it("derives the endpoint from the page location", () => {
    expect(wsUrl({ protocol: "http:", host: "robot:8571" })).toBe("ws://robot:8571/teleop");
    expect(wsUrl({ protocol: "https:", host: "robot" })).toBe("wss://robot/teleop");
  });
});

describe("server decoder interop", () => {
  it("emits frames the server's own decoder accepts", () => {
    vi.useFakeTimers();
    const h = harness();
    active = h.client;
    const ws = openFresh(h);
    vi.advanceTimersByTime(100); // idle
    h.controls.pressed.add("+x");
    h.controls.pressed.add("+z");
    vi.advanceTimersByTime(100); // combined jog
    h.controls.pressed.clear();
    h.controls.orientationEnabled = true;
    h.controls.orientation = [0.2, 0.4, 0.4, 0.8];
    vi.advanceTimersByTime(100); // streamed attitude
    h.controls.orientationEnabled = false;
    h.controls.gripPending = true;
    vi.advanceTimersByTime(100); // gripper toggle
    const sent = frames(ws);
    expect(sent).toHaveLength(20);

    const script = [
      "import sys",
      "from simkit.teleop import decode_command",
      "last = -1",
      "n = 0",
      "for line in sys.stdin:",
      "    line = line.strip()",
      "    if not line:",
      "        continue",
      "    cmd = decode_command(line)",
      "    assert cmd.seq > last",
      "    last = cmd.seq",
      "    n += 1",
      "print(n)",
    ].join("\n");
    const out = execFileSync("python3", ["-c", script], {
      input: sent.join("\n"),
      encoding: "utf8",
    });
    expect(Number(out.trim())).toBe(sent.length);
  });
});
