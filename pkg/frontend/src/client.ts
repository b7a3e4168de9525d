/**
 * Teleop session client: one WebSocket, a HELLO/WELCOME handshake that
 * resumes the server-side session by token, and a timer-driven send loop
 * emitting one CMD frame per tick.  Ticks that fire while disconnected are
 * dropped — nothing is queued.
 */

import { composeCommand, type Controls } from "./controls.js";
import {
  decodeState,
  decodeWelcome,
  encodeCommand,
  ProtocolError,
  SEND_INTERVAL_MS,
  WS_PATH,
  type StateFrame,
} from "./protocol.js";

export type Status = "disconnected" | "connecting" | "connected" | "retrying";

/** The corner of the WebSocket surface the client touches (fakeable in tests). */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  readyState: number;
  onopen: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

const OPEN = 1;
const RETRY_MIN_MS = 500;
const RETRY_MAX_MS = 8000;

export interface ClientOptions {
  url: string;
  controls: Controls;
  makeSocket?: (url: string) => SocketLike;
  now?: () => number;
  onStatus?: (status: Status) => void;
  onState?: (frame: StateFrame) => void;
}

export function wsUrl(loc: { protocol: string; host: string }): string {
  const scheme = loc.protocol === "https:" ? "wss" : "ws";
  return `${scheme}://${loc.host}${WS_PATH}`;
}

export class TeleopClient {
  status: Status = "disconnected";
  token: string | null = null;
  seq = 0;
  latest: StateFrame | null = null;
  lastError = "";

  private readonly opts: ClientOptions;
  private readonly makeSocket: (url: string) => SocketLike;
  private readonly now: () => number;
  private socket: SocketLike | null = null;
  private epoch = 0;
  private userClosed = false;
  private retryDelay = RETRY_MIN_MS;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private sendTimer: ReturnType<typeof setInterval> | null = null;

  constructor(opts: ClientOptions) {
    this.opts = opts;
    this.makeSocket = opts.makeSocket ?? ((url) => new WebSocket(url) as unknown as SocketLike);
    this.now = opts.now ?? (() => Date.now());
  }

  connect(): void {
    if (this.socket !== null) {
      return;
    }
    this.userClosed = false;
    this.sendTimer ??= setInterval(() => this.tick(), SEND_INTERVAL_MS);
    this.setStatus("connecting");
    let ws: SocketLike;
    try {
      ws = this.makeSocket(this.opts.url);
    } catch {
      this.setStatus("retrying");
      this.scheduleRetry();
      return;
    }
    this.socket = ws;
    ws.onopen = () => {
      ws.send(this.token === null ? "HELLO" : `HELLO ${this.token}`);
    };
    ws.onmessage = (ev) => {
      if (typeof ev.data === "string") {
        this.handleMessage(ev.data);
      }
    };
    ws.onerror = () => {
      // the close event that follows drives the retry path
    };
    ws.onclose = () => {
      this.socket = null;
      if (this.userClosed) {
        this.setStatus("disconnected");
      } else {
        this.setStatus("retrying");
        this.scheduleRetry();
      }
    };
  }

  disconnect(): void {
    this.userClosed = true;
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    if (this.socket !== null) {
      if (this.socket.readyState === OPEN) {
        this.socket.send("BYE");
      }
      this.socket.close();
    }
    this.setStatus("disconnected");
  }

  close(): void {
    this.disconnect();
    if (this.sendTimer !== null) {
      clearInterval(this.sendTimer);
      this.sendTimer = null;
    }
  }

  private handleMessage(line: string): void {
    if (this.status === "connecting") {
      let welcome;
      try {
        welcome = decodeWelcome(line);
      } catch (e) {
        this.lastError = String(e);
        return;
      }
      if (welcome.token !== this.token) {
        this.token = welcome.token; // fresh session: timestamps restart
        this.epoch = this.now();
      }
      this.seq = welcome.lastSeq + 1;
      this.retryDelay = RETRY_MIN_MS;
      this.setStatus("connected");
      return;
    }
    if (line.startsWith("STATE ")) {
      try {
        this.latest = decodeState(line);
      } catch (e) {
        if (!(e instanceof ProtocolError)) {
          throw e;
        }
        this.lastError = String(e);
        return;
      }
      this.opts.onState?.(this.latest);
    } else if (line.startsWith("ERR ")) {
      this.lastError = line; // session survives server-side; keep streaming
    }
    // OK <seq> acks a coalesced frame and BYE acks ours; neither needs action
  }

  private tick(): void {
    if (this.status !== "connected" || this.socket === null || this.socket.readyState !== OPEN) {
      return;
    }
    const cmd = composeCommand(this.opts.controls, this.seq, this.tMs());
    this.socket.send(encodeCommand(cmd));
    this.seq += 1;
    this.opts.controls.gripPending = false;
  }

  private tMs(): number {
    return Math.max(0, Math.round(this.now() - this.epoch));
  }

  private scheduleRetry(): void {
    if (this.retryTimer !== null || this.userClosed) {
      return; // at most one outstanding reconnect
    }
    this.retryTimer = setTimeout(() => {
      this.retryTimer = null;
      this.connect();
    }, this.retryDelay);
    this.retryDelay = Math.min(this.retryDelay * 2, RETRY_MAX_MS);
  }

  private setStatus(status: Status): void {
    if (this.status !== status) {
      this.status = status;
      this.opts.onStatus?.(status);
    }
  }
}
