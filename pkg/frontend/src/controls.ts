/**
 * Operator input state: which jog buttons are held, whether an attitude is
 * being streamed, and a pending one-shot gripper toggle.  The send loop
 * snapshots this once per tick via composeCommand.
 */

import { quatNormalize } from "./orientation.js";
import type { Command, Quat, Vec3 } from "./protocol.js";

export type JogButton = "+x" | "-x" | "+y" | "-y" | "+z" | "-z";

export const JOG_BUTTONS: readonly JogButton[] = ["+x", "-x", "+y", "-y", "+z", "-z"];

const AXIS_INDEX: Record<string, 0 | 1 | 2> = { x: 0, y: 1, z: 2 };

export interface Controls {
  pressed: Set<JogButton>;
  orientationEnabled: boolean;
  orientation: Quat;
  gripPending: boolean;
}

export function makeControls(): Controls {
  return {
    pressed: new Set(),
    orientationEnabled: false,
    orientation: [1, 0, 0, 0],
    gripPending: false,
  };
}

/**
 * Sum of held jog directions, one component per axis.  Holding +x and +z
 * together gives [1, 0, 1]; opposite buttons cancel to 0.
 */
export function translateFromPressed(pressed: ReadonlySet<JogButton>): Vec3 {
  const v: Vec3 = [0, 0, 0];
  for (const b of pressed) {
    v[AXIS_INDEX[b[1]]] += b[0] === "+" ? 1 : -1;
  }
  return v;
}

/** Snapshot the controls into the CMD frame for one send-loop tick. */
export function composeCommand(c: Controls, seq: number, tMs: number): Command {
  return {
    seq,
    tMs,
    translate: translateFromPressed(c.pressed),
    ori: c.orientationEnabled ? quatNormalize(c.orientation) : null,
    gripToggle: c.gripPending,
  };
}
