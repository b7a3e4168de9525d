import { describe, expect, it } from "vitest";

import { composeCommand, makeControls, translateFromPressed, type JogButton } from "../src/controls.js";
import { encodeCommand } from "../src/protocol.js";

function pressed(...buttons: JogButton[]): Set<JogButton> {
  return new Set(buttons);
}

describe("translateFromPressed", () => {
  it("maps single buttons to unit axis intents", () => {
    expect(translateFromPressed(pressed("+x"))).toEqual([1, 0, 0]);
    expect(translateFromPressed(pressed("-x"))).toEqual([-1, 0, 0]);
    expect(translateFromPressed(pressed("+y"))).toEqual([0, 1, 0]);
    expect(translateFromPressed(pressed("-y"))).toEqual([0, -1, 0]);
    expect(translateFromPressed(pressed("+z"))).toEqual([0, 0, 1]);
    expect(translateFromPressed(pressed("-z"))).toEqual([0, 0, -1]);
  });

  it("combines simultaneous presses", () => {
    expect(translateFromPressed(pressed("+x", "+z"))).toEqual([1, 0, 1]);
    expect(translateFromPressed(pressed("+x", "-y", "+z"))).toEqual([1, -1, 1]);
  });

  it("cancels opposite buttons and idles to zero", () => {
    expect(translateFromPressed(pressed())).toEqual([0, 0, 0]);
    expect(translateFromPressed(pressed("+x", "-x"))).toEqual([0, 0, 0]);
    expect(translateFromPressed(pressed("+x", "-x", "+y", "-y", "+z", "-z"))).toEqual([0, 0, 0]);
  });
});

describe("composeCommand", () => {
  it("emits an idle frame with no input", () => {
    const c = makeControls();
    const cmd = composeCommand(c, 0, 0);
    expect(cmd.translate).toEqual([0, 0, 0]);
    expect(cmd.ori).toBeNull();
    expect(cmd.gripToggle).toBe(false);
    expect(encodeCommand(cmd)).toBe("CMD 0 0 0 0 0 0 1 0 0 0 0");
  });

  it("keeps oriflag 0 while the orientation switch is off", () => {
    const c = makeControls();
    c.orientation = [0.5, 0.5, 0.5, 0.5];
    const line = encodeCommand(composeCommand(c, 3, 60));
    expect(line.split(" ")[6]).toBe("0");
  });

  it("streams a unit quaternion once the switch is on", () => {
    const c = makeControls();
    c.orientationEnabled = true;
    c.orientation = [2, 0, 0, 0]; // normalized on the way out
    const cmd = composeCommand(c, 4, 80);
    expect(cmd.ori).toEqual([1, 0, 0, 0]);
    expect(encodeCommand(cmd).split(" ")[6]).toBe("1");
  });

  it("snapshots the pending gripper toggle", () => {
    const c = makeControls();
    c.gripPending = true;
    expect(composeCommand(c, 5, 100).gripToggle).toBe(true);
  });
});
