/**
 * Page wiring: jog buttons (pointer + keyboard), orientation and gripper
 * switches, the slider fallback for attitude, and the canvas render loop.
 * All protocol and state logic lives in the imported modules; this file only
 * binds them to the DOM.
 */

import { TeleopClient, wsUrl } from "./client.js";
import { makeControls, type JogButton } from "./controls.js";
import { quatFromDeviceAngles, quatFromSliders } from "./orientation.js";
import { drawView, sceneMarkers, type Viewport } from "./scene.js";

const RENDER_INTERVAL_MS = 1000 / 30;

// keyboard mirror of the jog buttons
const KEY_TO_JOG: Record<string, JogButton> = {
  ArrowUp: "+x",
  ArrowDown: "-x",
  ArrowLeft: "+y",
  ArrowRight: "-y",
  e: "+z",
  d: "-z",
};

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) {
    throw new Error(`missing #${id}`);
  }
  return el as T;
}

function main(): void {
  const controls = makeControls();
  const statusEl = byId<HTMLSpanElement>("status");
  const client = new TeleopClient({
    url: wsUrl(window.location),
    controls,
    onStatus: (status) => {
      statusEl.textContent = status;
      statusEl.dataset.status = status;
    },
  });

  const jogEls = new Map<JogButton, HTMLButtonElement>();
  for (const el of document.querySelectorAll<HTMLButtonElement>("button[data-jog]")) {
    const jog = el.dataset.jog as JogButton;
    jogEls.set(jog, el);
    const press = (ev: PointerEvent) => {
      ev.preventDefault(); // keep multi-touch presses from scrolling the page
      el.setPointerCapture(ev.pointerId);
      controls.pressed.add(jog);
      el.classList.add("held");
    };
    const release = () => {
      controls.pressed.delete(jog);
      el.classList.remove("held");
    };
    el.addEventListener("pointerdown", press);
    el.addEventListener("pointerup", release);
    el.addEventListener("pointercancel", release);
  }
  window.addEventListener("keydown", (ev) => {
    const jog = KEY_TO_JOG[ev.key];
    if (jog !== undefined && !ev.repeat) {
      controls.pressed.add(jog);
      jogEls.get(jog)?.classList.add("held");
    }
  });
  window.addEventListener("keyup", (ev) => {
    const jog = KEY_TO_JOG[ev.key];
    if (jog !== undefined) {
      controls.pressed.delete(jog);
      jogEls.get(jog)?.classList.remove("held");
    }
  });

  const oriToggle = byId<HTMLInputElement>("ori-toggle");
  oriToggle.addEventListener("change", () => {
    controls.orientationEnabled = oriToggle.checked;
  });

  let gripClosed = false;
  const gripEl = byId<HTMLButtonElement>("grip");
  gripEl.addEventListener("click", () => {
    controls.gripPending = true; // one-shot toggle, sent with the next frame
    gripClosed = !gripClosed;
    gripEl.textContent = gripClosed ? "gripper: closed" : "gripper: open";
  });

  // attitude source: device-orientation sensor when it delivers, sliders otherwise
  const slidersEl = byId<HTMLFieldSetElement>("sliders");
  const yawEl = byId<HTMLInputElement>("yaw");
  const pitchEl = byId<HTMLInputElement>("pitch");
  const rollEl = byId<HTMLInputElement>("roll");
  let sensorLive = false;
  const readSliders = () => {
    if (!sensorLive) {
      controls.orientation = quatFromSliders(
        Number(yawEl.value),
        Number(pitchEl.value),
        Number(rollEl.value),
      );
    }
  };
  for (const el of [yawEl, pitchEl, rollEl]) {
    el.addEventListener("input", readSliders);
  }
  window.addEventListener("deviceorientation", (ev) => {
    if (ev.alpha === null || ev.beta === null || ev.gamma === null) {
      return;
    }
    sensorLive = true;
    slidersEl.hidden = true;
    controls.orientation = quatFromDeviceAngles(ev.alpha, ev.beta, ev.gamma);
  });

  const topCanvas = byId<HTMLCanvasElement>("view-top");
  const sideCanvas = byId<HTMLCanvasElement>("view-side");
  const topCtx = topCanvas.getContext("2d")!;
  const sideCtx = sideCanvas.getContext("2d")!;
  const vp: Viewport = { width: topCanvas.width, height: topCanvas.height, scale: 180 };
  let lastDraw = 0;
  const frame = (t: number) => {
    if (t - lastDraw >= RENDER_INTERVAL_MS) {
      lastDraw = t;
      const markers = sceneMarkers(client.latest?.entities ?? {}, vp);
      drawView(topCtx, markers, "top", vp);
      drawView(sideCtx, markers, "side", vp);
    }
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);

  client.connect();
}

main();
