/**
 * Orthographic scene views fed by STATE frames.  Marker layout is a pure
 * function of the latest frame; drawing is a thin canvas pass over the
 * computed markers.  World axes: x forward, y left, z up; the canvas center
 * is the world origin in both views.
 */

import type { EntityPose, Vec3 } from "./protocol.js";

export interface Viewport {
  width: number;
  height: number;
  scale: number; // pixels per meter
}

export type ViewKind = "top" | "side";

export interface Marker {
  name: string;
  robot: boolean; // articulated entity -> highlighted as the robot
  top: [number, number];
  side: [number, number];
}

/** Top-down view: world x right, world y up the screen. */
export function projectTopDown(pos: Vec3, vp: Viewport): [number, number] {
  return [vp.width / 2 + pos[0] * vp.scale, vp.height / 2 - pos[1] * vp.scale];
}

/** Side view: world x right, world z up the screen. */
export function projectSide(pos: Vec3, vp: Viewport): [number, number] {
  return [vp.width / 2 + pos[0] * vp.scale, vp.height / 2 - pos[2] * vp.scale];
}

export function sceneMarkers(entities: Record<string, EntityPose>, vp: Viewport): Marker[] {
  const out: Marker[] = [];
  for (const [name, es] of Object.entries(entities)) {
    if (es.pos === null) {
      continue; // dof-only lines carry no drawable position
    }
    out.push({
      name,
      robot: es.dofPos !== null,
      top: projectTopDown(es.pos, vp),
      side: projectSide(es.pos, vp),
    });
  }
  return out;
}

const ROBOT_COLOR = "#ff8c3a";
const OBJECT_COLOR = "#6ab0f3";
const LABEL_COLOR = "#9aa3ad";

export function drawView(
  ctx: CanvasRenderingContext2D,
  markers: readonly Marker[],
  view: ViewKind,
  vp: Viewport,
): void {
  ctx.clearRect(0, 0, vp.width, vp.height);
  if (markers.length === 0) {
    return;
  }
  // faint axes through the world origin
  ctx.strokeStyle = "#2c333b";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(0, vp.height / 2);
  ctx.lineTo(vp.width, vp.height / 2);
  ctx.moveTo(vp.width / 2, 0);
  ctx.lineTo(vp.width / 2, vp.height);
  ctx.stroke();
  for (const m of markers) {
    const [x, y] = view === "top" ? m.top : m.side;
    ctx.fillStyle = m.robot ? ROBOT_COLOR : OBJECT_COLOR;
    ctx.beginPath();
    ctx.arc(x, y, m.robot ? 7 : 5, 0, 2 * Math.PI);
    ctx.fill();
    if (m.robot) {
      ctx.strokeStyle = ROBOT_COLOR;
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(x, y, 11, 0, 2 * Math.PI);
      ctx.stroke();
    }
    ctx.fillStyle = LABEL_COLOR;
    ctx.font = "11px system-ui, sans-serif";
    ctx.fillText(m.name, x + 13, y + 4);
  }
}
