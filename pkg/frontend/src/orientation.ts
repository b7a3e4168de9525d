/**
 * Attitude sources for the orientation stream: the device-orientation sensor
 * on phones, or three on-screen sliders everywhere else.  Both produce a
 * world-frame attitude quaternion in (w, x, y, z) order.
 */

import type { Quat, Vec3 } from "./protocol.js";

const DEG = Math.PI / 180;

export function quatMul(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function quatFromAxisAngle(axis: Vec3, angle: number): Quat {
  const s = Math.sin(angle / 2);
  return [Math.cos(angle / 2), axis[0] * s, axis[1] * s, axis[2] * s];
}

export function quatNormalize(q: Quat): Quat {
  const n = Math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  if (n === 0) {
    throw new Error("cannot normalize zero quaternion");
  }
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

/**
 * Attitude from deviceorientation angles in degrees.  The sensor reports
 * intrinsic Tait-Bryan Z-X'-Y'' angles: alpha about z, then beta about the
 * rotated x, then gamma about the twice-rotated y.
 */
export function quatFromDeviceAngles(alpha: number, beta: number, gamma: number): Quat {
  return quatMul(
    quatFromAxisAngle([0, 0, 1], alpha * DEG),
    quatMul(
      quatFromAxisAngle([1, 0, 0], beta * DEG),
      quatFromAxisAngle([0, 1, 0], gamma * DEG),
    ),
  );
}

/** Slider fallback: yaw about z, then pitch about y, then roll about x, degrees. */
export function quatFromSliders(yaw: number, pitch: number, roll: number): Quat {
  return quatMul(
    quatFromAxisAngle([0, 0, 1], yaw * DEG),
    quatMul(
      quatFromAxisAngle([0, 1, 0], pitch * DEG),
      quatFromAxisAngle([1, 0, 0], roll * DEG),
    ),
  );
}
