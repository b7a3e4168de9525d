"""Minimal software rasterizer for camera observations.

Perspective projection with the camera looking along its +X axis, +Y left,
+Z up.  Spheres draw as shaded discs with pixel radius f*r/depth, boxes as
their projected faces (backface-culled, flat-shaded), planes as bounded
quads.  Geoms paint far to near by center depth (painter's algorithm) over a
solid background.  One distant light drives flat diffuse shading; light
intensity and color temperature tint the result, so material and light
randomization is visible in the pixels.  Output is uint8 RGB (H, W, 3).
"""

from __future__ import annotations

import math

import numpy as np

from ..config import CameraConfig, LightConfig
from ..transforms import Pose, quat_rotate, quat_to_mat

BACKGROUND = (36, 39, 46)
AMBIENT = 0.25


def kelvin_to_rgb(kelvin: float) -> np.ndarray:
    """Coarse blackbody tint, good enough to make temperature changes visible."""
    t = min(max(kelvin, 1500.0), 12000.0) / 100.0
    if t <= 66.0:
        r = 1.0
        g = min(1.0, max(0.0, (99.47 * math.log(t) - 161.12) / 255.0))
        b = 0.0 if t <= 19.0 else min(1.0, max(0.0, (138.52 * math.log(t - 10.0) - 305.04) / 255.0))
    else:
        r = min(1.0, max(0.0, 329.70 * (t - 60.0) ** -0.1332 / 255.0))
        g = min(1.0, max(0.0, 288.12 * (t - 60.0) ** -0.0755 / 255.0))
        b = 1.0
    return np.array([r, g, b])


def light_direction(light: LightConfig) -> np.ndarray:
    """Unit vector pointing from the scene toward the light."""
    if light.kind == "distant":
        polar = math.radians(light.polar)
        azimuth = math.radians(light.azimuth)
        return np.array(
            [
                math.sin(polar) * math.cos(azimuth),
                math.sin(polar) * math.sin(azimuth),
                math.cos(polar),
            ]
        )
    return np.array([0.0, 0.0, 1.0])  # cylinder arrays hang overhead


class _Frame:
    def __init__(self, cam: CameraConfig):
        self.width = cam.width
        self.height = cam.height
        self.eye = np.array(cam.pose.pos)
        self.rot = quat_to_mat(cam.pose.quat)  # columns: forward, left, up
        self.f = (cam.height / 2.0) / math.tan(math.radians(cam.vertical_fov) / 2.0)
        self.cx = cam.width / 2.0
        self.cy = cam.height / 2.0
        self.near = 1e-3

    def to_cam(self, p_world: np.ndarray) -> np.ndarray:
        return self.rot.T @ (p_world - self.eye)

    def project(self, p_cam: np.ndarray) -> tuple[float, float] | None:
        x, y, z = p_cam
        if x <= self.near:
            return None
        u = self.cx - self.f * (y / x)
        v = self.cy - self.f * (z / x)
        return u, v


def _shade(color, normal_world: np.ndarray, light_dir: np.ndarray, light_rgb: np.ndarray, intensity: float) -> np.ndarray:
    diffuse = max(0.0, float(np.dot(normal_world, light_dir)))
    lit = np.array(color) * (AMBIENT + (1.0 - AMBIENT) * diffuse * intensity) * light_rgb
    return np.clip(lit, 0.0, 1.0)


def _fill_triangle(img: np.ndarray, pts: list[tuple[float, float]], rgb: np.ndarray) -> None:
    h, w = img.shape[:2]
    (x0, y0), (x1, y1), (x2, y2) = pts
    lo_x = max(0, int(math.floor(min(x0, x1, x2))))
    hi_x = min(w - 1, int(math.ceil(max(x0, x1, x2))))
    lo_y = max(0, int(math.floor(min(y0, y1, y2))))
    hi_y = min(h - 1, int(math.ceil(max(y0, y1, y2))))
    if lo_x > hi_x or lo_y > hi_y:
        return
    denom = (y1 - y2) * (x0 - x2) + (x2 - x1) * (y0 - y2)
    if abs(denom) < 1e-12:
        return
    xs = np.arange(lo_x, hi_x + 1) + 0.5
    ys = np.arange(lo_y, hi_y + 1) + 0.5
    gx, gy = np.meshgrid(xs, ys)
    w0 = ((y1 - y2) * (gx - x2) + (x2 - x1) * (gy - y2)) / denom
    w1 = ((y2 - y0) * (gx - x2) + (x0 - x2) * (gy - y2)) / denom
    w2 = 1.0 - w0 - w1
    mask = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
    region = img[lo_y : hi_y + 1, lo_x : hi_x + 1]
    region[mask] = rgb


def _draw_disc(img: np.ndarray, center: tuple[float, float], radius: float, rgb: np.ndarray) -> None:
    h, w = img.shape[:2]
    cx, cy = center
    lo_x = max(0, int(math.floor(cx - radius)))
    hi_x = min(w - 1, int(math.ceil(cx + radius)))
    lo_y = max(0, int(math.floor(cy - radius)))
    hi_y = min(h - 1, int(math.ceil(cy + radius)))
    if lo_x > hi_x or lo_y > hi_y:
        return
    xs = np.arange(lo_x, hi_x + 1) + 0.5
    ys = np.arange(lo_y, hi_y + 1) + 0.5
    gx, gy = np.meshgrid(xs, ys)
    mask = (gx - cx) ** 2 + (gy - cy) ** 2 <= radius * radius
    region = img[lo_y : hi_y + 1, lo_x : hi_x + 1]
    region[mask] = rgb


def _quad_faces(pose: Pose, dims: tuple[float, ...], shape: str) -> list[tuple[np.ndarray, np.ndarray]]:
    """(corners 4x3 world, outward normal world) per face."""
    rot = quat_to_mat(pose.quat)
    pos = np.array(pose.pos)
    if shape == "plane":
        hx, hy = dims[0] / 2.0, dims[1] / 2.0
        corners = np.array([[-hx, -hy, 0], [hx, -hy, 0], [hx, hy, 0], [-hx, hy, 0]], dtype=float)
        world = corners @ rot.T + pos
        return [(world, rot[:, 2])]
    hx, hy, hz = dims[0] / 2.0, dims[1] / 2.0, dims[2] / 2.0
    faces = []
    axes = [
        (np.array([1.0, 0, 0]), hx, (1, 2)),
        (np.array([0, 1.0, 0]), hy, (0, 2)),
        (np.array([0, 0, 1.0]), hz, (0, 1)),
    ]
    half = np.array([hx, hy, hz])
    for axis, h, (u_i, v_i) in axes:
        for sign in (1.0, -1.0):
            u = np.zeros(3)
            v = np.zeros(3)
            u[u_i] = half[u_i]
            v[v_i] = half[v_i]
            c = axis * h * sign
            corners = np.array([c - u - v, c + u - v, c + u + v, c - u + v])
            world = corners @ rot.T + pos
            faces.append((world, rot @ (axis * sign)))
    return faces


def render_scene(
    prims: list[dict],
    cam: CameraConfig,
    lights: tuple[LightConfig, ...] | list[LightConfig] = (),
    background: tuple[int, int, int] = BACKGROUND,
) -> np.ndarray:
    frame = _Frame(cam)
    img = np.empty((cam.height, cam.width, 3), dtype=np.uint8)
    img[:, :] = background

    if lights:
        light = lights[0]
        ldir = light_direction(light)
        lrgb = kelvin_to_rgb(light.color_temperature)
        intensity = light.intensity
    else:
        ldir = np.array([0.0, 0.0, 1.0])
        lrgb = np.ones(3)
        intensity = 1.0

    # Painter's algorithm on center depth, far first.
    order = sorted(
        range(len(prims)),
        key=lambda i: -float(np.linalg.norm(np.array(prims[i]["pose"].pos) - frame.eye)),
    )

    for i in order:
        prim = prims[i]
        shape = prim["shape"]
        pose: Pose = prim["pose"]
        color = prim["color"]
        if shape == "sphere":
            p_cam = frame.to_cam(np.array(pose.pos))
            uv = frame.project(p_cam)
            if uv is None:
                continue
            r_px = frame.f * prim["dims"][0] / p_cam[0]
            # Flat shade the disc as if lit on its light-facing side.
            rgb = _shade(color, ldir, ldir, lrgb, intensity)
            _draw_disc(img, uv, r_px, (rgb * 255).astype(np.uint8))
        elif shape in ("box", "plane"):
            for corners, normal in _quad_faces(pose, prim["dims"], shape):
                center = corners.mean(axis=0)
                view = frame.eye - center
                n = normal
                if shape == "plane" and float(np.dot(n, view)) < 0.0:
                    n = -n  # planes are visible from both sides
                elif float(np.dot(n, view)) <= 0.0:
                    continue  # backface
                pts = []
                ok = True
                for corner in corners:
                    uv = frame.project(frame.to_cam(corner))
                    if uv is None:
                        ok = False
                        break
                    pts.append(uv)
                if not ok:
                    continue
                rgb = (_shade(color, n, ldir, lrgb, intensity) * 255).astype(np.uint8)
                _fill_triangle(img, [pts[0], pts[1], pts[2]], rgb)
                _fill_triangle(img, [pts[0], pts[2], pts[3]], rgb)
    return img


def write_ppm(img: np.ndarray, path: str) -> None:
    h, w = img.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(img.astype(np.uint8).tobytes())
