import math
from dataclasses import replace

import numpy as np
import pytest

from simkit.backends import RenderError, launch
from simkit.backends.render import (
    BACKGROUND,
    kelvin_to_rgb,
    light_direction,
    render_scene,
    write_ppm,
)
from simkit.config import CameraConfig, LightConfig, MaterialParams
from simkit.transforms import Pose, look_at_pose


def camera_at(pos, target, width=96, height=72, fov=50.0):
    return CameraConfig(name="cam", pose=look_at_pose(pos, target), vertical_fov=fov,
                        width=width, height=height)


def sphere_prim(pos, radius=0.2, color=(0.9, 0.2, 0.2)):
    return {"shape": "sphere", "pose": Pose(pos=pos), "dims": (radius,), "color": color}


def test_empty_scene_is_solid_background():
    img = render_scene([], camera_at((2, 0, 1), (0, 0, 0)))
    assert img.shape == (72, 96, 3)
    assert img.dtype == np.uint8
    assert np.all(img.reshape(-1, 3) == BACKGROUND)


def test_sphere_lands_in_frame_center():
    cam = camera_at((2, 0, 0), (0, 0, 0))
    img = render_scene([sphere_prim((0, 0, 0))], cam)
    h, w = img.shape[:2]
    center = img[h // 2, w // 2]
    assert tuple(center) != BACKGROUND
    assert center[0] > center[1] and center[0] > center[2]  # red sphere
    assert tuple(img[2, 2]) == BACKGROUND  # corner untouched


def test_offset_sphere_lands_off_center():
    cam = camera_at((2, 0, 0), (0, 0, 0))
    # looking down -x, the camera's left axis is world -y, so a +y sphere
    # shows up in the right half of the frame
    img = render_scene([sphere_prim((0, 0.4, 0))], cam)
    h, w = img.shape[:2]
    painted = np.argwhere(np.any(img != BACKGROUND, axis=2))
    assert len(painted)
    assert painted[:, 1].mean() > w / 2
    assert tuple(img[h // 2, w // 2]) == BACKGROUND


def test_behind_camera_is_invisible():
    cam = camera_at((2, 0, 0), (0, 0, 0))
    img = render_scene([sphere_prim((4, 0, 0))], cam)
    assert np.all(img.reshape(-1, 3) == BACKGROUND)


def test_nearer_prim_paints_over_farther():
    cam = camera_at((3, 0, 0), (0, 0, 0))
    near = sphere_prim((1, 0, 0), radius=0.15, color=(0.1, 0.9, 0.1))
    far = sphere_prim((-1, 0, 0), radius=0.3, color=(0.1, 0.1, 0.9))
    img_ab = render_scene([near, far], cam)
    img_ba = render_scene([far, near], cam)
    assert np.array_equal(img_ab, img_ba)  # painter's order, not input order
    h, w = img_ab.shape[:2]
    center = img_ab[h // 2, w // 2]
    assert center[1] > center[2]  # green wins in front


def test_rendering_is_deterministic(pick_cube):
    h = launch(pick_cube, backend="dyn")
    a = h.render()
    b = h.render()
    assert np.array_equal(a, b)
    assert a.shape == (240, 320, 3)
    assert np.any(a.reshape(-1, 3) != BACKGROUND)  # the table is in view
    h.close()


def test_material_color_reaches_pixels(pick_cube):
    h = launch(pick_cube, backend="dyn")
    baseline = h.render(camera="front")
    h.close()
    objects = tuple(
        replace(o, material=MaterialParams(base_color=(0.05, 0.9, 0.05))) if o.name == "cube" else o
        for o in pick_cube.objects
    )
    h = launch(replace(pick_cube, objects=objects), backend="dyn")
    changed = h.render(camera="front")
    h.close()
    assert not np.array_equal(baseline, changed)


def test_light_intensity_brightens_image():
    cam = camera_at((2, 0, 0), (0, 0, 0))
    prim = [sphere_prim((0, 0, 0), color=(0.5, 0.5, 0.5))]
    dim = render_scene(prim, cam, [LightConfig(intensity=0.2)])
    bright = render_scene(prim, cam, [LightConfig(intensity=1.0)])
    mask = np.any(dim != BACKGROUND, axis=2)
    assert bright[mask].astype(int).sum() > dim[mask].astype(int).sum()


def test_render_errors(pick_cube, two_spheres):
    h = launch(pick_cube, backend="kin")
    with pytest.raises(RenderError, match="no camera named"):
        h.render(camera="rear")
    h.close()
    h = launch(two_spheres, backend="kin")  # fixture has no cameras
    with pytest.raises(RenderError, match="no cameras"):
        h.render()
    h.close()


def test_write_ppm(tmp_path):
    img = np.zeros((4, 6, 3), dtype=np.uint8)
    img[:, :] = (10, 20, 30)
    path = str(tmp_path / "frame.ppm")
    write_ppm(img, path)
    with open(path, "rb") as f:
        data = f.read()
    assert data.startswith(b"P6\n6 4\n255\n")
    assert len(data) == len(b"P6\n6 4\n255\n") + 4 * 6 * 3
    assert data[-3:] == bytes((10, 20, 30))


def test_light_direction_conventions():
    assert np.allclose(light_direction(LightConfig(polar=0.0)), (0, 0, 1))
    d = light_direction(LightConfig(polar=90.0, azimuth=0.0))
    assert np.allclose(d, (1, 0, 0), atol=1e-12)
    d = light_direction(LightConfig(polar=45.0, azimuth=90.0))
    assert np.allclose(d, (0, math.sqrt(0.5), math.sqrt(0.5)), atol=1e-12)
    assert np.allclose(light_direction(LightConfig(kind="cylinder_array")), (0, 0, 1))


def test_kelvin_tint_shifts_with_temperature():
    warm = kelvin_to_rgb(2500.0)
    neutral = kelvin_to_rgb(6600.0)
    cool = kelvin_to_rgb(10000.0)
    assert warm[2] < neutral[2]  # warm light lacks blue
    assert cool[0] < 1.0 and cool[2] == 1.0  # cool light is blue-heavy
    assert np.all(neutral > 0.9)  # near-white at the crossover
    # out-of-range temperatures clamp instead of exploding
    assert np.allclose(kelvin_to_rgb(100.0), kelvin_to_rgb(1500.0))
    assert np.allclose(kelvin_to_rgb(90000.0), kelvin_to_rgb(12000.0))
