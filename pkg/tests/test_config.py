import math
import os

import pytest

from simkit import checkers as ck
from simkit.config import (
    ConfigError,
    MaterialParams,
    ScenarioConfig,
    apply_overrides,
    checker_from_tree,
    checker_to_tree,
    config_from_tree,
    config_to_tree,
    load_scenario,
    save_scenario,
    validate,
)

from conftest import scenario_path


def test_load_pick_cube_fields(pick_cube):
    cfg = pick_cube
    assert cfg.name == "pick_cube"
    (robot,) = cfg.robots
    assert robot.name == "arm"
    assert len(robot.default_dof_pos) == 9
    assert robot.ee_frame == "ee_link"
    assert robot.gripper_joints == ("finger_joint1", "finger_joint2")
    names = [o.name for o in cfg.objects]
    assert names == ["table", "cube"]
    table = cfg.objects[0]
    assert table.mass == 0 and table.shape == "box"
    assert isinstance(cfg.task.checker, ck.PositionWithin)
    assert cfg.task.checker.entity == "cube"
    assert [s.name for s in cfg.task.subtasks] == ["pick", "place"]
    assert cfg.task.subtasks[0].anchor == "cube"
    assert isinstance(cfg.task.subtasks[0].done, ck.PositionShift)
    assert cfg.task.subtasks[1].done is None
    (rng,) = cfg.task.object_ranges
    assert rng.entity == "cube"
    assert rng.lo == (0.38, 0.02, 0.02) and rng.hi == (0.52, 0.18, 0.02)
    assert cfg.cameras[0].pose.pos == (1.3, 0.0, 0.9)


def test_save_load_round_trip(pick_cube, tmp_path):
    out = str(tmp_path / "copy.scn")
    save_scenario(pick_cube, out)
    again = load_scenario(out)
    # every field survives; base_dir tracks the new location (excluded from ==)
    assert again == pick_cube
    assert again.base_dir == str(tmp_path)
    assert again.robots[0].asset == "../assets/arm9.urdf"


def test_tree_round_trip(pick_cube):
    tree = config_to_tree(pick_cube)
    back = config_from_tree(tree, base_dir=pick_cube.base_dir)
    assert back == pick_cube


def test_validate_accepts_all_fixture_scenarios():
    for name in ("pick_cube.scn", "door_open.scn", "two_spheres.scn", "box_drop.scn", "minimal_box.scn"):
        cfg = load_scenario(scenario_path(name))
        assert validate(cfg) == [], name


def test_checker_tree_round_trip():
    tree = {
        "all": [
            {"position_within": {"entity": "cube", "center": [0, 0, 0], "radius": 0.1}},
            {"any": [
                {"position_shift": {"entity": "cube", "axis": [0, 0, 1], "min_shift": 0.05}},
                {"joint_pos_threshold": {"entity": "door", "joint": "hinge", "threshold": 1.0, "direction": "le"}},
            ]},
        ]
    }
    checker = checker_from_tree(tree, "task.checker")
    assert checker_to_tree(checker) == tree


def test_checker_rejects_unknown_kind():
    with pytest.raises(ConfigError, match="unknown checker kind"):
        checker_from_tree({"position_inside": {}}, "task.checker")


def test_checker_needs_single_kind():
    tree = {"position_within": {"entity": "a", "center": [0, 0, 0], "radius": 1},
            "position_shift": {"entity": "a", "axis": [0, 0, 1], "min_shift": 0.1}}
    with pytest.raises(ConfigError, match="exactly one"):
        checker_from_tree(tree, "task.checker")


def test_unknown_field_is_an_error():
    with pytest.raises(ConfigError, match="unknown field 'grvity'"):
        config_from_tree({"name": "x", "sim": {"grvity": [0, 0, 0]}})


def test_look_at_and_quat_are_exclusive():
    tree = {"name": "x", "cameras": [{"name": "c", "pose": {"pos": [1, 0, 0], "quat": [1, 0, 0, 0], "look_at": [0, 0, 0]}}]}
    with pytest.raises(ConfigError, match="either quat or look_at"):
        config_from_tree(tree)


def test_overrides_scalar_and_vector(pick_cube):
    cfg = apply_overrides(pick_cube, [
        "task.episode_length=40",
        "sim.gravity=[0, 0, -1.62]",
        "objects.1.mass=0.25",
        "robots.0.default_dof_pos.1=0.5",
    ])
    assert cfg.task.episode_length == 40
    assert cfg.sim.gravity == (0.0, 0.0, -1.62)
    assert cfg.objects[1].mass == 0.25
    assert cfg.robots[0].default_dof_pos[1] == 0.5
    # original untouched
    assert pick_cube.task.episode_length == 150


def test_overrides_last_wins(pick_cube):
    cfg = apply_overrides(pick_cube, ["task.episode_length=40", "task.episode_length=75"])
    assert cfg.task.episode_length == 75


def test_override_bad_paths(pick_cube):
    with pytest.raises(ConfigError, match="unknown field"):
        apply_overrides(pick_cube, ["task.episod_length=40"])
    with pytest.raises(ConfigError, match="out of range"):
        apply_overrides(pick_cube, ["objects.7.mass=1"])
    with pytest.raises(ConfigError, match="dotted.path=value"):
        apply_overrides(pick_cube, ["task.episode_length"])


def test_validate_missing_asset(tmp_path):
    tree = {"name": "x", "robots": [{"name": "r", "asset": "nope.urdf", "default_dof_pos": []}]}
    cfg = config_from_tree(tree, base_dir=str(tmp_path))
    problems = validate(cfg)
    assert any("asset" in p for p in problems)


def test_validate_dof_length_and_ee_frame(pick_cube):
    cfg = apply_overrides(pick_cube, ["robots.0.default_dof_pos=[0, 0]"])
    assert any("dof count" in p for p in validate(cfg))
    cfg = apply_overrides(pick_cube, ["robots.0.ee_frame=no_such_body"])
    assert any("ee_frame" in p for p in validate(cfg))
    cfg = apply_overrides(pick_cube, ["robots.0.gripper_joints=[]"])
    assert validate(cfg) == []


def test_validate_object_problems(pick_cube):
    cfg = apply_overrides(pick_cube, ["objects.1.mass=-1", "objects.1.restitution=1.5"])
    problems = validate(cfg)
    assert any("mass" in p for p in problems)
    assert any("restitution" in p for p in problems)


def test_validate_duplicate_names():
    tree = {
        "name": "x",
        "objects": [
            {"name": "crate", "shape": "box", "dims": [0.1, 0.1, 0.1]},
            {"name": "crate", "shape": "sphere", "dims": [0.1]},
        ],
    }
    problems = validate(config_from_tree(tree))
    assert any("duplicate" in p for p in problems)


def test_validate_bad_shape_dims():
    tree = {"name": "x", "objects": [{"name": "o", "shape": "box", "dims": [0.1, 0.1]}]}
    assert any("dims" in p for p in validate(config_from_tree(tree)))
    tree = {"name": "x", "objects": [{"name": "o", "shape": "cone", "dims": [0.1]}]}
    assert any("shape" in p for p in validate(config_from_tree(tree)))


def test_validate_bad_quat(pick_cube):
    cfg = apply_overrides(pick_cube, ["objects.1.base_pose.quat=[1, 1, 0, 0]"])
    assert any("quat" in p for p in validate(cfg))


def test_empty_scenario_is_invalid():
    assert any("at least one" in p for p in validate(ScenarioConfig(name="void")))


def test_camera_look_at_becomes_pose(pick_cube):
    cam = pick_cube.cameras[0]
    # forward axis of the stored pose points from eye to the look-at target
    from simkit.transforms import quat_rotate, vec_normalize, vec_sub

    fwd = quat_rotate(cam.pose.quat, (1, 0, 0))
    expect = vec_normalize(vec_sub((0.4, 0.0, 0.1), (1.3, 0.0, 0.9)))
    assert max(abs(a - b) for a, b in zip(fwd, expect)) < 1e-12


def test_material_defaults():
    m = MaterialParams()
    assert m.base_color == (0.7, 0.7, 0.7)
    assert m.metallic == 0.0
