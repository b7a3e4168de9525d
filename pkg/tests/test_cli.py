import os
from dataclasses import replace

import pytest

from conftest import asset_path, scenario_path
from simkit.assets import parse_urdf
from simkit.cli import main
from simkit.config import RobotConfig, save_scenario
from simkit.state import load_trajectory, save_trajectory

PICK = scenario_path("pick_cube.scn")
SPHERES = scenario_path("two_spheres.scn")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# convert


def test_convert_writes_urdf(capsys, tmp_path):
    out = str(tmp_path / "arm9_from_mjcf.urdf")
    code, stdout, stderr = run(capsys, "convert", asset_path("arm9.xml"), out)
    assert code == 0
    assert f"wrote {out} (12 bodies, 9 dofs)" in stdout
    assert stderr == ""
    assert parse_urdf(out).dof_count == 9


def test_convert_surfaces_warnings(capsys, tmp_path):
    out = str(tmp_path / "tendon.urdf")
    code, _, stderr = run(capsys, "convert", asset_path("tendon.xml"), out)
    assert code == 0
    assert "WARN:" in stderr


def test_convert_failures(capsys, tmp_path):
    code, _, stderr = run(capsys, "convert", asset_path("arm9.xml"), str(tmp_path / "o.xml"))
    assert code == 1
    assert "only URDF output is supported" in stderr
    code, _, stderr = run(capsys, "convert", str(tmp_path / "ghost.urdf"),
                          str(tmp_path / "o.urdf"))
    assert code == 1
    assert stderr.startswith("error: ")


# ---------------------------------------------------------------------------
# collect / replay / augment / retarget round trips


@pytest.fixture(scope="module")
def demo_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("demos")
    code = main(["collect", PICK, "--count", "2", "--seed", "11", "--out", str(out)])
    assert code == 0
    return out


def test_collect_writes_demos(capsys, demo_dir):
    files = sorted(os.listdir(demo_dir))
    assert files == ["demo_0000.rvt", "demo_0001.rvt"]
    traj = load_trajectory(str(demo_dir / files[0]))
    assert traj.success
    assert traj.scenario_name == "pick_cube"


def test_collect_without_policy_fails(capsys, tmp_path):
    # box_drop has no pick-and-place goal, so every scripted attempt fails
    code, stdout, stderr = run(capsys, "collect", scenario_path("box_drop.scn"),
                               "--out", str(tmp_path / "d"))
    assert code == 1
    assert stdout == ""
    assert "collected 0 of 5 requested demos" in stderr


def test_replay_reports_success(capsys, demo_dir):
    code, stdout, _ = run(capsys, "replay", PICK, str(demo_dir / "demo_0000.rvt"),
                          "--backend", "kin")
    assert code == 0
    assert "success: True" in stdout
    divergence = [ln for ln in stdout.splitlines() if ln.startswith("final-state divergence")]
    assert divergence
    assert float(divergence[0].split()[-1]) < 1e-12


def test_replay_honors_overrides(capsys, demo_dir):
    code, _, stderr = run(capsys, "replay", PICK, str(demo_dir / "demo_0000.rvt"),
                          "--override", "task.episod_length=3")
    assert code == 2
    assert "unknown field" in stderr


def test_augment_writes_validated_episodes(capsys, demo_dir, tmp_path):
    out = tmp_path / "aug"
    code, stdout, _ = run(capsys, "augment", PICK,
                          str(demo_dir / "demo_0000.rvt"), str(demo_dir / "demo_0001.rvt"),
                          "--count", "6", "--seed", "3", "--out", str(out))
    assert code == 0
    files = sorted(os.listdir(out))
    assert files and all(f.startswith("aug_") and f.endswith(".rvt") for f in files)
    assert f"accepted {len(files)} of 6 attempts" in stdout
    traj = load_trajectory(str(out / files[0]))
    assert traj.success
    assert traj.extras["seed"] == "3"


def test_retarget_maps_demo_to_new_robot(capsys, demo_dir, tmp_path, pick_cube):
    arm8 = RobotConfig(
        name="arm8",
        asset=asset_path("arm8.urdf"),
        default_dof_pos=(0.0, 0.5, 0.7, 0.0, 0.9, 0.0, 0.035, 0.035),
        ee_frame="ee_link",
        gripper_joints=("grip_a", "grip_b"),
    )
    dst = str(tmp_path / "pick_cube_arm8.scn")
    save_scenario(replace(pick_cube, robots=(arm8,)), dst)
    out = str(tmp_path / "retargeted.rvt")
    code, stdout, _ = run(capsys, "retarget", PICK, str(demo_dir / "demo_0000.rvt"), dst,
                          "--out", out, "--check")
    assert code == 0
    assert "robot arm8" in stdout
    assert "replay success: True" in stdout
    traj = load_trajectory(out)
    assert set(traj.actions[0]) == {"arm8"}


def test_retarget_unknown_robot_is_config_error(capsys, demo_dir, tmp_path):
    code, _, stderr = run(capsys, "retarget", PICK, str(demo_dir / "demo_0000.rvt"), PICK,
                          "--robot", "lefty", "--out", str(tmp_path / "o.rvt"))
    assert code == 2
    assert "no robot named 'lefty'" in stderr


# ---------------------------------------------------------------------------
# bench-split


def test_bench_split_lists_all_pools(capsys):
    code, stdout, _ = run(capsys, "bench-split")
    assert code == 0
    lines = stdout.strip().splitlines()
    assert lines == [
        "camera-poses: total 59 train 53 test 6",
        "ground-materials: total 150 train 135 test 15",
        "light-rigs: total 40 train 36 test 4",
        "table-materials: total 300 train 270 test 30",
        "wall-materials: total 150 train 135 test 15",
    ]


def test_bench_split_single_pool(capsys):
    code, stdout, _ = run(capsys, "bench-split", "--pool", "camera-poses")
    assert code == 0
    assert stdout.strip() == "camera-poses: total 59 train 53 test 6"
    code, _, stderr = run(capsys, "bench-split", "--pool", "bogus")
    assert code == 2
    assert "unknown pool 'bogus'" in stderr


# ---------------------------------------------------------------------------
# probe-conservation


def test_probe_conservation_reports_drift(capsys, tmp_path):
    csv = str(tmp_path / "probe.csv")
    code, stdout, _ = run(capsys, "probe-conservation", SPHERES,
                          "--steps", "50", "--backend", "dyn",
                          "--vel", "sphere_a=1,0,0", "--vel", "sphere_b=-1,0,0",
                          "--spin", "sphere_a=0,0,2", "--csv", csv)
    assert code == 0
    assert "steps: 50" in stdout
    for line in stdout.splitlines():
        if "rel drift" in line:
            assert float(line.split()[-1]) < 1e-9
    with open(csv) as f:
        header = f.readline().strip()
    assert header.startswith("step,")
    assert len(open(csv).readlines()) == 52  # header + initial sample + 50 steps


def test_probe_conservation_rejects_bad_kick(capsys):
    code, _, stderr = run(capsys, "probe-conservation", SPHERES, "--vel", "sphere_a=1,2")
    assert code == 2
    assert "expected NAME=X,Y,Z" in stderr


# ---------------------------------------------------------------------------
# exit codes and parser plumbing


def test_missing_scenario_is_config_error(capsys, tmp_path):
    code, _, stderr = run(capsys, "replay", str(tmp_path / "ghost.scn"), "x.rvt")
    assert code == 2
    assert stderr.startswith("error: ")


def test_unknown_subcommand_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_teleop_serve_parser_defaults():
    from simkit.cli import build_parser, cmd_teleop_serve

    args = build_parser().parse_args(["teleop-serve", "x.scn"])
    assert args.fn is cmd_teleop_serve
    assert args.port == 8571
    assert args.static is None and args.record is None
