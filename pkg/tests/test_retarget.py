import math

import numpy as np
import pytest

from simkit.config import RobotConfig
from simkit.demos import plan_pick_place
from simkit.envs import replay_trajectory
from simkit.kinematics import forward_kinematics
from simkit.retarget import (
    EePath,
    EeWaypoint,
    NoConvergence,
    ee_path_from_trajectory,
    ik_solve,
    retarget_trajectory,
    solve_ee_path,
)
from simkit.transforms import Pose, quat_from_axis_angle

from conftest import asset_path


def planar_targets():
    # (q1, q2) pairs whose ee poses drive the solver; all comfortably reachable
    return [(0.6, 0.8), (-0.9, 1.3), (1.2, -0.7), (0.3, 2.0), (-1.5, -0.9)]


@pytest.mark.parametrize("q1,q2", planar_targets())
def test_two_link_recovers_analytic_solution(planar2, q1, q2):
    x = math.cos(q1) + math.cos(q1 + q2)
    y = math.sin(q1) + math.sin(q1 + q2)
    target = Pose(pos=(x, y, 0.0), quat=quat_from_axis_angle((0, 0, 1), q1 + q2))
    q = ik_solve(planar2, Pose(), "ee_link", target, (0.0, 0.1),
                 pos_tol=1e-8, rot_tol=1e-8)
    # closed form from the law of cosines, both elbow branches
    r2 = x * x + y * y
    c2 = (r2 - 2.0) / 2.0
    e2 = math.acos(max(-1.0, min(1.0, c2)))
    branches = []
    for elbow in (e2, -e2):
        shoulder = math.atan2(y, x) - math.atan2(math.sin(elbow), 1.0 + math.cos(elbow))
        branches.append((shoulder, elbow))
    best = min(
        max(abs(math.remainder(q[0] - b[0], math.tau)), abs(math.remainder(q[1] - b[1], math.tau)))
        for b in branches
    )
    assert best < 1e-6


def test_ik_on_six_dof_arm_hits_sampled_targets(arm6):
    rng = np.random.default_rng(4)
    lo = np.array([arm6.joint(j).limits[0] for j in arm6.actuated_order])
    hi = np.array([arm6.joint(j).limits[1] for j in arm6.actuated_order])
    q_prev = (lo + hi) / 2.0
    solved = 0
    for _ in range(50):
        q_true = rng.uniform(lo * 0.8, hi * 0.8)
        target = forward_kinematics(arm6, Pose(), q_true)["ee_link"]
        try:
            q = ik_solve(arm6, Pose(), "ee_link", target, q_prev)
        except NoConvergence:
            continue
        got = forward_kinematics(arm6, Pose(), q)["ee_link"]
        assert np.linalg.norm(np.subtract(got.pos, target.pos)) < 1e-3
        solved += 1
        q_prev = q
    assert solved >= 49


def test_ik_is_deterministic(arm6):
    target = forward_kinematics(arm6, Pose(), [0.4, -0.6, 1.0, 0.3, 0.8, -0.2])["ee_link"]
    q0 = np.zeros(6)
    a = ik_solve(arm6, Pose(), "ee_link", target, q0)
    b = ik_solve(arm6, Pose(), "ee_link", target, q0)
    assert np.array_equal(a, b)


def test_ik_leaves_off_chain_joints_alone(arm9):
    q0 = np.array([0.0, 0.9, 0.0, 1.6, 0.0, 0.64, 0.0, 0.013, 0.027])
    target = forward_kinematics(arm9, Pose(), [0.3, 0.8, 0.1, 1.5, 0.0, 0.7, 0.0, 0.0, 0.0])["ee_link"]
    q = ik_solve(arm9, Pose(), "ee_link", target, q0)
    # the finger joints have zero Jacobian columns for ee_link
    assert q[7] == q0[7]
    assert q[8] == q0[8]


def test_ik_converged_start_returns_immediately(arm6):
    q0 = np.array([0.4, -0.6, 1.0, 0.3, 0.8, -0.2])
    target = forward_kinematics(arm6, Pose(), q0)["ee_link"]
    q = ik_solve(arm6, Pose(), "ee_link", target, q0)
    assert np.array_equal(q, q0)


def test_ik_unreachable_raises_with_diagnostics(arm6):
    target = Pose(pos=(10.0, 0.0, 0.0))
    with pytest.raises(NoConvergence) as exc_info:
        ik_solve(arm6, Pose(), "ee_link", target, np.zeros(6), restarts=2, max_iters=40)
    err = exc_info.value
    assert err.pos_err > 1.0
    assert err.iterations == 40
    assert "did not converge" in str(err)


def test_ik_validates_q0_shape(arm6):
    with pytest.raises(ValueError, match="expected \\(6,\\)"):
        ik_solve(arm6, Pose(), "ee_link", Pose(), np.zeros(4))


def test_ee_path_reads_actions_through_fk(pick_cube, source_demos, arm9):
    traj = source_demos[0]
    path = ee_path_from_trajectory(pick_cube, traj)
    assert path.robot == "arm"
    assert len(path.waypoints) == len(traj.actions)
    fractions = [wp.gripper_open for wp in path.waypoints]
    assert fractions[0] == 1.0
    assert min(fractions) == 0.0
    assert fractions[-1] == 1.0
    # each waypoint is literally the fk of that action's targets
    mid = len(traj.actions) // 2
    named = dict(zip(arm9.actuated_order, traj.actions[mid]["arm"]))
    expect = forward_kinematics(arm9, pick_cube.robots[0].base_pose, named)["ee_link"]
    got = path.waypoints[mid].pose
    assert np.allclose(got.pos, expect.pos, atol=1e-12)


def test_ee_path_error_cases(pick_cube, source_demos):
    traj = source_demos[0]
    with pytest.raises(KeyError, match="no robot named 'other'"):
        ee_path_from_trajectory(pick_cube, traj, robot="other")
    bad = traj.actions[0].copy()
    broken = type(traj)(scenario_name=traj.scenario_name, init_state=traj.init_state,
                        actions=[{"arm": bad["arm"][:4]}])
    with pytest.raises(ValueError, match="action has 4 dofs"):
        ee_path_from_trajectory(pick_cube, broken)


def test_solve_ee_path_warm_starts(arm6):
    cfg = RobotConfig(name="probe", asset=arm6, ee_frame="ee_link",
                      default_dof_pos=(0.0, -0.4, 0.8, 0.0, 0.5, 0.0))
    qs = [np.array([0.1 * i, -0.4, 0.8, 0.0, 0.5, 0.0]) for i in range(6)]
    waypoints = [EeWaypoint(pose=forward_kinematics(arm6, Pose(), q)["ee_link"], gripper_open=1.0)
                 for q in qs]
    sols = solve_ee_path(arm6, cfg, EePath(robot="probe", waypoints=waypoints))
    assert len(sols) == 6
    for sol, wp in zip(sols, waypoints):
        got = forward_kinematics(arm6, Pose(), sol)["ee_link"]
        assert np.linalg.norm(np.subtract(got.pos, wp.pose.pos)) < 1e-3


def test_retargeted_demo_succeeds_on_new_arm(pick_cube, source_demos):
    arm8 = RobotConfig(
        name="arm8",
        asset=asset_path("arm8.urdf"),
        default_dof_pos=(0.0, 0.5, 0.7, 0.0, 0.9, 0.0, 0.035, 0.035),
        ee_frame="ee_link",
        gripper_joints=("grip_a", "grip_b"),
    )
    traj = source_demos[0]
    new_traj, new_cfg = retarget_trajectory(pick_cube, traj, arm8)
    assert set(new_traj.actions[0]) == {"arm8"}
    assert len(new_traj.actions) == len(traj.actions)
    assert [r.name for r in new_cfg.robots] == ["arm8"]
    result = replay_trajectory(new_cfg, new_traj, backend="kin")
    assert result.success
