import math
import struct
import zlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simkit.state import (
    EntityState,
    SceneState,
    StateQuery,
    Trajectory,
    TrajectoryFormatError,
    apply_query,
    deserialize_trajectory,
    diff_states,
    load_trajectory,
    merge_states,
    save_trajectory,
    serialize_trajectory,
    single_env_state,
)


def sample_trajectory():
    init = SceneState(envs=(
        {
            "arm": EntityState(
                pos=(0.0, 0.0, 0.0),
                rot=(1.0, 0.0, 0.0, 0.0),
                dof_pos=(0.1, -0.2, 0.3),
                dof_vel=(0.0, 0.0, 0.0),
                dof_target=(0.1, -0.2, 0.3),
            ),
            "cube": EntityState(pos=(0.4, 0.1, 0.02), rot=(1.0, 0.0, 0.0, 0.0),
                                lin_vel=(0.0, 0.0, 0.0), ang_vel=(0.0, 0.0, 0.0)),
        },
        {
            "arm": EntityState(dof_pos=(0.5, 0.5, 0.5)),
            "cube": EntityState(pos=(-0.4, 0.0, 0.02)),
        },
    ))
    actions = [
        {"arm": (0.1, 0.2, 0.3)},
        {"arm": (0.15, 0.25, 0.35)},
        {},
    ]
    states = [init, SceneState(envs=({"arm": EntityState(dof_pos=(1.0, 2.0, 3.0))},
                                     {"arm": EntityState(dof_pos=(4.0, 5.0, 6.0))}))]
    return Trajectory(
        scenario_name="pick_cube",
        init_state=init,
        actions=actions,
        states=states,
        success=True,
        extras={"seed": "11", "backend": "dyn"},
    )


def test_round_trip_preserves_trajectory():
    traj = sample_trajectory()
    back = deserialize_trajectory(serialize_trajectory(traj))
    assert back == traj


def test_serialization_is_bit_stable():
    data = serialize_trajectory(sample_trajectory())
    assert serialize_trajectory(deserialize_trajectory(data)) == data


def test_file_round_trip(tmp_path):
    traj = sample_trajectory()
    path = str(tmp_path / "demo.rvt1")
    save_trajectory(traj, path)
    with open(path, "rb") as f:
        assert f.read(4) == b"RVT1"
    assert load_trajectory(path) == traj


def test_states_none_and_empty_are_distinct():
    traj = sample_trajectory()
    traj.states = None
    assert deserialize_trajectory(serialize_trajectory(traj)).states is None
    traj.states = []
    assert deserialize_trajectory(serialize_trajectory(traj)).states == []


def test_magic_and_length_errors():
    with pytest.raises(TrajectoryFormatError, match="too short"):
        deserialize_trajectory(b"RVT1")
    data = serialize_trajectory(sample_trajectory())
    with pytest.raises(TrajectoryFormatError, match="bad magic"):
        deserialize_trajectory(b"XXXX" + data[4:])


def test_crc_detects_corruption():
    data = bytearray(serialize_trajectory(sample_trajectory()))
    data[20] ^= 0xFF
    with pytest.raises(TrajectoryFormatError, match="CRC mismatch"):
        deserialize_trajectory(bytes(data))


def test_unknown_major_version_rejected():
    data = bytearray(serialize_trajectory(sample_trajectory()))
    struct.pack_into("<H", data, 4, 2)  # bump major
    body = bytes(data[:-4])
    data[-4:] = struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
    with pytest.raises(TrajectoryFormatError, match="major version 2"):
        deserialize_trajectory(bytes(data))


def test_unknown_trailing_sections_are_skipped():
    traj = sample_trajectory()
    data = serialize_trajectory(traj)
    extra = b"future-minor-version-payload"
    body = data[:-4] + struct.pack("<I", len(extra)) + extra
    patched = body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
    assert deserialize_trajectory(patched) == traj


entity_states = st.builds(
    EntityState,
    pos=st.one_of(st.none(), st.tuples(*[st.floats(allow_nan=False, width=64)] * 3)),
    rot=st.one_of(st.none(), st.tuples(*[st.floats(allow_nan=False, width=64)] * 4)),
    dof_pos=st.one_of(st.none(), st.tuples(st.floats(allow_nan=False), st.floats(allow_nan=False))),
)


@settings(max_examples=60, deadline=None)
@given(st.dictionaries(st.text(min_size=1, max_size=8), entity_states, max_size=3),
       st.booleans(), st.dictionaries(st.text(max_size=6), st.text(max_size=6), max_size=2))
def test_round_trip_any_payload(entities, success, extras):
    traj = Trajectory("fuzz", single_env_state(entities), actions=[], states=None,
                      success=success, extras=extras)
    assert deserialize_trajectory(serialize_trajectory(traj)) == traj


def test_merge_overlay_fields_win():
    base = single_env_state({
        "cube": EntityState(pos=(0.0, 0.0, 0.0), rot=(1.0, 0.0, 0.0, 0.0), lin_vel=(1.0, 0.0, 0.0)),
    })
    overlay = single_env_state({
        "cube": EntityState(pos=(9.0, 9.0, 9.0)),
        "extra": EntityState(dof_pos=(0.5,)),
    })
    merged = merge_states(base, overlay)
    cube = merged.get("cube")
    assert cube.pos == (9.0, 9.0, 9.0)  # overlay wins
    assert cube.rot == (1.0, 0.0, 0.0, 0.0)  # base survives where overlay is None
    assert cube.lin_vel == (1.0, 0.0, 0.0)
    assert merged.get("extra").dof_pos == (0.5,)
    # inputs untouched
    assert base.get("cube").pos == (0.0, 0.0, 0.0)
    assert "extra" not in base.entities()


def test_merge_env_count_mismatch():
    one = single_env_state({})
    two = SceneState(envs=({}, {}))
    with pytest.raises(ValueError, match="1 and 2 envs"):
        merge_states(one, two)


def test_apply_query_filters():
    state = single_env_state({
        "arm": EntityState(pos=(1.0, 2.0, 3.0), dof_pos=(0.1, 0.2)),
        "cube": EntityState(pos=(4.0, 5.0, 6.0)),
    })
    assert apply_query(state, None) is state
    assert apply_query(state, StateQuery()) is state

    only_arm = apply_query(state, StateQuery(entities=("arm",)))
    assert set(only_arm.entities()) == {"arm"}

    only_pos = apply_query(state, StateQuery(fields=("pos",)))
    arm = only_pos.get("arm")
    assert arm.pos == (1.0, 2.0, 3.0)
    assert arm.dof_pos is None

    both = apply_query(state, StateQuery(entities=("cube",), fields=("pos",)))
    assert set(both.entities()) == {"cube"}
    assert both.get("cube").pos == (4.0, 5.0, 6.0)


def test_diff_reports_worst_case_per_entity():
    a = single_env_state({
        "cube": EntityState(pos=(0.0, 0.0, 0.0), rot=(1.0, 0.0, 0.0, 0.0), dof_pos=(0.0, 0.0)),
    })
    half = math.sqrt(0.5)
    b = single_env_state({
        "cube": EntityState(pos=(3.0, 4.0, 0.0), rot=(half, half, 0.0, 0.0), dof_pos=(0.1, -0.3)),
    })
    report = diff_states(a, b)
    d = report.entities["cube"]
    assert abs(d.pos_err - 5.0) < 1e-12  # euclidean distance
    assert abs(d.rot_err - math.pi / 2) < 1e-9  # quarter turn about x
    assert abs(d.dof_err - 0.3) < 1e-12  # max abs component
    assert abs(report.max_err - 5.0) < 1e-12


def test_diff_is_symmetric_and_zero_on_self():
    a = sample_trajectory().init_state
    self_report = diff_states(a, a)
    assert self_report.max_err == 0.0
    b = SceneState(envs=(
        {**a.envs[0], "cube": EntityState(pos=(0.5, 0.1, 0.02), rot=(1.0, 0.0, 0.0, 0.0))},
        a.envs[1],
    ))
    ab, ba = diff_states(a, b), diff_states(b, a)
    assert ab.entities["cube"] == ba.entities["cube"]


def test_diff_none_fields_contribute_zero():
    a = single_env_state({"x": EntityState(pos=(1.0, 1.0, 1.0))})
    b = single_env_state({"x": EntityState(dof_pos=(5.0,))})
    assert diff_states(a, b).max_err == 0.0


def test_diff_rejects_mismatched_shapes():
    a = single_env_state({"x": EntityState()})
    with pytest.raises(ValueError, match="env counts"):
        diff_states(a, SceneState(envs=({}, {})))
    with pytest.raises(ValueError, match="only in a"):
        diff_states(a, single_env_state({"y": EntityState()}))
    with pytest.raises(ValueError, match="length"):
        diff_states(single_env_state({"x": EntityState(dof_pos=(1.0,))}),
                    single_env_state({"x": EntityState(dof_pos=(1.0, 2.0))}))


def test_scene_state_accessors():
    state = sample_trajectory().init_state
    assert state.num_envs == 2
    assert state.get("arm", env=1).dof_pos == (0.5, 0.5, 0.5)
    with pytest.raises(KeyError, match="no entity 'ghost'"):
        state.get("ghost")
