"""simkit: a desk-scale robot simulation toolkit.

One scenario description drives interchangeable simulation backends behind
a common handler API, with a gym-style environment on top.  Around that
core: asset conversion between URDF and MJCF, trajectory recording and
replay, demo augmentation with domain randomization, cross-embodiment
retargeting, and browser teleoperation over a plain-text WebSocket
protocol.
"""

from .assets import (
    AssetError,
    CanonicalAsset,
    MalformedAsset,
    UnsupportedJointKind,
    convert_mjcf_to_urdf,
    export_urdf,
    load_asset,
    parse_mjcf,
    parse_urdf,
)
from .backends import (
    BACKENDS,
    BackendError,
    ConservationSample,
    DofLengthMismatch,
    Handler,
    InvalidState,
    UnknownEntity,
    conservation_probe,
    launch,
    resolve_backend_name,
)
from .checkers import (
    AllOf,
    AnyOf,
    Callback,
    JointPosThreshold,
    PositionShift,
    PositionWithin,
    RelativePose,
    check_success,
)
from .config import (
    CameraConfig,
    ConfigError,
    LightConfig,
    MaterialParams,
    ObjectConfig,
    ObjectRange,
    RobotConfig,
    ScenarioConfig,
    SimParams,
    SubtaskSpec,
    TaskConfig,
    apply_overrides,
    load_scenario,
    parse_scenario,
    save_scenario,
    serialize_scenario,
    validate,
)
from .envs import Env, EpisodeOver, Observation, StepResult, hybrid_env, replay_trajectory
from .state import (
    EntityState,
    SceneState,
    StateQuery,
    Trajectory,
    TrajectoryFormatError,
    diff_states,
    load_trajectory,
    merge_states,
    save_trajectory,
    single_env_state,
)
from .transforms import Pose

__version__ = "0.1.0"

__all__ = [
    "AllOf",
    "AnyOf",
    "AssetError",
    "BACKENDS",
    "BackendError",
    "Callback",
    "CameraConfig",
    "CanonicalAsset",
    "ConfigError",
    "ConservationSample",
    "DofLengthMismatch",
    "EntityState",
    "Env",
    "EpisodeOver",
    "Handler",
    "InvalidState",
    "JointPosThreshold",
    "LightConfig",
    "MalformedAsset",
    "MaterialParams",
    "ObjectConfig",
    "ObjectRange",
    "Observation",
    "Pose",
    "PositionShift",
    "PositionWithin",
    "RelativePose",
    "RobotConfig",
    "ScenarioConfig",
    "SceneState",
    "SimParams",
    "StateQuery",
    "StepResult",
    "SubtaskSpec",
    "TaskConfig",
    "Trajectory",
    "TrajectoryFormatError",
    "UnknownEntity",
    "UnsupportedJointKind",
    "apply_overrides",
    "check_success",
    "conservation_probe",
    "convert_mjcf_to_urdf",
    "diff_states",
    "export_urdf",
    "hybrid_env",
    "launch",
    "load_asset",
    "load_scenario",
    "load_trajectory",
    "merge_states",
    "parse_mjcf",
    "parse_scenario",
    "parse_urdf",
    "replay_trajectory",
    "resolve_backend_name",
    "save_scenario",
    "save_trajectory",
    "serialize_scenario",
    "single_env_state",
    "validate",
]
