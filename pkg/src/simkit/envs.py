"""Gym-style episode wrapper over handlers.

step follows the fixed order: write the action targets, advance physics,
read physics states, then build the observation.  With a separate observation
backend (the hybrid configuration) the physics states are pushed into it
first and the observation — state view and optional image — is taken from
that backend, while reward and success always come from the physics states.

Success latches once true; termination is success or time-out; stepping a
terminated env raises EpisodeOver.  Reward is the success indicator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backends import Handler, launch
from .checkers import check_success
from .config import ScenarioConfig
from .state import Action, EntityState, SceneState, Trajectory, merge_states

DEFAULT_EPISODE_LENGTH = 100


class EpisodeOver(Exception):
    pass


@dataclass
class Observation:
    state: SceneState
    images: dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class StepResult:
    observation: Observation
    reward: tuple[float, ...]
    success: tuple[bool, ...]
    termination: tuple[bool, ...]
    time_out: tuple[bool, ...]
    extra: dict = field(default_factory=dict)


class Env:
    """Episode logic for one scenario on one physics backend.

    obs_backend selects the hybrid configuration: physics states are mirrored
    into that backend every step and observations come from it.
    """

    def __init__(
        self,
        config: ScenarioConfig,
        backend: str | None = None,
        obs_backend: str | None = None,
        num_envs: int = 1,
        render_images: bool = False,
    ):
        self.config = config
        self.handler: Handler = launch(config, backend=backend, num_envs=num_envs)
        self.obs_handler: Handler = (
            launch(config, backend=obs_backend, num_envs=num_envs)
            if obs_backend is not None
            else self.handler
        )
        self.num_envs = num_envs
        self.render_images = render_images
        self._robot_names = [r.name for r in config.robots]
        self._dof_names = self.handler.dof_names()
        self._episode_length = config.task.episode_length
        self._counts = [0] * num_envs
        self._success = [False] * num_envs
        self._terminated = [False] * num_envs
        self._init_state: SceneState = self.handler.initial_state()

    @property
    def hybrid(self) -> bool:
        return self.obs_handler is not self.handler

    def reset(self, env_indices: list[int] | None = None) -> Observation:
        indices = list(range(self.num_envs)) if env_indices is None else list(env_indices)
        restore = SceneState(envs=tuple(self._init_state.envs[i] for i in indices))
        self.handler.set_states(restore, env_indices=indices)
        for i in indices:
            self._counts[i] = 0
            self._success[i] = False
            self._terminated[i] = False
        phys = self.handler.get_states()
        return self._observe(phys)

    def step(self, action: "Action | list[Action]") -> StepResult:
        for i, done in enumerate(self._terminated):
            if done:
                raise EpisodeOver(f"env {i} already terminated; reset before stepping")
        actions = action if isinstance(action, list) else [action] * self.num_envs
        if len(actions) != self.num_envs:
            raise ValueError(f"got {len(actions)} actions for {self.num_envs} envs")

        self.handler.set_states(self._action_state(actions))
        self.handler.step()
        phys = self.handler.get_states()

        rewards, successes, terms, touts = [], [], [], []
        for i in range(self.num_envs):
            self._counts[i] += 1
            if self.config.task.checker is not None and not self._success[i]:
                self._success[i] = check_success(
                    self.config.task.checker,
                    phys,
                    init_state=self._init_state,
                    env=i,
                    dof_names=self._dof_names,
                )
            time_out = self._counts[i] >= self._episode_length
            term = self._success[i] or time_out
            self._terminated[i] = term
            successes.append(self._success[i])
            terms.append(term)
            touts.append(time_out)
            rewards.append(1.0 if self._success[i] else 0.0)

        return StepResult(
            observation=self._observe(phys),
            reward=tuple(rewards),
            success=tuple(successes),
            termination=tuple(terms),
            time_out=tuple(touts),
            extra=self.handler.get_extra(),
        )

    def _action_state(self, actions: list[Action]) -> SceneState:
        envs = []
        for act in actions:
            env: dict[str, EntityState] = {}
            for robot, dof in act.items():
                env[robot] = EntityState(dof_target=tuple(float(v) for v in dof))
            envs.append(env)
        return SceneState(envs=tuple(envs))

    def _observe(self, phys: SceneState) -> Observation:
        if self.hybrid:
            self.obs_handler.set_states(phys)
            state = self.obs_handler.get_states()
        else:
            state = phys
        images: dict[str, np.ndarray] = {}
        if self.render_images and self.config.cameras:
            for cam in self.config.cameras:
                images[cam.name] = self.obs_handler.render(camera=cam.name)
        return Observation(state=state, images=images)

    @property
    def physics_states(self) -> SceneState:
        return self.handler.get_states()

    def init_state(self) -> SceneState:
        return self._init_state

    def dof_names(self) -> dict[str, tuple[str, ...]]:
        return dict(self._dof_names)

    def close(self) -> None:
        self.handler.close()
        if self.hybrid:
            self.obs_handler.close()


def hybrid_env(
    config: ScenarioConfig,
    physics: str = "dyn",
    renderer: str = "kin",
    num_envs: int = 1,
    render_images: bool = False,
) -> Env:
    """Physics from one backend, observations through another."""
    return Env(
        config,
        backend=physics,
        obs_backend=renderer,
        num_envs=num_envs,
        render_images=render_images,
    )


@dataclass
class ReplayResult:
    success: bool
    states: list[SceneState]
    final_state: SceneState


def replay_trajectory(
    config: ScenarioConfig,
    traj: Trajectory,
    backend: str | None = None,
    handler: Handler | None = None,
    record_states: bool = True,
) -> ReplayResult:
    """Drive a recorded demo through a fresh handler and re-evaluate success.

    Replays run below the episode wrapper so every recorded action executes
    even past the nominal horizon.  The trajectory's init state is merged over
    the scenario initial state, so partial recordings still restore cleanly.
    """
    own = handler is None
    h = handler if handler is not None else launch(config, backend=backend)
    if h.num_envs != 1:
        raise ValueError("replay needs a single-env handler")
    try:
        init = merge_states(h.initial_state(), traj.init_state)
        h.set_states(init)
        dof_names = h.dof_names()
        checker = config.task.checker
        success = False
        states: list[SceneState] = []
        for action in traj.actions:
            targets = {
                name: EntityState(dof_target=tuple(dof)) for name, dof in action.items()
            }
            h.set_states(SceneState(envs=(targets,)))
            h.step()
            current = h.get_states()
            if record_states:
                states.append(current)
            if checker is not None and not success:
                success = check_success(
                    checker, current, init_state=init, env=0, dof_names=dof_names
                )
        final = h.get_states()
        return ReplayResult(success=success, states=states, final_state=final)
    finally:
        if own:
            h.close()
