"""Success-checker templates evaluated on scene states.

Checkers are plain data so they can live in scenario files; Callback is the
escape hatch for programmatic predicates and is the one kind that cannot be
serialized.  check_success evaluates env 0 unless told otherwise.  Checkers
needing an episode reference (PositionShift) read it from init_state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

from .state import SceneState
from .transforms import (
    Pose,
    Vec3,
    quat_angle_between,
    quat_conj,
    quat_mul,
    quat_rotate,
    vec_dot,
    vec_norm,
    vec_sub,
)


@dataclass(frozen=True)
class PositionWithin:
    """Entity origin inside a sphere."""

    entity: str
    center: Vec3
    radius: float


@dataclass(frozen=True)
class PositionShift:
    """Entity moved at least min_shift along axis since episode start."""

    entity: str
    axis: Vec3
    min_shift: float


@dataclass(frozen=True)
class JointPosThreshold:
    """Named joint position beyond a threshold ("ge" or "le")."""

    entity: str
    joint: str
    threshold: float
    direction: str = "ge"


@dataclass(frozen=True)
class RelativePose:
    """Pose of entity_b in entity_a's frame close to target_rel."""

    entity_a: str
    entity_b: str
    target_rel: Pose
    max_pos_err: float
    max_rot_err: float


@dataclass(frozen=True)
class AllOf:
    checkers: tuple["SuccessChecker", ...]


@dataclass(frozen=True)
class AnyOf:
    checkers: tuple["SuccessChecker", ...]


@dataclass(frozen=True)
class Callback:
    fn: Callable[[SceneState], bool]


SuccessChecker = Union[
    PositionWithin, PositionShift, JointPosThreshold, RelativePose, AllOf, AnyOf, Callback
]


class CheckerError(Exception):
    pass


def check_success(
    checker: SuccessChecker,
    state: SceneState,
    init_state: SceneState | None = None,
    env: int = 0,
    dof_names: dict[str, tuple[str, ...]] | None = None,
) -> bool:
    """Evaluate a checker on one env of a state.

    dof_names maps entity name to its actuated joint-name order and is needed
    only for JointPosThreshold; handlers and envs provide it.
    """
    if isinstance(checker, PositionWithin):
        pos = state.get(checker.entity, env).pos
        if pos is None:
            raise CheckerError(f"entity {checker.entity!r} has no position in state")
        return vec_norm(vec_sub(pos, checker.center)) <= checker.radius

    if isinstance(checker, PositionShift):
        if init_state is None:
            raise CheckerError("PositionShift needs the episode init state")
        pos = state.get(checker.entity, env).pos
        ref = init_state.get(checker.entity, 0).pos
        if pos is None or ref is None:
            raise CheckerError(f"entity {checker.entity!r} has no position")
        return vec_dot(vec_sub(pos, ref), checker.axis) >= checker.min_shift

    if isinstance(checker, JointPosThreshold):
        es = state.get(checker.entity, env)
        if es.dof_pos is None:
            raise CheckerError(f"entity {checker.entity!r} has no dof_pos in state")
        if dof_names is None or checker.entity not in dof_names:
            raise CheckerError(
                f"joint order for entity {checker.entity!r} unknown; pass dof_names"
            )
        order = dof_names[checker.entity]
        try:
            idx = order.index(checker.joint)
        except ValueError:
            raise CheckerError(
                f"entity {checker.entity!r} has no actuated joint {checker.joint!r}"
            ) from None
        q = es.dof_pos[idx]
        if checker.direction == "ge":
            return q >= checker.threshold
        if checker.direction == "le":
            return q <= checker.threshold
        raise CheckerError(f"bad direction {checker.direction!r}, expected 'ge' or 'le'")

    if isinstance(checker, RelativePose):
        a = state.get(checker.entity_a, env)
        b = state.get(checker.entity_b, env)
        if a.pos is None or a.rot is None or b.pos is None or b.rot is None:
            raise CheckerError("RelativePose needs full poses for both entities")
        inv_q = quat_conj(a.rot)
        rel_pos = quat_rotate(inv_q, vec_sub(b.pos, a.pos))
        rel_rot = quat_mul(inv_q, b.rot)
        pos_err = vec_norm(vec_sub(rel_pos, checker.target_rel.pos))
        rot_err = quat_angle_between(rel_rot, checker.target_rel.quat)
        return pos_err <= checker.max_pos_err and rot_err <= checker.max_rot_err

    if isinstance(checker, AllOf):
        return all(check_success(c, state, init_state, env, dof_names) for c in checker.checkers)

    if isinstance(checker, AnyOf):
        return any(check_success(c, state, init_state, env, dof_names) for c in checker.checkers)

    if isinstance(checker, Callback):
        return bool(checker.fn(state))

    raise CheckerError(f"unknown checker type {type(checker).__name__}")


def checker_entities(checker: SuccessChecker) -> set[str]:
    """All entity names a checker (tree) references."""
    if isinstance(checker, (PositionWithin, PositionShift, JointPosThreshold)):
        return {checker.entity}
    if isinstance(checker, RelativePose):
        return {checker.entity_a, checker.entity_b}
    if isinstance(checker, (AllOf, AnyOf)):
        out: set[str] = set()
        for c in checker.checkers:
            out |= checker_entities(c)
        return out
    return set()
