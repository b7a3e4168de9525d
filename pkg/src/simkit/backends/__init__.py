"""Backend registry, launch factory, and the conservation probe."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import ScenarioConfig
from ..state import SceneState
from .base import (
    BackendError,
    DofLengthMismatch,
    Handler,
    InvalidState,
    RenderError,
    UnknownEntity,
    resolve_backend_name,
)
from .dyn import DynHandler
from .kin import KinHandler

BACKENDS = {
    "dyn": DynHandler,
    "kin": KinHandler,
}


def launch(config: ScenarioConfig, backend: str | None = None, num_envs: int = 1) -> Handler:
    """Create a handler for the scenario.

    backend falls back to the SIMKIT_BACKEND environment variable, then to
    "dyn".  Raises BackendError for unknown backend names.
    """
    name = resolve_backend_name(backend)
    cls = BACKENDS.get(name)
    if cls is None:
        raise BackendError(f"unknown backend {name!r}; available: {sorted(BACKENDS)}")
    return cls(config, num_envs=num_envs)


@dataclass(frozen=True)
class ConservationSample:
    step: int
    lin_mom: tuple[float, float, float]
    ang_mom: tuple[float, float, float]
    kinetic: float


def _totals(handler: Handler, step: int) -> ConservationSample:
    p_total = np.zeros(3)
    l_total = np.zeros(3)
    ke = 0.0
    for name in sorted(handler.worlds[0].rigid):
        b = handler.worlds[0].rigid[name]
        if b.static:
            continue
        p_total = p_total + b.lin_mom
        l_total = l_total + np.cross(b.pos, b.lin_mom) + b.ang_mom
        ke += 0.5 * float(np.dot(b.lin_mom, b.lin_mom)) * b.inv_mass
        ke += 0.5 * float(np.dot(b.ang_vel(), b.ang_mom))
    return ConservationSample(
        step=step,
        lin_mom=tuple(float(x) for x in p_total),
        ang_mom=tuple(float(x) for x in l_total),
        kinetic=ke,
    )


def conservation_probe(
    config: ScenarioConfig,
    steps: int,
    backend: str = "dyn",
    init_state: "SceneState | None" = None,
) -> list[ConservationSample]:
    """Step a gravity-free scene and record total p, L (about the origin), and KE.

    init_state, when given, is applied before the first sample — that's how
    the scene gets its kick, since configs describe resting poses only.  The
    sums use the handler's stored momenta, so they measure exactly what the
    integrator carries.  Raises BackendError if the scene has gravity.
    """
    if any(g != 0.0 for g in config.sim.gravity):
        raise BackendError("conservation probe needs a gravity-free scene")
    handler = launch(config, backend=backend)
    if init_state is not None:
        handler.set_states(init_state)
    samples = [_totals(handler, 0)]
    for i in range(steps):
        handler.step()
        samples.append(_totals(handler, i + 1))
    handler.close()
    return samples


def probe_to_csv(samples: list[ConservationSample]) -> str:
    lines = ["step,px,py,pz,lx,ly,lz,ke"]
    for s in samples:
        row = [str(s.step)] + [repr(v) for v in (*s.lin_mom, *s.ang_mom, s.kinetic)]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
