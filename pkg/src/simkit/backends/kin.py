"""Kinematic replay backend: joints snap to their targets, free bodies hold pose.

No forces, no contacts, no integration.  The grasp attachment still runs so
manipulation demos replay: a body welded to a closing gripper follows the ee
frame exactly, and released bodies simply stay where they were let go.
"""

from __future__ import annotations

from .base import Handler, _World


class KinHandler(Handler):
    backend_name = "kin"

    def _substep(self, w: _World, dt: float) -> None:
        self._update_articulations(w, dt)
        self._update_attachments(w)

    def _update_articulations(self, w: _World, dt: float) -> None:
        for name in sorted(w.artic):
            a = w.artic[name]
            for j in a.dof_pos:
                a.dof_pos[j] = a.dof_target[j]
                a.dof_vel[j] = 0.0
