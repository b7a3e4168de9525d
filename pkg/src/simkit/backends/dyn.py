"""Impulse-based rigid-body backend.

Semi-implicit Euler per substep: momenta first (gravity is the only external
force, no torques), then poses from the updated velocities, quaternion
renormalized.  Contacts are frictionless and restituting: sequential impulses
with accumulated clamping against pre-solve approach speeds, iterated
solver_iterations times, then one positional de-penetration per contact pair
split by inverse mass.  Supported pairs: sphere-sphere, sphere-plane,
box-plane (boxes contact through their 8 corners); planes are static and
treated as infinite for collision.

Joints do not exchange momentum with free bodies; they track dof_target with
first-order critically damped dynamics, q' = target + (q - target) e^(-dt/tau)
with tau = 50 ms by default (backend_extras dyn.joint_tau overrides).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..transforms import quat_normalize, quat_to_mat
from .base import Handler, _RigidBody, _World

REST_VEL_THRESHOLD = 0.01  # below this approach speed contacts stop restituting


@dataclass
class _Contact:
    a: _RigidBody
    b: _RigidBody
    normal: np.ndarray  # from a toward b
    depth: float
    point: np.ndarray
    restitution: float
    target_vn: float = 0.0


def _sphere_sphere(a: _RigidBody, b: _RigidBody) -> _Contact | None:
    delta = b.pos - a.pos
    dist = float(np.linalg.norm(delta))
    overlap = a.dims[0] + b.dims[0] - dist
    if overlap <= 0.0 or dist == 0.0:
        return None
    n = delta / dist
    point = a.pos + n * (a.dims[0] - 0.5 * overlap)
    return _Contact(a, b, n, overlap, point, min(a.restitution, b.restitution))


def _plane_normal(plane: _RigidBody) -> np.ndarray:
    return quat_to_mat(plane.quat)[:, 2]


def _sphere_plane(sphere: _RigidBody, plane: _RigidBody) -> _Contact | None:
    n = _plane_normal(plane)
    s = float(np.dot(sphere.pos - plane.pos, n))
    depth = sphere.dims[0] - s
    if depth <= 0.0:
        return None
    point = sphere.pos - n * sphere.dims[0]
    # Normal from sphere toward plane is -n; contact pushes the sphere up.
    return _Contact(sphere, plane, -n, depth, point, min(sphere.restitution, plane.restitution))


def _box_plane(box: _RigidBody, plane: _RigidBody) -> list[_Contact]:
    n = _plane_normal(plane)
    rot = quat_to_mat(box.quat)
    hx, hy, hz = box.dims[0] / 2.0, box.dims[1] / 2.0, box.dims[2] / 2.0
    e = min(box.restitution, plane.restitution)
    out = []
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            for sz in (-1.0, 1.0):
                corner = box.pos + rot @ np.array([sx * hx, sy * hy, sz * hz])
                s = float(np.dot(corner - plane.pos, n))
                if s < 0.0:
                    out.append(_Contact(box, plane, -n, -s, corner, e))
    return out


class DynHandler(Handler):
    backend_name = "dyn"

    def _substep(self, w: _World, dt: float) -> None:
        self._update_articulations(w, dt)
        attached = self._attached_bodies(w)
        gravity = np.array(self.config.sim.gravity, dtype=float)

        movable = [
            b
            for name, b in sorted(w.rigid.items())
            if not b.static and name not in attached
        ]

        # Momenta integrate forces, then poses integrate the new velocities.
        if gravity.any():
            for b in movable:
                b.lin_mom = b.lin_mom + gravity * (dt / b.inv_mass)
        for b in movable:
            b.pos = b.pos + b.lin_vel() * dt
            omega = b.ang_vel()
            if omega.any():
                qw, qx, qy, qz = b.quat
                ow, ox, oy, oz = 0.0, omega[0], omega[1], omega[2]
                dq = (
                    ow * qw - ox * qx - oy * qy - oz * qz,
                    ow * qx + ox * qw + oy * qz - oz * qy,
                    ow * qy - ox * qz + oy * qw + oz * qx,
                    ow * qz + ox * qy - oy * qx + oz * qw,
                )
                half_dt = 0.5 * dt
                b.quat = (
                    qw + half_dt * dq[0],
                    qx + half_dt * dq[1],
                    qy + half_dt * dq[2],
                    qz + half_dt * dq[3],
                )
            b.quat = quat_normalize(b.quat)

        contacts = self._detect_contacts(w, attached)
        if contacts:
            self._resolve_contacts(contacts)

        self._update_attachments(w)

    def _update_articulations(self, w: _World, dt: float) -> None:
        decay = math.exp(-dt / self.joint_tau)
        for name in sorted(w.artic):
            a = w.artic[name]
            for j, q in a.dof_pos.items():
                target = a.dof_target[j]
                q_new = target + (q - target) * decay
                a.dof_vel[j] = (q_new - q) / dt
                a.dof_pos[j] = q_new

    def _detect_contacts(self, w: _World, attached: set[str]) -> list[_Contact]:
        contacts: list[_Contact] = []
        names = sorted(w.rigid)
        for i, na in enumerate(names):
            a = w.rigid[na]
            if na in attached:
                continue
            for nb in names[i + 1 :]:
                b = w.rigid[nb]
                if nb in attached or (a.static and b.static):
                    continue
                pair = (a.shape, b.shape)
                if pair == ("sphere", "sphere"):
                    c = _sphere_sphere(a, b)
                    if c is not None:
                        contacts.append(c)
                elif pair == ("sphere", "plane"):
                    c = _sphere_plane(a, b)
                    if c is not None:
                        contacts.append(c)
                elif pair == ("plane", "sphere"):
                    c = _sphere_plane(b, a)
                    if c is not None:
                        contacts.append(c)
                elif pair == ("box", "plane"):
                    contacts.extend(_box_plane(a, b))
                elif pair == ("plane", "box"):
                    contacts.extend(_box_plane(b, a))
                # Other pairs do not collide at this scale.
        return contacts

    def _resolve_contacts(self, contacts: list[_Contact]) -> None:
        # Pre-solve approach speeds fix the restitution targets so iterating
        # passes cannot pump energy in.
        for c in contacts:
            vn0 = self._normal_velocity(c)
            c.target_vn = -c.restitution * vn0 if vn0 < -REST_VEL_THRESHOLD else 0.0

        accumulated = [0.0] * len(contacts)
        for _ in range(self.config.sim.solver_iterations):
            for k, c in enumerate(contacts):
                vn = self._normal_velocity(c)
                k_eff = self._effective_mass(c)
                if k_eff == 0.0:
                    continue
                j = (c.target_vn - vn) / k_eff
                new_total = max(0.0, accumulated[k] + j)
                j = new_total - accumulated[k]
                accumulated[k] = new_total
                if j != 0.0:
                    self._apply_impulse(c, j)

        # One positional correction per pair, using its deepest contact.
        deepest: dict[tuple[int, int], _Contact] = {}
        for c in contacts:
            key = (id(c.a), id(c.b))
            if key not in deepest or c.depth > deepest[key].depth:
                deepest[key] = c
        for c in deepest.values():
            inv_sum = c.a.inv_mass + c.b.inv_mass
            if inv_sum == 0.0:
                continue
            shift = c.normal * (c.depth / inv_sum)
            if not c.a.static:
                c.a.pos = c.a.pos - shift * c.a.inv_mass
            if not c.b.static:
                c.b.pos = c.b.pos + shift * c.b.inv_mass

    @staticmethod
    def _lever(c: _Contact, body: _RigidBody) -> np.ndarray:
        return c.point - body.pos

    def _normal_velocity(self, c: _Contact) -> float:
        va = c.a.lin_vel() + np.cross(c.a.ang_vel(), self._lever(c, c.a)) if not c.a.static else np.zeros(3)
        vb = c.b.lin_vel() + np.cross(c.b.ang_vel(), self._lever(c, c.b)) if not c.b.static else np.zeros(3)
        return float(np.dot(vb - va, c.normal))

    def _effective_mass(self, c: _Contact) -> float:
        k = c.a.inv_mass + c.b.inv_mass
        if not c.a.static:
            ra = self._lever(c, c.a)
            k += float(np.dot(np.cross(c.a.inv_inertia_world() @ np.cross(ra, c.normal), ra), c.normal))
        if not c.b.static:
            rb = self._lever(c, c.b)
            k += float(np.dot(np.cross(c.b.inv_inertia_world() @ np.cross(rb, c.normal), rb), c.normal))
        return k

    def _apply_impulse(self, c: _Contact, j: float) -> None:
        imp = c.normal * j
        if not c.a.static:
            c.a.lin_mom = c.a.lin_mom - imp
            c.a.ang_mom = c.a.ang_mom - np.cross(self._lever(c, c.a), imp)
        if not c.b.static:
            c.b.lin_mom = c.b.lin_mom + imp
            c.b.ang_mom = c.b.ang_mom + np.cross(self._lever(c, c.b), imp)
