"""Flat outputs -> quadrotor thrust, attitude, body rates and moments.

The body frame is built from the thrust direction and the yaw heading
``x_C = [cos psi, sin psi, 0]``: ``y_B = z_B x x_C / |.|``, ``x_B = y_B x z_B``.
Roll/pitch/yaw are reported in the Z-X-Y convention ``R = Rz(psi) Rx(phi) Ry(theta)``.
All functions broadcast over leading dimensions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FlatnessSingularError

FREE_FALL_EPS = 1e-6
HEADING_EPS = 1e-9


@dataclass(frozen=True)
class QuadrotorParams:
    mass: float = 1.0
    arm_length: float = 0.2
    gravity: float = 9.81
    inertia: np.ndarray = field(default_factory=lambda: np.array([0.016, 0.016, 0.016]))

    def __post_init__(self):
        inertia = np.broadcast_to(np.asarray(self.inertia, dtype=float), (3,)).copy()
        inertia.setflags(write=False)
        object.__setattr__(self, "inertia", inertia)
        for name in ("mass", "arm_length", "gravity"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive", key=name)
        if np.any(inertia <= 0):
            raise ConfigError("inertia must be positive", key="inertia")

    @property
    def inertia_matrix(self):
        return np.diag(self.inertia)


@dataclass(frozen=True)
class QuadrotorState:
    thrust: np.ndarray
    roll: np.ndarray
    pitch: np.ndarray
    yaw: np.ndarray
    rotation: np.ndarray
    body_rates: np.ndarray
    moments: np.ndarray | None = None


def _unit(x):
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        return x / n, n


def euler_zxy(R):
    """(roll, pitch, yaw) of rotation matrices ``R = Rz Rx Ry``."""
    R = np.asarray(R)
    roll = np.arcsin(np.clip(R[..., 2, 1], -1.0, 1.0))
    pitch = np.arctan2(-R[..., 2, 0], R[..., 2, 2])
    yaw = np.arctan2(-R[..., 0, 1], R[..., 1, 1])
    return roll, pitch, yaw


def _heading(yaw):
    yaw = np.asarray(yaw, dtype=float)
    return np.stack([np.cos(yaw), np.sin(yaw), np.zeros_like(yaw)], axis=-1)


def thrust_and_attitude(accel, yaw, params: QuadrotorParams):
    """Collective thrust, roll, pitch and rotation matrix from acceleration and yaw.

    Returns ``(u1, roll, pitch, R)``; ``R`` has body axes as columns.
    """
    accel = np.asarray(accel, dtype=float)
    t = accel + np.array([0.0, 0.0, params.gravity])
    z_b, tn = _unit(t)
    if np.any(tn[..., 0] <= FREE_FALL_EPS):
        raise FlatnessSingularError("commanded acceleration is free fall; thrust direction undefined")
    c = np.cross(z_b, _heading(yaw))
    y_b, cn = _unit(c)
    if np.any(cn[..., 0] <= HEADING_EPS):
        raise FlatnessSingularError("thrust axis aligned with heading (pitch +-90 deg)")
    x_b = np.cross(y_b, z_b)
    R = np.stack([x_b, y_b, z_b], axis=-1)
    u1 = params.mass * tn[..., 0]
    roll, pitch, _ = euler_zxy(R)
    return u1, roll, pitch, R


def body_rates(accel, jerk, yaw, yaw_rate, params: QuadrotorParams):
    """Body-frame angular velocity from acceleration, jerk, yaw and yaw rate.

    Differentiates the body-frame construction exactly, then reads
    ``omega = vee(R^T R')``.
    """
    accel = np.asarray(accel, dtype=float)
    jerk = np.asarray(jerk, dtype=float)
    yaw = np.asarray(yaw, dtype=float)
    yaw_rate = np.asarray(yaw_rate, dtype=float)
    t = accel + np.array([0.0, 0.0, params.gravity])
    z_b, tn = _unit(t)
    if np.any(tn[..., 0] <= FREE_FALL_EPS):
        raise FlatnessSingularError("free fall: body rates undefined")
    z_dot = (jerk - np.sum(z_b * jerk, axis=-1, keepdims=True) * z_b) / tn
    x_c = _heading(yaw)
    x_c_dot = yaw_rate[..., None] * np.stack(
        [-np.sin(yaw), np.cos(yaw), np.zeros_like(yaw)], axis=-1)
    c = np.cross(z_b, x_c)
    y_b, cn = _unit(c)
    if np.any(cn[..., 0] <= HEADING_EPS):
        raise FlatnessSingularError("thrust axis aligned with heading (pitch +-90 deg)")
    c_dot = np.cross(z_dot, x_c) + np.cross(z_b, x_c_dot)
    y_dot = (c_dot - np.sum(y_b * c_dot, axis=-1, keepdims=True) * y_b) / cn
    x_b = np.cross(y_b, z_b)
    x_dot = np.cross(y_dot, z_b) + np.cross(y_b, z_dot)
    return np.stack([np.sum(z_b * y_dot, axis=-1),
                     np.sum(x_b * z_dot, axis=-1),
                     np.sum(y_b * x_dot, axis=-1)], axis=-1)


def body_moments(omega_series, params: QuadrotorParams, dt: float):
    """Body moments ``I w' + w x I w`` along a uniformly sampled rate series.

    ``omega_series`` has time on axis 0 and the 3 components on the last axis;
    ``w'`` uses central differences inside and one-sided ones at the ends.
    """
    w = np.asarray(omega_series, dtype=float)
    if w.shape[0] < 3:
        raise ValueError("body_moments needs at least 3 samples")
    if not dt > 0:
        raise ValueError("dt must be positive")
    w_dot = np.gradient(w, dt, axis=0)
    J = params.inertia
    return J * w_dot + np.cross(w, J * w)


def reconstruct_acceleration(u1, R, params: QuadrotorParams):
    """Acceleration implied by thrust and attitude: ``-g e_z + (u1/m) R e_z``."""
    thrust_dir = np.asarray(R)[..., :, 2]
    return (np.asarray(u1)[..., None] / params.mass) * thrust_dir - np.array([0.0, 0.0, params.gravity])


def physical_states(acc, jerk, yaw, yaw_rate, params: QuadrotorParams, dt=None):
    """Full physical record for trajectories shaped ``(T, N, 3)`` / ``(T, N)``.

    Moments are included when ``dt`` is given and at least 3 samples exist.
    """
    u1, roll, pitch, R = thrust_and_attitude(acc, yaw, params)
    _, _, yaw_out = euler_zxy(R)
    omega = body_rates(acc, jerk, yaw, yaw_rate, params)
    moments = None
    if dt is not None and np.shape(omega)[0] >= 3:
        moments = body_moments(omega, params, dt)
    return QuadrotorState(thrust=u1, roll=roll, pitch=pitch, yaw=yaw_out,
                          rotation=R, body_rates=omega, moments=moments)
