"""Stacked flat-space team state, system matrices and quadratic costs.

State layout for ``N`` UAVs (dimension ``12N + 1``)::

    [p (3N) | psi (N) | p' (3N) | psi' (N) | p'' (3N) | psi'' (N) | 1]

Each derivative level is a ``4N`` block; inside a level, UAV ``i`` owns the
position slots ``3i:3i+3`` and the yaw slot ``3N + i``. The trailing 1 is a
homogeneous coordinate that folds the formation offsets into quadratic forms.
Controls are ``[p''' (3N) | psi''' (N)]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidWeightError
from .graph import FormationSpec, incidence_matrix, kron_identity, weighted_laplacian


def state_dim(n_uavs):
    return 12 * n_uavs + 1


def level_offset(n_uavs, level):
    """First index of derivative ``level`` (0 position, 1 velocity, 2 acceleration)."""
    if level not in (0, 1, 2):
        raise ValueError(f"level must be 0, 1 or 2, got {level}")
    return 4 * n_uavs * level


def pos_slice(n_uavs, uav, level=0):
    start = level_offset(n_uavs, level) + 3 * uav
    return slice(start, start + 3)


def yaw_index(n_uavs, uav, level=0):
    return level_offset(n_uavs, level) + 3 * n_uavs + uav


def homogeneous_index(n_uavs):
    return 12 * n_uavs


def control_pos_slice(n_uavs, uav):
    return slice(3 * uav, 3 * uav + 3)


def control_yaw_index(n_uavs, uav):
    return 3 * n_uavs + uav


def n_uavs_from_dim(dim):
    n, rem = divmod(dim - 1, 12)
    if rem or n < 1:
        raise ValueError(f"{dim} is not a valid flat state dimension")
    return n


def per_uav_channels(values, n_uavs):
    """Expand per-UAV scalars to one level's ``4N`` channel ordering."""
    values = np.asarray(values, dtype=float)
    return np.concatenate([np.repeat(values, 3), values])


def pack_state(positions, velocities=None, accelerations=None,
               yaw=None, yaw_rate=None, yaw_acc=None):
    """Build a flat team state from per-UAV arrays (``positions`` is ``(N, 3)``)."""
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    zeros3 = np.zeros((n, 3))
    zeros1 = np.zeros(n)
    levels = [
        (positions, yaw),
        (velocities, yaw_rate),
        (accelerations, yaw_acc),
    ]
    r = np.zeros(state_dim(n))
    for lvl, (p, psi) in enumerate(levels):
        p = zeros3 if p is None else np.asarray(p, dtype=float).reshape(n, 3)
        psi = zeros1 if psi is None else np.asarray(psi, dtype=float).reshape(n)
        off = level_offset(n, lvl)
        r[off:off + 3 * n] = p.reshape(-1)
        r[off + 3 * n:off + 4 * n] = psi
    r[-1] = 1.0
    return r


def positions(r, n_uavs=None):
    """``(..., N, 3)`` positions from state(s) ``r`` with shape ``(..., 12N+1)``."""
    return _level(r, n_uavs, 0)


def velocities(r, n_uavs=None):
    return _level(r, n_uavs, 1)


def accelerations(r, n_uavs=None):
    return _level(r, n_uavs, 2)


def yaw_levels(r, n_uavs=None):
    """``(..., 3, N)`` yaw, yaw rate and yaw acceleration."""
    r = np.asarray(r)
    n = n_uavs or n_uavs_from_dim(r.shape[-1])
    return np.stack([r[..., level_offset(n, k) + 3 * n:level_offset(n, k) + 4 * n]
                     for k in range(3)], axis=-2)


def _level(r, n_uavs, level):
    r = np.asarray(r)
    n = n_uavs or n_uavs_from_dim(r.shape[-1])
    off = level_offset(n, level)
    return r[..., off:off + 3 * n].reshape(r.shape[:-1] + (n, 3))


def control_jerks(u, n_uavs=None):
    """``(..., N, 3)`` position jerks from control(s) ``u``."""
    u = np.asarray(u)
    n = n_uavs or u.shape[-1] // 4
    return u[..., :3 * n].reshape(u.shape[:-1] + (n, 3))


def build_system_matrices(n_uavs: int):
    """Triple-integrator team dynamics ``r' = A r + B u`` with a homogeneous slot."""
    if n_uavs < 1:
        raise ValueError("n_uavs must be >= 1")
    m = 4 * n_uavs
    n = state_dim(n_uavs)
    shift = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
    A = np.zeros((n, n))
    A[:3 * m, :3 * m] = kron_identity(shift, m)
    B = np.zeros((n, m))
    B[:3 * m, :] = kron_identity(np.array([[0.0], [0.0], [1.0]]), m)
    return A, B


def formation_blocks(spec: FormationSpec, weights):
    """Laplacian block, offset coupling vector and offset constant for one weight set.

    Returns ``(L_hat, theta, upsilon)`` with ``L_hat`` of size ``4N`` (yaw rows
    zero), ``theta`` of length ``4N`` and the scalar ``upsilon``.
    """
    g = spec.formation_graph
    n = spec.n_uavs
    L = weighted_laplacian(g, weights)
    D = incidence_matrix(g)
    d = spec.offsets.reshape(-1)
    L_hat = np.zeros((4 * n, 4 * n))
    L_hat[:3 * n, :3 * n] = kron_identity(L, 3)
    theta = np.zeros(4 * n)
    theta[:3 * n] = kron_identity(D * weights, 3) @ d
    upsilon = float(d @ (np.repeat(weights, 3) * d))
    return L_hat, theta, upsilon


def _formation_cost(spec, weights):
    n = spec.n_uavs
    m = 4 * n
    L_hat, theta, upsilon = formation_blocks(spec, weights)
    Q = np.zeros((state_dim(n), state_dim(n)))
    Q[:m, :m] = L_hat
    Q[m:2 * m, m:2 * m] = L_hat
    h = homogeneous_index(n)
    Q[:m, h] = -theta
    Q[h, :m] = -theta
    Q[h, h] = upsilon
    return Q


def build_formation_costs(spec: FormationSpec):
    """Running and terminal formation costs ``(Q, Q_f)``.

    ``r^T Q r`` equals ``sum_ij mu_ij (|p_i - p_j - d_ij|^2 + |p_i' - p_j'|^2)``
    for any state with trailing 1; ``Q_f`` is the same with ``omega``.
    """
    if spec.offsets.shape != (spec.formation_graph.edge_count, 3):
        raise ConfigError("offsets do not match the formation edges", key="offsets")
    return _formation_cost(spec, spec.mu), _formation_cost(spec, spec.omega)


def _positive(values, n_uavs, name):
    values = np.broadcast_to(np.asarray(values, dtype=float), (n_uavs,)).copy()
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise InvalidWeightError(f"{name} must be strictly positive", key=name)
    return values


def build_tracking_costs(zeta, delta, eta, n_uavs: int):
    """Diagonal tracking weights ``(K, K_f, R_z)``.

    Every non-homogeneous coordinate of UAV ``i`` is weighted by ``zeta[i]``
    (running) and ``delta[i]`` (terminal); its four jerk channels by ``eta[i]``.
    """
    zeta = _positive(zeta, n_uavs, "zeta")
    delta = _positive(delta, n_uavs, "delta")
    eta = _positive(eta, n_uavs, "eta")
    K = np.diag(np.concatenate([np.tile(per_uav_channels(zeta, n_uavs), 3), [0.0]]))
    K_f = np.diag(np.concatenate([np.tile(per_uav_channels(delta, n_uavs), 3), [0.0]]))
    R_z = np.diag(per_uav_channels(eta, n_uavs))
    return K, K_f, R_z


def control_weight(gamma, n_uavs):
    """Planning control weight: ``gamma[i]`` on every jerk channel of UAV ``i``."""
    return np.diag(per_uav_channels(_positive(gamma, n_uavs, "gamma"), n_uavs))


@dataclass(frozen=True)
class CostMatrices:
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    Q_f: np.ndarray
    R: np.ndarray
    K: np.ndarray
    K_f: np.ndarray
    R_z: np.ndarray

    @property
    def n_uavs(self):
        return n_uavs_from_dim(self.A.shape[0])

    @property
    def state_dim(self):
        return self.A.shape[0]

    def tracking_view(self):
        """Same system with the tracking weights in the planning slots."""
        return CostMatrices(self.A, self.B, self.K, self.K_f, self.R_z,
                            self.K, self.K_f, self.R_z)


def default_tracking_weights(spec: FormationSpec):
    """10x the incident mean of mu (running), 10x of omega (terminal), eta = gamma."""
    return (10.0 * spec.incident_mean(spec.mu),
            10.0 * spec.incident_mean(spec.omega),
            np.array(spec.gamma, dtype=float))


def build_costs(spec: FormationSpec, zeta=None, delta=None, eta=None) -> CostMatrices:
    n = spec.n_uavs
    dz, dd, de = default_tracking_weights(spec)
    zeta = dz if zeta is None else zeta
    delta = dd if delta is None else delta
    eta = de if eta is None else eta
    A, B = build_system_matrices(n)
    Q, Q_f = build_formation_costs(spec)
    K, K_f, R_z = build_tracking_costs(zeta, delta, eta, n)
    return CostMatrices(A, B, Q, Q_f, control_weight(spec.gamma, n), K, K_f, R_z)


def formation_cost_direct(r, spec: FormationSpec, weights):
    """Pairwise-sum evaluation of the formation cost (no matrices)."""
    p = positions(r, spec.n_uavs)
    v = velocities(r, spec.n_uavs)
    total = 0.0
    for k, (i, j) in enumerate(spec.formation_graph.edges):
        e = p[i] - p[j] - spec.offsets[k]
        dv = v[i] - v[j]
        total += weights[k] * (e @ e + dv @ dv)
    return float(total)
