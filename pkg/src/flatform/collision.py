"""Pairwise region classification, collision penalties and directional weights.

For a pair with avoidance radii sum ``a = r_i + r_j`` and reaction radii sum
``b = R_i + R_j`` at distance ``d``::

    safety    d >= b
    reaction  a < d < b         penalty ((d^2 - b^2) / (d^2 - a^2))^2
    collision d < a
    singular  d == a            penalty undefined

The per-UAV gradient of ``sum_j w_ij v_ij`` (weights frozen) is placed in the
acceleration-level position slots of a full-state vector, so that ``B^T``
routes it into the jerk input.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import ConfigError, SingularityError
from .flat_dynamics import pos_slice, positions, state_dim, velocities
from .graph import DirectedGraph

log = logging.getLogger(__name__)

STRATEGIES = ("none", "basic", "forward", "approach", "unified")
SINGULAR_TOL = 1e-12


class Region(IntEnum):
    SAFETY = 0
    REACTION = 1
    COLLISION = 2
    SINGULAR = 3

    def __str__(self):
        return self.name.lower()


@dataclass(frozen=True)
class SafetyConfig:
    r: np.ndarray
    R: np.ndarray
    strategy: str = "basic"

    def __post_init__(self):
        r = np.atleast_1d(np.asarray(self.r, dtype=float))
        R = np.atleast_1d(np.asarray(self.R, dtype=float))
        if r.shape != R.shape:
            raise ConfigError("r and R must have one entry per UAV", key="safety")
        if np.any(r <= 0) or np.any(R <= r):
            raise ConfigError("radii must satisfy R_i > r_i > 0", key="safety")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}; "
                              f"expected one of {STRATEGIES}", key="strategy")
        r.setflags(write=False)
        R.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "R", R)

    @classmethod
    def uniform(cls, n_uavs, r, R=None, strategy="basic"):
        R = 2.0 * r if R is None else R
        return cls(np.full(n_uavs, float(r)), np.full(n_uavs, float(R)), strategy)

    @property
    def n_uavs(self):
        return self.r.size

    def with_strategy(self, strategy):
        return SafetyConfig(self.r, self.R, strategy)


def ordered_pairs(n_uavs):
    """Ordered pairs of the complete communication graph, in its edge order."""
    return np.array(DirectedGraph.complete(n_uavs).edges, dtype=int).reshape(-1, 2)


def _classify(dist, a, b):
    region = np.full(dist.shape, Region.SAFETY, dtype=int)
    region[dist < b] = Region.REACTION
    region[dist < a] = Region.COLLISION
    region[np.abs(dist - a) <= SINGULAR_TOL] = Region.SINGULAR
    return region


@dataclass(frozen=True)
class RegionReport:
    pairs: np.ndarray
    distances: np.ndarray
    regions: np.ndarray

    @property
    def safety(self):
        """Every pair in the safety region (the set Psi is non-empty)."""
        return bool(np.all(self.regions == Region.SAFETY))

    @property
    def reaction(self):
        return bool(np.any(self.regions == Region.REACTION))

    @property
    def collision(self):
        return bool(np.any(self.regions == Region.COLLISION))

    @property
    def singular(self):
        return bool(np.any(self.regions == Region.SINGULAR))

    def region_of(self, i, j):
        k = np.flatnonzero((self.pairs[:, 0] == i) & (self.pairs[:, 1] == j))
        return Region(int(self.regions[k[0]]))


def _radius_sums(cfg, pairs):
    i, j = pairs[:, 0], pairs[:, 1]
    return cfg.r[i] + cfg.r[j], cfg.R[i] + cfg.R[j]


def classify_regions(p, cfg: SafetyConfig) -> RegionReport:
    """Classify every ordered pair from positions ``p`` with shape ``(N, 3)``."""
    p = np.asarray(p, dtype=float).reshape(-1, 3)
    pairs = ordered_pairs(p.shape[0])
    a, b = _radius_sums(cfg, pairs)
    dist = np.linalg.norm(p[pairs[:, 1]] - p[pairs[:, 0]], axis=1)
    return RegionReport(pairs, dist, _classify(dist, a, b))


def _penalty_terms(dist, a, b):
    """Penalty and gradient coefficient per pair (zero outside the reaction band)."""
    s = dist ** 2
    a2, b2 = a ** 2, b ** 2
    region = _classify(dist, a, b)
    active = region == Region.REACTION
    v = np.zeros_like(dist)
    phi = np.zeros_like(dist)
    if np.any(active):
        sa, aa, bb = s[active], a2[active], b2[active]
        ratio = (sa - bb) / (sa - aa)
        v[active] = ratio ** 2
        phi[active] = 4.0 * (bb - aa) * (sa - bb) / (sa - aa) ** 3
    return v, phi, region


def _as_positions(z_or_p):
    x = np.asarray(z_or_p, dtype=float)
    if x.ndim == 1 and x.size % 12 == 1:
        return positions(x)
    return x.reshape(-1, 3)


def _pair_setup(z, pair, cfg):
    p = _as_positions(z)
    i, j = pair
    a = cfg.r[i] + cfg.r[j]
    b = cfg.R[i] + cfg.R[j]
    dist = float(np.linalg.norm(p[j] - p[i]))
    if abs(dist - a) <= SINGULAR_TOL:
        raise SingularityError(f"pair ({i + 1},{j + 1}) is on the collision boundary",
                               pair=(i, j))
    return p, i, j, a, b, dist


def penalty(z, pair, cfg: SafetyConfig) -> float:
    """Collision penalty of ordered ``pair`` (0-based) for state or positions ``z``.

    Returns 0 in the safety and collision regions; raises SingularityError on
    the collision boundary.
    """
    _, _, _, a, b, dist = _pair_setup(z, pair, cfg)
    v, _, region = _penalty_terms(np.array([dist]), np.array([a]), np.array([b]))
    if region[0] == Region.COLLISION:
        log.debug("pair %s inside the collision region", pair)
    return float(v[0])


def penalty_gradient_wrt_own_state(z, pair, cfg: SafetyConfig) -> np.ndarray:
    """Gradient of the pair penalty with respect to ``p_i`` (a 3-vector)."""
    p, i, j, a, b, dist = _pair_setup(z, pair, cfg)
    _, phi, _ = _penalty_terms(np.array([dist]), np.array([a]), np.array([b]))
    return phi[0] * (p[i] - p[j])


def _unit_cos(x, y):
    """cos of the angle between rows of x and y; 0 where either is zero."""
    nx = np.linalg.norm(x, axis=-1)
    ny = np.linalg.norm(y, axis=-1)
    den = nx * ny
    ok = den > 0
    out = np.zeros(np.broadcast(nx, ny).shape)
    dot = np.sum(x * y, axis=-1)
    np.divide(dot, den, out=out, where=ok)
    return np.clip(out, -1.0, 1.0), ok


def _forward(dp, vi):
    c, ok = _unit_cos(dp, vi)
    return np.where(ok, np.maximum(0.0, c), 0.0)


def _approach(dp, dv):
    c, ok = _unit_cos(dp, dv)
    return np.where(ok, np.maximum(0.0, -c), 0.0)


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def forward_weight(p_i, p_j, v_i):
    """Forward-path weight: clamped cosine between ``v_i`` and ``p_j - p_i``."""
    dp = np.asarray(p_j, dtype=float) - np.asarray(p_i, dtype=float)
    vi = np.asarray(v_i, dtype=float)
    if np.ndim(dp) == 1 and not np.any(dp):
        log.debug("coincident positions in forward_weight; returning 0")
    return _scalar(_forward(dp, vi))


def approach_weight(p_i, p_j, v_i, v_j):
    """Approach weight: clamped negative cosine between relative position and velocity."""
    dp = np.asarray(p_j, dtype=float) - np.asarray(p_i, dtype=float)
    dv = np.asarray(v_j, dtype=float) - np.asarray(v_i, dtype=float)
    if np.ndim(dp) == 1 and not np.any(dp):
        log.debug("coincident positions in approach_weight; returning 0")
    return _scalar(_approach(dp, dv))


def unified_weight(p_i, p_j, v_i, v_j):
    """Product of the forward-path and approach weights."""
    dp = np.asarray(p_j, dtype=float) - np.asarray(p_i, dtype=float)
    vi = np.asarray(v_i, dtype=float)
    dv = np.asarray(v_j, dtype=float) - vi
    return _scalar(_forward(dp, vi) * _approach(dp, dv))


def pair_weights(p, v, pairs, strategy):
    """Directional weight of every ordered pair under ``strategy``."""
    i, j = pairs[:, 0], pairs[:, 1]
    dp = p[j] - p[i]
    if strategy == "none":
        return np.zeros(len(pairs))
    if strategy == "basic":
        return np.ones(len(pairs))
    if strategy == "forward":
        return _forward(dp, v[i])
    if strategy == "approach":
        return _approach(dp, v[j] - v[i])
    if strategy == "unified":
        return _forward(dp, v[i]) * _approach(dp, v[j] - v[i])
    raise ValueError(f"unknown strategy {strategy!r}")


@dataclass(frozen=True)
class PenaltyGradient:
    """Stacked penalty gradient with per-pair diagnostics."""

    vector: np.ndarray
    pairs: np.ndarray
    distances: np.ndarray
    regions: np.ndarray
    penalties: np.ndarray
    weights: np.ndarray

    @property
    def vhat(self):
        """Unweighted total penalty sum_i sum_j v_ij."""
        return float(self.penalties.sum())

    @property
    def weighted_total(self):
        return float((self.weights * self.penalties).sum())


def assemble_gradient(z, cfg: SafetyConfig, velocities_=None,
                      strategy: str | None = None) -> PenaltyGradient:
    """Full-state gradient of the (weighted) collision penalties.

    Velocities default to the velocity block of ``z``. Weights are treated as
    constants. Raises SingularityError naming the first pair on the boundary,
    except under strategy ``none`` where the penalty never enters the control.
    """
    z = np.asarray(z, dtype=float)
    n = cfg.n_uavs
    strategy = cfg.strategy if strategy is None else strategy
    p = positions(z, n)
    v = velocities(z, n) if velocities_ is None else np.asarray(velocities_, float).reshape(n, 3)
    pairs = ordered_pairs(n)
    a, b = _radius_sums(cfg, pairs)
    dist = np.linalg.norm(p[pairs[:, 1]] - p[pairs[:, 0]], axis=1)
    vals, phi, region = _penalty_terms(dist, a, b)
    singular = np.flatnonzero(region == Region.SINGULAR)
    if singular.size and strategy != "none":
        i, j = pairs[singular[0]]
        raise SingularityError(f"pair ({i + 1},{j + 1}) is on the collision boundary",
                               pair=(int(i), int(j)))
    w = pair_weights(p, v, pairs, strategy)
    vec = np.zeros(state_dim(n))
    if strategy != "none" and np.any(phi):
        coef = (w * phi)[:, None] * (p[pairs[:, 0]] - p[pairs[:, 1]])
        per_uav = np.zeros((n, 3))
        np.add.at(per_uav, pairs[:, 0], coef)
        vec[pos_slice(n, 0, 2).start:pos_slice(n, n - 1, 2).stop] = per_uav.reshape(-1)
    return PenaltyGradient(vector=vec, pairs=pairs, distances=dist, regions=region,
                           penalties=vals, weights=w)


WEIGHTS_DEMO_SCENARIOS = {
    "scenario1": dict(p1=[1.0, 1.0, 1.0], p2=[7.0, 0.0, 3.0],
                      v1=[2.0, 1.0, 0.5], v2=[-2.0, 1.0, -0.5]),
    "scenario2": dict(p1=[1.0, 1.0, 1.0], p2=[7.0, 3.0, 1.0],
                      v1=[2.0, 1.0, 0.5], v2=[-2.0, 1.0, -0.5]),
}


def weights_demo(p1, p2, v1, v2, steps=20, step=0.1):
    """alpha_12, beta_12 and xi_12 for two UAVs flying at constant velocity.

    Returns a dict of arrays of length ``steps`` sampled at ``t_k = k * step``.
    """
    p1, p2, v1, v2 = (np.asarray(x, dtype=float) for x in (p1, p2, v1, v2))
    t = np.arange(steps) * step
    q1 = p1 + t[:, None] * v1
    q2 = p2 + t[:, None] * v2
    dp = q2 - q1
    alpha = _forward(dp, np.broadcast_to(v1, dp.shape))
    beta = _approach(dp, np.broadcast_to(v2 - v1, dp.shape))
    return {"t": t, "p1": q1, "p2": q2, "distance": np.linalg.norm(dp, axis=1),
            "alpha": alpha, "beta": beta, "xi": alpha * beta}
