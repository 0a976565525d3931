"""Closed-loop simulation of the tracked team, metrics and penalty monitors."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import collision, flatness, planner, tracker
from .collision import Region, SafetyConfig
from .errors import CollisionViolationError, ConfigError, DomainError
from .flat_dynamics import (CostMatrices, build_costs, control_jerks, accelerations,
                            positions, velocities, yaw_levels, n_uavs_from_dim)
from .flatness import QuadrotorParams
from .graph import FormationSpec

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed for one plan/track run.

    ``initial_state`` is the stacked flat team state with trailing 1. The
    tracking weights default to 10x the incident mean of mu / omega and
    ``eta = gamma``.
    """

    formation: FormationSpec
    safety: SafetyConfig
    initial_state: np.ndarray
    t_f: float = 10.0
    dt: float = 1e-3
    riccati_step: float | None = None
    quad: QuadrotorParams = field(default_factory=QuadrotorParams)
    variant: str = "consistent"
    stride: int = 10
    epsilon: float = 1e-3
    feedforward: bool = True
    zeta: np.ndarray | None = None
    delta: np.ndarray | None = None
    eta: np.ndarray | None = None
    name: str = "scenario"

    def __post_init__(self):
        n = self.formation.n_uavs
        r0 = np.array(self.initial_state, dtype=float)
        if r0.shape != (12 * n + 1,):
            raise ConfigError(f"initial state must have length {12 * n + 1}", key="uav")
        if r0[-1] != 1.0:
            raise ConfigError("initial state must end with the homogeneous 1", key="uav")
        r0.setflags(write=False)
        object.__setattr__(self, "initial_state", r0)
        if self.safety.n_uavs != n:
            raise ConfigError("safety radii must have one entry per UAV", key="safety")
        if not self.t_f > 0:
            raise ConfigError("t_f must be positive", key="t_f")
        if not 0 < self.dt <= self.t_f:
            raise ConfigError("dt must be in (0, t_f]", key="dt")
        if self.riccati_step is not None and not self.riccati_step > 0:
            raise ConfigError("riccati_step must be positive", key="riccati_step")
        if self.variant not in tracker.VARIANTS:
            raise ConfigError(f"variant must be one of {tracker.VARIANTS}", key="variant")
        if int(self.stride) < 1:
            raise ConfigError("stride must be >= 1", key="stride")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive", key="epsilon")
        self.check_initial_separation()

    @property
    def n_uavs(self):
        return self.formation.n_uavs

    @property
    def strategy(self):
        return self.safety.strategy

    @property
    def steps(self):
        return int(np.floor(self.t_f / self.dt + 1e-9))

    def check_initial_separation(self):
        """Initial positions must be at least ``r_i + r_j + epsilon`` apart."""
        rep = collision.classify_regions(positions(self.initial_state), self.safety)
        i, j = rep.pairs[:, 0], rep.pairs[:, 1]
        need = self.safety.r[i] + self.safety.r[j] + self.epsilon
        bad = np.flatnonzero(rep.distances < need)
        if bad.size:
            a, b = rep.pairs[bad[0]]
            raise ConfigError(
                f"UAVs {a + 1} and {b + 1} start {rep.distances[bad[0]]:.4g} m apart; "
                f"need at least {need[bad[0]]:.4g} m", key="uav")

    def costs(self) -> CostMatrices:
        return build_costs(self.formation, self.zeta, self.delta, self.eta)

    def with_overrides(self, **kw):
        strategy = kw.pop("strategy", None)
        cfg = replace(self, **{k: v for k, v in kw.items() if v is not None})
        if strategy is not None:
            cfg = replace(cfg, safety=cfg.safety.with_strategy(strategy))
        return cfg


@dataclass
class SimTrace:
    """Per-step records of one closed-loop run (time on axis 0)."""

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    reference: np.ndarray
    reference_controls: np.ndarray
    pairs: np.ndarray
    distances: np.ndarray
    regions: np.ndarray
    weights: np.ndarray
    penalties: np.ndarray
    vhat: np.ndarray
    tracking_cost: np.ndarray
    config: ScenarioConfig
    cost: CostMatrices
    physical: flatness.QuadrotorState | None = None
    collided: bool = False

    @property
    def n_uavs(self):
        return n_uavs_from_dim(self.states.shape[1])

    def positions(self):
        return positions(self.states)

    def reference_positions(self):
        return positions(self.reference)


def _tracking_integrand(e, u, cost):
    return np.einsum("ki,ij,kj->k", e, cost.K, e) + np.einsum("ki,ij,kj->k", u, cost.R_z, u)


def plan(cfg: ScenarioConfig, cost: CostMatrices | None = None):
    cost = cfg.costs() if cost is None else cost
    return planner.solve(cost, cfg.initial_state, cfg.t_f)


def run(cfg: ScenarioConfig, abort_on_collision: bool | None = None,
        with_physical: bool = True, riccati_store_every: int | None = None) -> SimTrace:
    """Plan, solve the Riccati equation and integrate the tracked team with RK4.

    Controls (reference, gain, penalty gradient and weights) are re-evaluated at
    every RK4 stage. By default the run aborts with CollisionViolationError as
    soon as a pair enters the collision region, unless the strategy is
    ``none`` (pure tracking), in which case collisions are only recorded.
    """
    if abort_on_collision is None:
        abort_on_collision = cfg.strategy != "none"
    cost = cfg.costs()
    sol = plan(cfg, cost)
    steps = cfg.steps
    dt = cfg.dt
    h = cfg.riccati_step if cfg.riccati_step is not None else cfg.t_f / 1e4
    riccati_steps = int(np.ceil(cfg.t_f / h - 1e-9))
    if riccati_store_every is None:
        riccati_store_every = _store_stride(riccati_steps, cost.state_dim)
    ric = tracker.solve_riccati(cost, cfg.t_f, h, store_every=riccati_store_every)
    lattice = sol.lattice(dt / 2.0)

    A, B = cost.A, cost.B
    R_inv = np.linalg.inv(cost.R_z)
    safety = cfg.safety
    strategy = cfg.strategy
    literal = cfg.variant == "literal-eq19"

    feedforward = cfg.feedforward and not literal

    def control(k2, z):
        t = k2 * dt / 2.0
        r = lattice.state(k2)
        grad = collision.assemble_gradient(z, safety, strategy=strategy)
        gain = ric.gain(t)
        e = z if literal else z - r
        u = -(gain @ e) - R_inv @ (B.T @ grad.vector)
        if feedforward:
            u = u + lattice.control(k2)
        return u, r, grad

    n = cost.state_dim
    m = B.shape[1]
    z = np.array(cfg.initial_state, dtype=float)
    pairs = collision.ordered_pairs(cfg.n_uavs)
    P = len(pairs)
    K1 = steps + 1
    rec = dict(
        times=np.arange(K1) * dt, states=np.empty((K1, n)), controls=np.empty((K1, m)),
        reference=np.empty((K1, n)), reference_controls=np.empty((K1, m)),
        distances=np.empty((K1, P)), regions=np.empty((K1, P), dtype=np.int8),
        weights=np.empty((K1, P)), penalties=np.empty((K1, P)),
    )
    collided = False

    def record(k, z, u, r, grad):
        rec["states"][k] = z
        rec["controls"][k] = u
        rec["reference"][k] = r
        rec["reference_controls"][k] = lattice.control(2 * k)
        rec["distances"][k] = grad.distances
        rec["regions"][k] = grad.regions
        rec["weights"][k] = grad.weights
        rec["penalties"][k] = grad.penalties

    for k in range(steps):
        u1, r1, g1 = control(2 * k, z)
        record(k, z, u1, r1, g1)
        k1 = A @ z + B @ u1
        za = z + 0.5 * dt * k1
        k2 = A @ za + B @ control(2 * k + 1, za)[0]
        zb = z + 0.5 * dt * k2
        k3 = A @ zb + B @ control(2 * k + 1, zb)[0]
        zc = z + dt * k3
        k4 = A @ zc + B @ control(2 * k + 2, zc)[0]
        z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rep = collision.classify_regions(positions(z), safety)
        bad = np.flatnonzero((rep.regions == Region.COLLISION) | (rep.regions == Region.SINGULAR))
        if bad.size:
            collided = True
            if abort_on_collision:
                i, j = rep.pairs[bad[0]]
                t = (k + 1) * dt
                raise CollisionViolationError(
                    f"UAVs {i + 1} and {j + 1} entered the collision region at "
                    f"t={t:.4f} s (distance {rep.distances[bad[0]]:.4f} m)",
                    pair=(int(i), int(j)), time=t, distance=float(rep.distances[bad[0]]))
    u, r, g = control(2 * steps, z)
    record(steps, z, u, r, g)

    e = rec["states"] - rec["reference"]
    correction = rec["controls"] - rec["reference_controls"] if feedforward else rec["controls"]
    integrand = _tracking_integrand(e, correction, cost)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * dt * (integrand[1:] + integrand[:-1]))])
    trace = SimTrace(pairs=pairs, vhat=rec["penalties"].sum(axis=1), tracking_cost=cum,
                     config=cfg, cost=cost, collided=collided, **rec)
    if with_physical:
        trace.physical = physical_trace(trace)
    return trace


def _store_stride(steps, dim, budget_bytes=64 * 2 ** 20):
    """Smallest divisor of ``steps`` keeping the stored P grid under the budget."""
    per = dim * dim * 8 * 1.4
    for s in range(1, steps + 1):
        if steps % s == 0 and (steps // s + 1) * per <= budget_bytes:
            return s
    return steps


def physical_trace(trace: SimTrace, stride: int = 1):
    """Thrust, attitude, rates and moments along the tracked trajectory."""
    z = trace.states[::stride]
    u = trace.controls[::stride]
    yaw = yaw_levels(z)
    dt = trace.config.dt * stride
    return flatness.physical_states(accelerations(z), control_jerks(u), yaw[..., 0, :],
                                    yaw[..., 1, :], trace.config.quad, dt=dt)


def _pair_min(distances, pairs, n):
    out = {}
    for k, (i, j) in enumerate(pairs):
        if i < j:
            out[f"{i + 1}-{j + 1}"] = float(distances[:, k].min())
    return out


def metrics(trace: SimTrace) -> dict:
    """Summary numbers of a run (formation errors, separations, effort, smoothness)."""
    cfg = trace.config
    spec = cfg.formation
    n = cfg.n_uavs
    p = positions(trace.states)
    v = velocities(trace.states)
    pf, vf = p[-1], v[-1]
    terminal = {}
    for k, (i, j) in enumerate(spec.formation_graph.edges):
        terminal[f"{i + 1}-{j + 1}"] = float(np.linalg.norm(pf[i] - pf[j] - spec.offsets[k]))
    vel_consensus = float(np.sqrt(sum(np.sum((vf[i] - vf[j]) ** 2)
                                      for i, j in spec.formation_graph.edges)))
    dev = p - positions(trace.reference)
    dt = cfg.dt
    sq = np.sum(dev ** 2, axis=(1, 2))
    deviation = float(np.sqrt(np.trapezoid(sq, dx=dt)))
    u = trace.controls
    effort = float(np.trapezoid(np.einsum("ki,ij,kj->k", u, trace.cost.R_z, u), dx=dt))
    du = np.abs(np.diff(u, axis=0)).max() if len(u) > 1 else 0.0
    min_pair = _pair_min(trace.distances, trace.pairs, n) if n > 1 else {}
    return {
        "terminal_formation_error": terminal,
        "terminal_formation_error_sq_sum": float(sum(x ** 2 for x in terminal.values())),
        "velocity_consensus_error": vel_consensus,
        "min_distance": float(trace.distances.min()) if trace.distances.size else float("inf"),
        "min_distance_per_pair": min_pair,
        "tracking_deviation_l2": deviation,
        "control_effort": effort,
        "max_control_step": float(du),
        "tracking_cost": float(trace.tracking_cost[-1]),
        "peak_acceleration": float(np.linalg.norm(accelerations(trace.states), axis=-1).max()),
        "peak_jerk": float(np.linalg.norm(control_jerks(u), axis=-1).max()),
        "collided": bool(trace.collided),
    }


@dataclass(frozen=True)
class VhatReport:
    series: np.ndarray
    initial: float
    maximum: float
    delta: float
    bounded: bool
    finite: bool
    cost_finite: bool
    collision_free: bool


def monitor_vhat(trace: SimTrace, delta: float | None = None) -> VhatReport:
    """Total penalty series and the boundedness / finiteness certificates."""
    vhat = trace.vhat
    v0 = float(vhat[0])
    delta = 1e-6 * (1.0 + v0) if delta is None else float(delta)
    finite = bool(np.all(np.isfinite(vhat)))
    return VhatReport(
        series=vhat, initial=v0, maximum=float(vhat.max()), delta=delta,
        bounded=bool(np.all(vhat <= v0 + delta)), finite=finite,
        cost_finite=bool(np.isfinite(trace.tracking_cost[-1])),
        collision_free=not bool(np.any(trace.regions >= Region.COLLISION)),
    )


def planned_trajectory(cfg: ScenarioConfig, dt: float | None = None, cost=None):
    """Sample the unconstrained plan on a uniform grid: ``(times, states, controls)``."""
    sol = plan(cfg, cost)
    dt = cfg.dt * cfg.stride if dt is None else dt
    if not dt > 0:
        raise DomainError("dt must be positive")
    lat = sol.lattice(dt)
    times = np.arange(lat.count) * dt
    states = np.array([lat.state(k) for k in range(lat.count)])
    controls = np.array([lat.control(k) for k in range(lat.count)])
    return times, states, controls
