"""Scenario configuration files (TOML) and the bundled fixtures.

Grammar (all lengths in metres, times in seconds; UAV indices are 1-based)::

    [scenario]              name, t_f, dt, riccati_step?, stride, strategy,
                            variant, epsilon
    [formation]             n_uavs, edges = [[i, j], ...], mu, omega,
                            offsets = [[dx, dy, dz], ...], gamma
    [tracking]   optional   zeta, delta, eta (one value per UAV)
    [safety]                r, R (scalar or one value per UAV)
    [quadrotor]  optional   mass, arm_length, gravity, inertia
    [[uav]]      one table per UAV: position, velocity?, acceleration?,
                            yaw?, yaw_rate?, yaw_acc?

``gamma``, ``r`` and ``R`` may be scalars (broadcast to every UAV). Missing
optional per-UAV derivatives default to zero.
"""
from __future__ import annotations

import hashlib
import re
from importlib import resources
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .collision import SafetyConfig
from .errors import ConfigError
from .flat_dynamics import pack_state, positions, velocities, accelerations, yaw_levels
from .flatness import QuadrotorParams
from .graph import DirectedGraph, FormationSpec
from .sim import ScenarioConfig

FIXTURES = ("four_uav", "seven_uav", "seven_uav_feasible")

_SCHEMA = {
    "scenario": ({"name", "t_f", "dt", "riccati_step", "stride", "strategy", "variant",
                  "epsilon"}, {"t_f"}),
    "formation": ({"n_uavs", "edges", "mu", "omega", "offsets", "gamma"},
                  {"n_uavs", "edges", "mu", "omega", "offsets"}),
    "tracking": ({"zeta", "delta", "eta"}, set()),
    "safety": ({"r", "R"}, {"r"}),
    "quadrotor": ({"mass", "arm_length", "gravity", "inertia"}, set()),
    "uav": ({"position", "velocity", "acceleration", "yaw", "yaw_rate", "yaw_acc"},
            {"position"}),
}
_REQUIRED_SECTIONS = ("scenario", "formation", "safety", "uav")


class _Lines:
    """Locate the source line of ``section.key`` for error messages."""

    _header = re.compile(r"^\s*\[\[?\s*([A-Za-z0-9_\-]+)\s*\]\]?")
    _key = re.compile(r"^\s*([A-Za-z0-9_\-]+)\s*=")

    def __init__(self, text):
        self.table = {}
        section, uav = None, -1
        for lineno, line in enumerate(text.splitlines(), start=1):
            m = self._header.match(line)
            if m:
                section = m.group(1)
                if section == "uav":
                    uav += 1
                self.table.setdefault((section, uav if section == "uav" else None, None), lineno)
                continue
            m = self._key.match(line)
            if m and section is not None:
                idx = uav if section == "uav" else None
                self.table.setdefault((section, idx, m.group(1)), lineno)

    def of(self, section, key=None, index=None):
        return (self.table.get((section, index, key))
                or self.table.get((section, index, None)))


def _fail(msg, lines, section, key=None, index=None):
    name = section if key is None else f"{section}.{key}"
    if index is not None:
        name = f"uav[{index + 1}].{key}" if key else f"uav[{index + 1}]"
    raise ConfigError(msg, key=name, line=lines.of(section, key, index) if lines else None)


def _check_keys(table, section, lines, index=None):
    allowed, required = _SCHEMA[section]
    for key in table:
        if key not in allowed:
            _fail(f"unknown key {key!r} in [{section}]", lines, section, key, index)
    for key in sorted(required - set(table)):
        _fail(f"missing required key {key!r} in [{section}]", lines, section, None, index)


def _per_uav(value, n, section, key, lines):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        _fail(f"expected a scalar or {n} values", lines, section, key)
    return arr


def _vec3(value, section, key, lines, index):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        _fail("expected a 3-vector", lines, section, key, index)
    return arr


def from_dict(data: dict, lines: _Lines | None = None) -> ScenarioConfig:
    """Build a validated ScenarioConfig from already-parsed TOML data."""
    for section in data:
        if section not in _SCHEMA:
            _fail(f"unknown section [{section}]", lines, section)
    for section in _REQUIRED_SECTIONS:
        if section not in data:
            raise ConfigError(f"missing required section [{section}]", key=section)
    for section in _SCHEMA:
        if section == "uav" or section not in data:
            continue
        if not isinstance(data[section], dict):
            _fail(f"[{section}] must be a table", lines, section)
        _check_keys(data[section], section, lines)
    uavs = data["uav"]
    if not isinstance(uavs, list):
        _fail("UAVs must be given as [[uav]] tables", lines, "uav")
    for k, u in enumerate(uavs):
        _check_keys(u, "uav", lines, k)

    sc, fm, sf = data["scenario"], data["formation"], data["safety"]
    n = fm["n_uavs"]
    if not isinstance(n, int) or n < 1:
        _fail("n_uavs must be a positive integer", lines, "formation", "n_uavs")
    if len(uavs) != n:
        _fail(f"expected {n} [[uav]] tables, got {len(uavs)}", lines, "uav")
    try:
        edges = [tuple(int(x) for x in e) for e in fm["edges"]]
        if any(len(e) != 2 for e in edges):
            raise ValueError
    except (TypeError, ValueError):
        _fail("edges must be a list of [i, j] pairs", lines, "formation", "edges")
    try:
        graph = DirectedGraph.from_one_based(n, edges)
    except ConfigError as exc:
        _fail(str(exc), lines, "formation", "edges")
    try:
        spec = FormationSpec(
            graph, np.asarray(fm["mu"], dtype=float), np.asarray(fm["omega"], dtype=float),
            np.asarray(fm["offsets"], dtype=float).reshape(-1, 3) if len(fm["offsets"])
            else np.zeros((0, 3)),
            _per_uav(fm.get("gamma", 1.0), n, "formation", "gamma", lines))
    except ConfigError as exc:
        _fail(str(exc).split(" (key")[0], lines, "formation", exc.key)
    except ValueError as exc:
        _fail(str(exc), lines, "formation", "offsets")

    strategy = sc.get("strategy", "unified")
    try:
        safety = SafetyConfig(_per_uav(sf["r"], n, "safety", "r", lines),
                              _per_uav(sf.get("R", 2.0 * np.asarray(sf["r"], dtype=float)),
                                       n, "safety", "R", lines), strategy)
    except ConfigError as exc:
        key = "strategy" if exc.key == "strategy" else "r"
        _fail(str(exc).split(" (key")[0], lines, "scenario" if key == "strategy" else "safety", key)

    tr = data.get("tracking", {})
    tracking = {k: _per_uav(tr[k], n, "tracking", k, lines) if k in tr else None
                for k in ("zeta", "delta", "eta")}
    qd = data.get("quadrotor", {})
    try:
        quad = QuadrotorParams(**{k: qd[k] for k in qd})
    except ConfigError as exc:
        _fail(str(exc).split(" (key")[0], lines, "quadrotor", exc.key)

    p = np.array([_vec3(u["position"], "uav", "position", lines, k) for k, u in enumerate(uavs)])
    def level(name):
        return np.array([_vec3(u.get(name, [0.0, 0.0, 0.0]), "uav", name, lines, k)
                         for k, u in enumerate(uavs)])
    yaw = {name: np.array([float(u.get(name, 0.0)) for u in uavs])
           for name in ("yaw", "yaw_rate", "yaw_acc")}
    r0 = pack_state(p, level("velocity"), level("acceleration"), yaw["yaw"],
                    yaw["yaw_rate"], yaw["yaw_acc"])
    kwargs = dict(t_f=sc["t_f"], dt=sc.get("dt", 1e-3), riccati_step=sc.get("riccati_step"),
                  quad=quad, variant=sc.get("variant", "consistent"),
                  stride=sc.get("stride", 10), epsilon=sc.get("epsilon", 1e-3),
                  name=sc.get("name", "scenario"), **tracking)
    try:
        return ScenarioConfig(spec, safety, r0, **kwargs)
    except ConfigError as exc:
        key = exc.key or ""
        section, k = ("uav", None) if key in ("uav", "safety") else ("scenario", key)
        raise ConfigError(str(exc).split(" (key")[0], key=key,
                          line=lines.of(section, k) if lines else None) from None


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate TOML scenario text.

    Errors (bad syntax, unknown or missing keys, violated invariants) raise
    ConfigError carrying the offending key and, when known, its line.
    """
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"malformed TOML: {exc}",
                          line=int(m.group(1)) if m else None) from None
    return from_dict(data, _Lines(text))


def _floats(a):
    return [float(x) for x in np.asarray(a).reshape(-1)]


def to_dict(cfg: ScenarioConfig) -> dict:
    """Plain-data form of a config; ``from_dict(to_dict(c))`` rebuilds ``c``."""
    spec = cfg.formation
    n = cfg.n_uavs
    r0 = cfg.initial_state
    p, v, a = positions(r0), velocities(r0), accelerations(r0)
    yaw = yaw_levels(r0)
    scenario = {"name": cfg.name, "t_f": float(cfg.t_f), "dt": float(cfg.dt),
                "stride": int(cfg.stride), "strategy": cfg.strategy, "variant": cfg.variant,
                "epsilon": float(cfg.epsilon)}
    if cfg.riccati_step is not None:
        scenario["riccati_step"] = float(cfg.riccati_step)
    out = {
        "scenario": scenario,
        "formation": {
            "n_uavs": n,
            "edges": [list(e) for e in spec.formation_graph.one_based_edges()],
            "mu": _floats(spec.mu), "omega": _floats(spec.omega),
            "offsets": [_floats(d) for d in spec.offsets], "gamma": _floats(spec.gamma),
        },
        "safety": {"r": _floats(cfg.safety.r), "R": _floats(cfg.safety.R)},
        "quadrotor": {"mass": float(cfg.quad.mass), "arm_length": float(cfg.quad.arm_length),
                      "gravity": float(cfg.quad.gravity), "inertia": _floats(cfg.quad.inertia)},
        "uav": [{"position": _floats(p[i]), "velocity": _floats(v[i]),
                 "acceleration": _floats(a[i]), "yaw": float(yaw[0, i]),
                 "yaw_rate": float(yaw[1, i]), "yaw_acc": float(yaw[2, i])}
                for i in range(n)],
    }
    tracking = {k: _floats(getattr(cfg, k)) for k in ("zeta", "delta", "eta")
                if getattr(cfg, k) is not None}
    if tracking:
        out["tracking"] = tracking
    return out


def serialize(cfg: ScenarioConfig) -> str:
    """TOML text for ``cfg`` (floats use Python's shortest round-trip repr)."""
    return tomli_w.dumps(to_dict(cfg))


def config_hash(cfg: ScenarioConfig) -> str:
    return hashlib.sha256(serialize(cfg).encode()).hexdigest()


def configs_equal(a: ScenarioConfig, b: ScenarioConfig) -> bool:
    return to_dict(a) == to_dict(b)


def fixture_text(name: str) -> str:
    if name not in FIXTURES:
        raise ConfigError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}",
                          key="config")
    return resources.files("flatform.fixtures").joinpath(f"{name}.toml").read_text()


def load_fixture(name: str) -> ScenarioConfig:
    return parse_config(fixture_text(name))


def load(path_or_name) -> ScenarioConfig:
    """Load a config file, or a bundled fixture when given its bare name."""
    path = Path(path_or_name)
    if path.is_file():
        return parse_config(path.read_text())
    if str(path_or_name) in FIXTURES:
        return load_fixture(str(path_or_name))
    raise ConfigError(f"config file {str(path_or_name)!r} not found", key="config")
