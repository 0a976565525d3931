"""Finite-horizon Riccati tracking with optional collision-penalty forcing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RiccatiDivergenceError
from .flat_dynamics import CostMatrices
from .planner import build_hamiltonian, hamiltonian_blocks

DIVERGENCE_NORM = 1e12
VARIANTS = ("consistent", "literal-eq19")


def riccati_rhs(P, A, S, K):
    """dP/dtau for backward time tau = t_f - t (i.e. minus dP/dt)."""
    PA = P @ A
    return PA + PA.T - P @ S @ P + K


@dataclass(frozen=True)
class RiccatiSolution:
    """P(t) on a uniform grid ``times`` (ascending), linearly interpolated."""

    times: np.ndarray
    P: np.ndarray
    h: float
    t_f: float
    gains: np.ndarray

    def _locate(self, t):
        if not (-1e-12 <= t <= self.t_f + 1e-12):
            raise DomainError(f"t={t} outside [0, {self.t_f}]")
        step = self.times[1] - self.times[0] if self.times.size > 1 else 1.0
        x = min(max(t, 0.0), self.t_f) / step
        k = min(int(np.floor(x)), self.times.size - 2)
        k = max(k, 0)
        return k, x - k

    def at(self, t):
        if self.times.size == 1:
            return self.P[0]
        k, a = self._locate(t)
        if a == 0.0:
            return self.P[k]
        return (1.0 - a) * self.P[k] + a * self.P[k + 1]

    def gain(self, t):
        """``R_z^-1 B^T P(t)`` interpolated the same way as P."""
        if self.times.size == 1:
            return self.gains[0]
        k, a = self._locate(t)
        if a == 0.0:
            return self.gains[k]
        return (1.0 - a) * self.gains[k] + a * self.gains[k + 1]


def solve_riccati(cost: CostMatrices, t_f: float, h: float | None = None,
                  store_every: int = 1) -> RiccatiSolution:
    """Backward RK4 integration of the Riccati equation from ``P(t_f) = K_f``.

    ``h`` defaults to ``t_f / 1e4`` and is shrunk so that it divides ``t_f``.
    Every ``store_every``-th grid point is kept; P is symmetrised after each step.
    """
    if not t_f > 0:
        raise DomainError("t_f must be positive")
    if h is None:
        h = t_f / 1e4
    if not h > 0:
        raise DomainError("Riccati step must be positive")
    steps = int(np.ceil(t_f / h - 1e-9))
    h = t_f / steps
    store_every = max(1, int(store_every))
    if steps % store_every:
        raise DomainError(f"store_every={store_every} must divide the {steps} steps")
    A, B = cost.A, cost.B
    R_inv_Bt = np.linalg.solve(cost.R_z, B.T)
    S = B @ R_inv_Bt
    K = cost.K
    P = np.array(cost.K_f, dtype=float)
    stored = [P.copy()]
    for k in range(steps):
        k1 = riccati_rhs(P, A, S, K)
        k2 = riccati_rhs(P + 0.5 * h * k1, A, S, K)
        k3 = riccati_rhs(P + 0.5 * h * k2, A, S, K)
        k4 = riccati_rhs(P + h * k3, A, S, K)
        P = P + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        P = 0.5 * (P + P.T)
        norm = np.abs(P).max()
        if not np.isfinite(norm) or norm > DIVERGENCE_NORM:
            raise RiccatiDivergenceError(
                f"Riccati solution diverged at t={t_f - (k + 1) * h:.6g} s")
        if (k + 1) % store_every == 0:
            stored.append(P.copy())
    stored.reverse()
    Ps = np.array(stored)
    Ps[-1] = cost.K_f
    times = np.linspace(0.0, t_f, Ps.shape[0])
    gains = np.einsum("ij,kjl->kil", R_inv_Bt, Ps)
    return RiccatiSolution(times=times, P=Ps, h=h, t_f=float(t_f), gains=gains)


def riccati_closed_form(cost: CostMatrices, t_f: float, t: float) -> np.ndarray:
    """P(t) = G(t_f - t) H(t_f - t)^-1 from the tracking Hamiltonian."""
    tc = cost.tracking_view()
    M = build_hamiltonian(tc)
    H, G = hamiltonian_blocks(M, tc.Q_f, t_f - t)
    return np.linalg.solve(H.T, G.T).T


def feedback_control(P_t, z, r_ref, cost: CostMatrices) -> np.ndarray:
    """Safety-region tracking law ``-R_z^-1 B^T P (z - r)``."""
    return -np.linalg.solve(cost.R_z, cost.B.T @ (P_t @ (np.asarray(z) - r_ref)))


def avoidance_control(P_t, z, r_ref, cost: CostMatrices, grad_V,
                      variant: str = "consistent") -> np.ndarray:
    """Tracking law with the collision-penalty gradient added.

    ``consistent``: ``-R_z^-1 B^T (P (z - r) + grad_V)``, which reduces to
    :func:`feedback_control` when the gradient vanishes.
    ``literal-eq19``: ``-R_z^-1 B^T (P z + grad_V)`` (no reference term).
    """
    z = np.asarray(z)
    if variant == "consistent":
        e = P_t @ (z - r_ref)
    elif variant == "literal-eq19":
        e = P_t @ z
    else:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return -np.linalg.solve(cost.R_z, cost.B.T @ (e + grad_V))


def value_function(P_t, z, r_ref) -> float:
    e = np.asarray(z) - r_ref
    return float(e @ P_t @ e)
