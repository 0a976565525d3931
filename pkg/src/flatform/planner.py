"""Closed-form finite-horizon formation planner.

With the Hamiltonian ``M = [[A, -B R^-1 B^T], [-Q, -A^T]]`` and

    H(t) = [I 0] exp(-t M) [I; Q_f],    G(t) = [0 I] exp(-t M) [I; Q_f],

the optimal trajectory is ``r(t) = H(t_f - t) w`` and the optimal jerk is
``u(t) = -R^-1 B^T G(t_f - t) w`` where ``H(t_f) w = r_0``. The co-state is
``G(t_f - t) w``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import DomainError, PlannerSingularError
from .expm import matrix_exponential
from .flat_dynamics import CostMatrices

RCOND_MIN = 1e-12
_T_EPS = 1e-12


def build_hamiltonian(cost: CostMatrices) -> np.ndarray:
    A, B = cost.A, cost.B
    n = A.shape[0]
    S = B @ np.linalg.solve(cost.R, B.T)
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = A
    M[:n, n:] = -S
    M[n:, :n] = -cost.Q
    M[n:, n:] = -A.T
    return M


def _boundary_stack(Q_f):
    n = Q_f.shape[0]
    return np.vstack([np.eye(n), Q_f])


def hamiltonian_blocks(M, Q_f, t):
    """``(H(t), G(t))`` evaluated with a fresh matrix exponential."""
    n = Q_f.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):
        E = matrix_exponential(-t * M) @ _boundary_stack(Q_f)
    return E[:n], E[n:]


@dataclass(frozen=True)
class PlannerSolution:
    M: np.ndarray
    cost: CostMatrices
    t_f: float
    r0: np.ndarray
    lu: tuple
    w: np.ndarray
    rcond: float

    @property
    def state_dim(self):
        return self.r0.shape[0]

    def _check_time(self, t):
        if not (-_T_EPS <= t <= self.t_f + _T_EPS):
            raise DomainError(f"t={t} outside the planning horizon [0, {self.t_f}]")
        return min(max(float(t), 0.0), self.t_f)

    def augmented(self, t):
        """Stacked ``[r(t); costate(t)]`` at one time."""
        t = self._check_time(t)
        y0 = _boundary_stack(self.cost.Q_f) @ self.w
        return matrix_exponential(-(self.t_f - t) * self.M) @ y0

    def costate(self, t):
        return self.augmented(t)[self.state_dim:]

    def control_from_costate(self, lam):
        B, R = self.cost.B, self.cost.R
        return -np.linalg.solve(R, B.T @ lam)

    def sample_state(self, t) -> np.ndarray:
        r = self.augmented(t)[:self.state_dim]
        r[-1] = 1.0
        return r

    def sample_control(self, t) -> np.ndarray:
        return self.control_from_costate(self.costate(t))

    def sample(self, times):
        """States ``(K, n)`` and controls ``(K, 4N)`` at arbitrary times."""
        times = np.asarray(times, dtype=float)
        states = np.empty((times.size, self.state_dim))
        controls = np.empty((times.size, self.cost.B.shape[1]))
        for k, t in enumerate(times):
            y = self.augmented(t)
            states[k] = y[:self.state_dim]
            controls[k] = self.control_from_costate(y[self.state_dim:])
        states[:, -1] = 1.0
        return states, controls

    def lattice(self, step, block=None):
        return LatticeSampler(self, step, block)


def solve(cost: CostMatrices, r0, t_f: float) -> PlannerSolution:
    """Optimal formation plan from ``r0`` over ``[0, t_f]``."""
    if not t_f > 0:
        raise DomainError("horizon t_f must be positive")
    r0 = np.array(r0, dtype=float)
    if r0.shape != (cost.state_dim,):
        raise DomainError(f"r0 has shape {r0.shape}, expected ({cost.state_dim},)")
    M = build_hamiltonian(cost)
    H, _ = hamiltonian_blocks(M, cost.Q_f, t_f)
    if not np.all(np.isfinite(H)):
        raise PlannerSingularError("H(t_f) has non-finite entries", rcond=0.0)
    rcond = 1.0 / np.linalg.cond(H, 1)
    if not rcond >= RCOND_MIN:
        raise PlannerSingularError(
            f"H(t_f) is numerically singular (reciprocal condition {rcond:.3e})",
            rcond=rcond)
    lu = lu_factor(H)
    w = lu_solve(lu, r0)
    return PlannerSolution(M=M, cost=cost, t_f=float(t_f), r0=r0, lu=lu, w=w, rcond=rcond)


class LatticeSampler:
    """Plan samples on the uniform lattice ``t_k = k * step``.

    ``exp((t_k - t_f) M) y0`` is split as ``exp(s * step * M) @ c_q`` with
    ``k = q * block + s``. Every coarse vector ``c_q`` and every fine matrix is
    a fresh exponential, so each sample is at most one product away from a
    direct evaluation (no accumulated stepping).
    """

    def __init__(self, sol: PlannerSolution, step: float, block: int | None = None):
        if not step > 0:
            raise DomainError("lattice step must be positive")
        self.sol = sol
        self.step = float(step)
        self.count = int(np.floor(sol.t_f / step + 1e-9)) + 1
        if block is None:
            block = max(1, int(round(np.sqrt(self.count))))
        self.block = block
        y0 = _boundary_stack(sol.cost.Q_f) @ sol.w
        n_coarse = (self.count - 1) // block + 1
        self._coarse = [matrix_exponential((q * block * self.step - sol.t_f) * sol.M) @ y0
                        for q in range(n_coarse)]
        self._fine = [matrix_exponential(s * self.step * sol.M)
                      for s in range(min(block, self.count))]
        self._cache = {}

    def augmented(self, k):
        if not 0 <= k < self.count:
            raise DomainError(f"lattice index {k} outside [0, {self.count})")
        y = self._cache.get(k)
        if y is None:
            q, s = divmod(k, self.block)
            y = self._fine[s] @ self._coarse[q]
            self._cache[k] = y
        return y

    def state(self, k):
        r = self.augmented(k)[:self.sol.state_dim].copy()
        r[-1] = 1.0
        return r

    def control(self, k):
        return self.sol.control_from_costate(self.augmented(k)[self.sol.state_dim:])

    def time(self, k):
        return k * self.step
