"""Independent reference implementations used only by the test-suite.

Nothing here calls into flatform's numerical kernels: matrix exponentials come
from scipy or a plain Taylor series, costs are summed pair by pair, and the
planner oracle is a discrete-time LQ backward sweep.
"""
import numpy as np
from scipy.linalg import expm


def taylor_expm(m, terms=200):
    out = np.eye(m.shape[0])
    term = np.eye(m.shape[0])
    for k in range(1, terms):
        term = term @ m / k
        out = out + term
    return out


def unpack(r, n):
    """Positions, yaw, velocities, yaw rates ... from a flat team state, by hand."""
    p = r[0:3 * n].reshape(n, 3)
    psi = r[3 * n:4 * n]
    v = r[4 * n:7 * n].reshape(n, 3)
    psid = r[7 * n:8 * n]
    a = r[8 * n:11 * n].reshape(n, 3)
    psidd = r[11 * n:12 * n]
    return p, psi, v, psid, a, psidd


def pairwise_formation_cost(r, edges, weights, offsets, n):
    """sum_k w_k (|p_i - p_j - d_k|^2 + |v_i - v_j|^2) over formation edges (0-based)."""
    p, _, v, _, _, _ = unpack(r, n)
    total = 0.0
    for (i, j), w, d in zip(edges, weights, offsets):
        total += w * (np.sum((p[i] - p[j] - d) ** 2) + np.sum((v[i] - v[j]) ** 2))
    return total


def hand_system_matrices(n):
    """A and B built entry by entry from the triple-integrator definition."""
    dim = 12 * n + 1
    A = np.zeros((dim, dim))
    B = np.zeros((dim, 4 * n))
    for c in range(4 * n):
        A[c, 4 * n + c] = 1.0          # position-level <- velocity-level
        A[4 * n + c, 8 * n + c] = 1.0  # velocity-level <- acceleration-level
        B[8 * n + c, c] = 1.0          # acceleration-level <- jerk
    return A, B


def hand_hamiltonian(A, B, Q, R):
    n = A.shape[0]
    M = np.zeros((2 * n, 2 * n))
    S = B @ np.linalg.inv(R) @ B.T
    for i in range(n):
        for j in range(n):
            M[i, j] = A[i, j]
            M[i, n + j] = -S[i, j]
            M[n + i, j] = -Q[i, j]
            M[n + i, n + j] = -A[j, i]
    return M


def van_loan_zoh(A, B, Q, R, dt):
    """Exact zero-order-hold discretisation of dynamics and running cost.

    Returns (Ad, Bd, Qd, Nd, Rd) such that the integral of x'Qx + u'Ru over one
    step with constant u equals x'Qd x + 2 x'Nd u + u'Rd u.
    """
    n, m = B.shape
    F = np.zeros((n + m, n + m))
    F[:n, :n] = A
    F[:n, n:] = B
    C = np.zeros((2 * (n + m), 2 * (n + m)))
    W = np.zeros((n + m, n + m))
    W[:n, :n] = Q
    W[n:, n:] = R
    C[:n + m, :n + m] = -F.T
    C[:n + m, n + m:] = W
    C[n + m:, n + m:] = F
    E = expm(C * dt)
    Phi = E[n + m:, n + m:]
    G = Phi.T @ E[:n + m, n + m:]
    G = 0.5 * (G + G.T)
    return Phi[:n, :n], Phi[:n, n:], G[:n, :n], G[:n, n:], G[n:, n:]


def discrete_lq_oracle(A, B, Q, Q_f, R, x0, t_f, dt):
    """Finite-horizon LQ on ZOH-discretised dynamics via backward Riccati recursion.

    Returns the state sequence x_k at t_k = k dt, k = 0..t_f/dt.
    """
    steps = int(round(t_f / dt))
    Ad, Bd, Qd, Nd, Rd = van_loan_zoh(A, B, Q, R, dt)
    P = Q_f.copy()
    gains = []
    for _ in range(steps):
        H = Rd + Bd.T @ P @ Bd
        Kk = np.linalg.solve(H, Bd.T @ P @ Ad + Nd.T)
        P = Qd + Ad.T @ P @ Ad - (Ad.T @ P @ Bd + Nd) @ Kk
        P = 0.5 * (P + P.T)
        gains.append(Kk)
    gains.reverse()
    xs = np.empty((steps + 1, x0.size))
    xs[0] = x0
    for k in range(steps):
        xs[k + 1] = Ad @ xs[k] - Bd @ (gains[k] @ xs[k])
    return xs


def central_diff(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rotation_error(R):
    return np.abs(np.swapaxes(R, -1, -2) @ R - np.eye(3)).max()
