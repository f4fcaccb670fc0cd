"""Reference computations used as oracles for the recursive estimator."""
from dataclasses import dataclass

import numpy as np

from .linalg import inv_spd, is_spd, solve_spd, sym, sym_eigvals


@dataclass
class BatchProblem:
    phis: np.ndarray
    ys: np.ndarray
    theta0: np.ndarray
    P0: np.ndarray
    delta: float = 0.0

    def __post_init__(self):
        self.theta0 = np.asarray(self.theta0, float)
        d = len(self.theta0)
        self.phis = np.asarray(self.phis, float).reshape(-1, d)
        self.ys = np.asarray(self.ys, float).reshape(-1)
        self.P0 = np.asarray(self.P0, float)
        if len(self.phis) != len(self.ys):
            raise ValueError("phis and ys differ in length")
        if self.P0.shape != (d, d) or not is_spd(self.P0):
            raise ValueError("P0 must be SPD")


def batch_weighted_ls(prob):
    """Regularised weighted LS solution over all observations in ``prob``.

    Minimises  sum_k k**(-delta) (y_k - theta^T phi_k)^2
               + (theta - theta0)^T P0^{-1} (theta - theta0)
    with k = 1, 2, ... by solving the normal equations.
    """
    P0inv = inv_spd(prob.P0)
    k = np.arange(1, len(prob.ys) + 1, dtype=float)
    wts = k ** (-prob.delta)
    A = P0inv + (prob.phis * wts[:, None]).T @ prob.phis
    b = P0inv @ prob.theta0 + prob.phis.T @ (wts * prob.ys)
    return solve_spd(sym(A), b)


def offline_em_q(u, y, q, sigma2):
    """Scaling estimate from a recorded run.

    ``u[k] = theta_k^T phi_k``, ``y[k]`` the matching output and ``q[k]`` the
    scaling estimate in force at step k.  Returns
    sum y tanh(q u y / sigma2) / sum u^2.
    """
    u, y, q = (np.asarray(a, float) for a in (u, y, q))
    den = float(np.sum(u * u))
    if den == 0.0:
        raise ValueError("no excitation: sum of u^2 is zero")
    return float(np.sum(y * np.tanh(q * u * y / sigma2)) / den)


def offline_em_q_fixed_point(u, y, sigma2, q0=1.0, tol=1e-10, max_iter=10_000):
    """Iterate the same quotient with the direction frozen until q settles."""
    u, y = np.asarray(u, float), np.asarray(y, float)
    q = float(q0)
    for _ in range(max_iter):
        q_new = offline_em_q(u, y, np.full_like(u, q), sigma2)
        if abs(q_new - q) < tol:
            return q_new
        q = q_new
    raise RuntimeError(f"fixed-point iteration did not settle in {max_iter} iterations")


def geometric_checkpoints(N, base=2):
    pts, k = [], 1
    while k <= N:
        pts.append(k)
        k *= base
    return pts


def gram_lambda(phis, P0, checkpoints=None):
    """Extreme eigenvalues of P0^{-1} + sum_{k<=n} phi_k phi_k^T at checkpoints.

    Returns an array of rows ``(n, lambda_min, lambda_max)``.  A checkpoint of 0
    gives the eigenvalues of P0^{-1} alone.
    """
    phis = np.asarray(phis, float)
    N = len(phis)
    if checkpoints is None:
        checkpoints = [0] + geometric_checkpoints(N)
    checkpoints = sorted(set(int(c) for c in checkpoints))
    if checkpoints and (checkpoints[0] < 0 or checkpoints[-1] > N):
        raise ValueError(f"checkpoints must lie in [0, {N}]")
    M = inv_spd(P0)
    out, done = [], 0
    for n in checkpoints:
        block = phis[done:n]
        M = M + block.T @ block
        done = n
        lam = sym_eigvals(M)
        out.append((n, lam[0], lam[-1]))
    return np.array(out, dtype=float).reshape(-1, 3)
