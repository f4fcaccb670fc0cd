"""Bound curves and empirical rate fits for the convergence results."""
import math
from dataclasses import dataclass, field

import numpy as np


def kappa(delta, epsilon=0.01):
    """max(1/2 + delta + eps, (2 + delta)/3 + eps); must stay below 1."""
    if not 0.0 <= delta < 0.5:
        raise ValueError("delta must lie in [0, 1/2)")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    k = max(0.5 + delta + epsilon, (2.0 + delta) / 3.0 + epsilon)
    if k >= 1.0:
        raise ValueError(f"epsilon too large: kappa = {k} >= 1")
    return k


@dataclass
class RateParams:
    delta: float = 0.1
    epsilon: float = 0.01
    kappa: float = field(init=False)

    def __post_init__(self):
        self.kappa = kappa(self.delta, self.epsilon)


def thm1_bound(n, lambda_min, kappa_):
    """n**kappa / lambda_min(n), pointwise."""
    n = np.asarray(n, float)
    lam = np.asarray(lambda_min, float)
    if np.any(lam <= 0):
        raise ValueError("lambda_min must be positive")
    return n ** kappa_ / lam


def thm2_bound(n, delta):
    """sqrt(ln n / n**(1 - delta)); zero at n = 1."""
    n = np.asarray(n, float)
    if np.any(n < 1):
        raise ValueError("thm2_bound needs n >= 1")
    out = np.sqrt(np.log(n) / n ** (1.0 - delta))
    return float(out) if out.ndim == 0 else out


def thm3_excess(J, n, sigma2, kappa_):
    """(J/n - sigma2) * n**((1 - kappa)/2): bounded above if J/n approaches sigma2 at the rate."""
    n = np.asarray(n, float)
    if np.any(n <= 0):
        raise ValueError("thm3_excess needs n >= 1")
    out = (np.asarray(J, float) / n - sigma2) * n ** ((1.0 - kappa_) / 2.0)
    return float(out) if out.ndim == 0 else out


def _window(n, v, window):
    n = np.asarray(n, float)
    v = np.asarray(v, float)
    lo, hi = window if window is not None else (-math.inf, math.inf)
    mask = (n >= lo) & (n <= hi)
    if mask.sum() < 5:
        raise ValueError(f"need at least 5 points in window {window}, got {int(mask.sum())}")
    return n[mask], v[mask]


def loglog_slope(n, v, window=None):
    """OLS slope of ln v against ln n over ``window = (n_lo, n_hi)``."""
    n, v = _window(n, v, window)
    if np.any(v <= 0):
        raise ValueError("loglog_slope needs positive values")
    return float(np.polyfit(np.log(n), np.log(v), 1)[0])


def semilog_slope(n, v, window=None):
    """OLS slope of v against ln n; used for trends of signed quantities."""
    n, v = _window(n, v, window)
    return float(np.polyfit(np.log(n), v, 1)[0])
