"""Online assignment of each observation to one of the two submodels.

Index 1 is the submodel ``+beta`` and index 2 is ``-beta``.  A point goes to
whichever sign gives the smaller squared residual; exact ties go to 1.
"""
import math
from dataclasses import dataclass, replace

import numpy as np


def _residuals(beta, phi, y):
    pred = float(np.dot(np.asarray(beta, float), np.asarray(phi, float)))
    y = float(y)
    if not (math.isfinite(pred) and math.isfinite(y)):
        raise ValueError("non-finite input to classifier")
    return (y - pred) ** 2, (y + pred) ** 2


def classify(beta, phi, y):
    beta, phi = np.asarray(beta, float), np.asarray(phi, float)
    if beta.shape != phi.shape:
        raise ValueError(f"dimension mismatch: beta {beta.shape}, phi {phi.shape}")
    r1, r2 = _residuals(beta, phi, y)
    return 1 if r1 <= r2 else 2


def oracle_classify(beta_star, phi, y):
    """Same rule as :func:`classify`, evaluated at the true parameter."""
    return classify(beta_star, phi, y)


def true_index(z):
    if z == 1:
        return 1
    if z == -1:
        return 2
    raise ValueError(f"label must be +1 or -1, got {z!r}")


@dataclass(frozen=True)
class ClusterMetrics:
    n: int = 0
    miss_alg: int = 0
    miss_oracle: int = 0
    miss_alg_swapped: int = 0
    J: float = 0.0
    J_oracle: float = 0.0

    def __add__(self, other):
        return ClusterMetrics(*(a + b for a, b in zip(
            (self.n, self.miss_alg, self.miss_oracle, self.miss_alg_swapped, self.J, self.J_oracle),
            (other.n, other.miss_alg, other.miss_oracle, other.miss_alg_swapped, other.J, other.J_oracle))))


def update_metrics(m, beta_k, beta_star, phi, y, z):
    """Fold one observation into the running counts and within-cluster error."""
    truth = true_index(z)
    r1, r2 = _residuals(beta_k, phi, y)
    est = 1 if r1 <= r2 else 2
    o1, o2 = _residuals(beta_star, phi, y)
    orc = 1 if o1 <= o2 else 2
    return replace(
        m,
        n=m.n + 1,
        miss_alg=m.miss_alg + (est != truth),
        miss_oracle=m.miss_oracle + (orc != truth),
        miss_alg_swapped=m.miss_alg_swapped + (est == truth),
        J=m.J + (r1 if est == 1 else r2),
        J_oracle=m.J_oracle + (o1 if orc == 1 else o2),
    )


def misclass_gap(m, aligned=False):
    """|miss_alg - miss_oracle| / n.

    With ``aligned=True`` the algorithm's count is taken under whichever
    labelling of the two clusters fits better, which matters when p < 1/2
    and the estimate targets -beta*.
    """
    if m.n < 1:
        raise ValueError("misclass_gap needs at least one observation")
    miss = min(m.miss_alg, m.miss_alg_swapped) if aligned else m.miss_alg
    return abs(miss - m.miss_oracle) / m.n


@dataclass
class MetricsTrace:
    """Cumulative metrics after each of ``n = 1..N`` observations."""

    miss_alg: np.ndarray
    miss_oracle: np.ndarray
    miss_alg_swapped: np.ndarray
    J: np.ndarray
    J_oracle: np.ndarray

    def at(self, k, n=None):
        """Metrics after the k-th observation of this trace (labelled ``n`` if given)."""
        i = k - 1
        return ClusterMetrics(k if n is None else n, int(self.miss_alg[i]), int(self.miss_oracle[i]),
                              int(self.miss_alg_swapped[i]), float(self.J[i]), float(self.J_oracle[i]))


def stream_metrics(beta_pre, beta_star, phis, ys, zs, start=None):
    """Vectorised :func:`update_metrics` over a whole block.

    ``beta_pre[k]`` must be the estimate in force when observation k arrived.
    ``start`` continues the counts from an earlier block.
    """
    phis = np.asarray(phis, float)
    ys = np.asarray(ys, float)
    zs = np.asarray(zs)
    if np.any((zs != 1) & (zs != -1)):
        raise ValueError("labels must be +1 or -1")
    pred = np.einsum("ij,ij->i", np.asarray(beta_pre, float), phis)
    r1, r2 = (ys - pred) ** 2, (ys + pred) ** 2
    est = np.where(r1 <= r2, 1, 2)
    ps = phis @ np.asarray(beta_star, float)
    o1, o2 = (ys - ps) ** 2, (ys + ps) ** 2
    orc = np.where(o1 <= o2, 1, 2)
    truth = np.where(zs == 1, 1, 2)
    s = start or ClusterMetrics()
    return MetricsTrace(
        s.miss_alg + np.cumsum(est != truth),
        s.miss_oracle + np.cumsum(orc != truth),
        s.miss_alg_swapped + np.cumsum(est == truth),
        s.J + np.cumsum(np.minimum(r1, r2)),
        s.J_oracle + np.cumsum(np.minimum(o1, o2)),
    )
