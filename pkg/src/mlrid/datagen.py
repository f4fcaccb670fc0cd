"""Seeded synthetic streams for the two-component symmetric MLR model.

Each stream owns three independent Philox substreams (labels, noise,
regressor input) spawned from one seed, and turns uniforms into Gaussians
with Box-Muller.  Every Gaussian consumes exactly two uniforms, so drawing
``n`` observations in one block or one at a time yields the same bits.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .linalg import cholesky, is_spd


@dataclass(frozen=True)
class IIDGaussian:
    covariance: np.ndarray = None
    kind = "iid_gaussian"


@dataclass(frozen=True)
class AR1:
    """phi_{n+1} = a * phi_n + n**(-gamma) * e_{n+1}, e ~ N(0, I)."""

    a: float = 0.8
    gamma: float = 0.1
    kind = "ar1"


@dataclass(frozen=True)
class BoundedSphere:
    radius: float = 1.0
    kind = "bounded_sphere"


def regressor_from_dict(spec):
    spec = dict(spec)
    kind = spec.pop("kind", None)
    table = {"iid_gaussian": IIDGaussian, "ar1": AR1, "bounded_sphere": BoundedSphere}
    if kind not in table:
        raise ValueError(f"unknown regressor kind {kind!r}; expected one of {sorted(table)}")
    return table[kind](**spec)


def regressor_to_dict(reg):
    out = {"kind": reg.kind}
    if isinstance(reg, IIDGaussian):
        out["covariance"] = None if reg.covariance is None else np.asarray(reg.covariance).tolist()
    elif isinstance(reg, AR1):
        out.update(a=reg.a, gamma=reg.gamma)
    else:
        out["radius"] = reg.radius
    return out


@dataclass
class GeneratorConfig:
    d: int
    beta_star: np.ndarray
    p: float
    sigma2: float = 1.0
    regressor: object = field(default_factory=AR1)
    seed: int = 0
    horizon: int = None

    def __post_init__(self):
        self.d = int(self.d)
        self.beta_star = np.array(self.beta_star, dtype=float)
        if isinstance(self.regressor, dict):
            self.regressor = regressor_from_dict(self.regressor)
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.beta_star.shape != (self.d,):
            raise ValueError(f"beta_star must have length {self.d}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not self.sigma2 >= 0.0:
            raise ValueError(f"sigma2 must be >= 0, got {self.sigma2}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        reg = self.regressor
        if isinstance(reg, IIDGaussian) and reg.covariance is not None:
            cov = np.asarray(reg.covariance, dtype=float)
            if cov.shape != (self.d, self.d) or not is_spd(cov):
                raise ValueError("regressor covariance must be a symmetric positive definite d x d matrix")
        elif isinstance(reg, AR1):
            if abs(reg.a) >= 1:
                warnings.warn(f"ar1 coefficient |a| = {abs(reg.a)} >= 1: regressor is not stable")
        elif isinstance(reg, BoundedSphere):
            if not reg.radius > 0:
                raise ValueError("sphere radius must be > 0")
        if self.horizon is not None and int(self.horizon) < 1:
            raise ValueError("horizon must be >= 1")

    @property
    def theta_star(self):
        return (2 * self.p - 1) * self.beta_star

    @property
    def target(self):
        """beta* sgn(2p - 1): the vector the estimator converges to."""
        return np.sign(2 * self.p - 1) * self.beta_star


@dataclass
class LabeledObservation:
    n: int
    phi: np.ndarray
    y: float
    z: int
    w: float


@dataclass
class StreamBlock:
    n: np.ndarray
    phi: np.ndarray
    y: np.ndarray
    z: np.ndarray
    w: np.ndarray

    def __len__(self):
        return len(self.y)


@njit(cache=True)
def box_muller(u):
    """One standard normal per uniform pair (cosine branch only)."""
    m = u.shape[0] // 2
    out = np.empty(m)
    for k in range(m):
        out[k] = math.sqrt(-2.0 * math.log(1.0 - u[2 * k])) * math.cos(2.0 * math.pi * u[2 * k + 1])
    return out


@njit(cache=True)
def _ar1_path(phi0, E, n0, a, gamma):
    N, d = E.shape
    out = np.empty((N + 1, d))
    out[0] = phi0
    for k in range(N):
        scale = float(n0 + k) ** (-gamma)
        for i in range(d):
            out[k + 1, i] = a * out[k, i] + scale * E[k, i]
    return out


@njit(cache=True)
def _emit(phis, beta, z, g, sigma):
    N, d = phis.shape
    y = np.empty(N)
    w = np.empty(N)
    for k in range(N):
        dot = 0.0
        for i in range(d):
            dot += beta[i] * phis[k, i]
        w[k] = sigma * g[k]
        y[k] = z[k] * dot + w[k]
    return y, w


@njit(cache=True)
def _mix(L, E):
    N, d = E.shape
    out = np.zeros((N, d))
    for k in range(N):
        for i in range(d):
            for j in range(i + 1):
                out[k, i] += L[i, j] * E[k, j]
    return out


@njit(cache=True)
def _to_sphere(E, radius):
    N, d = E.shape
    out = np.empty((N, d))
    for k in range(N):
        s = 0.0
        for i in range(d):
            s += E[k, i] * E[k, i]
        s = math.sqrt(s)
        for i in range(d):
            out[k, i] = radius * E[k, i] / s
    return out


class MLRStream:
    """Replayable data source ``y_{n+1} = z_n beta*^T phi_n + w_{n+1}``.

    >>> g = MLRStream(GeneratorConfig(d=2, beta_star=[1.0, -1.0], p=0.7, seed=3))
    >>> obs = g.step()
    >>> block = g.draw(100)
    """

    def __init__(self, cfg):
        self.cfg = cfg
        labels, noise, regressor = np.random.SeedSequence(int(cfg.seed)).spawn(3)
        self._labels = np.random.Generator(np.random.Philox(labels))
        self._noise = np.random.Generator(np.random.Philox(noise))
        self._regressor = np.random.Generator(np.random.Philox(regressor))
        self._sigma = math.sqrt(cfg.sigma2)
        reg = cfg.regressor
        self._L = None
        if isinstance(reg, IIDGaussian):
            cov = np.eye(cfg.d) if reg.covariance is None else np.asarray(reg.covariance, float)
            self._L = cholesky(cov)
        self.n = 1
        self.phi = self._fresh(self._gauss(self._regressor, (1, cfg.d)))[0]

    @staticmethod
    def _gauss(rng, shape):
        count = int(np.prod(shape))
        return box_muller(rng.random(2 * count)).reshape(shape)

    def _fresh(self, E):
        reg = self.cfg.regressor
        if isinstance(reg, IIDGaussian):
            return _mix(self._L, E)
        if isinstance(reg, BoundedSphere):
            return _to_sphere(E, float(reg.radius))
        # ar1 starts from a plain standard Gaussian
        return E

    def draw(self, count):
        """Emit the next ``count`` observations as arrays."""
        cfg = self.cfg
        z = np.where(self._labels.random(count) < cfg.p, 1, -1).astype(np.int64)
        g = self._gauss(self._noise, (count,))
        E = self._gauss(self._regressor, (count, cfg.d))
        reg = cfg.regressor
        if isinstance(reg, AR1):
            path = _ar1_path(self.phi, E, self.n, float(reg.a), float(reg.gamma))
        else:
            path = np.vstack([self.phi[None, :], self._fresh(E)])
        phis = path[:-1]
        y, w = _emit(phis, cfg.beta_star, z.astype(np.float64), g, self._sigma)
        n = np.arange(self.n, self.n + count)
        self.phi = path[-1].copy()
        self.n += count
        return StreamBlock(n, phis, y, z, w)

    def step(self):
        b = self.draw(1)
        return LabeledObservation(int(b.n[0]), b.phi[0], float(b.y[0]), int(b.z[0]), float(b.w[0]))

    def __iter__(self):
        while True:
            yield self.step()


def make_generator(cfg):
    return MLRStream(cfg)


def generate(cfg, count=None):
    """Whole stream in one block (``count`` defaults to ``cfg.horizon``)."""
    count = cfg.horizon if count is None else count
    if count is None:
        raise ValueError("no horizon given")
    return MLRStream(cfg).draw(int(count))
