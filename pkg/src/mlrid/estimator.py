"""Two-step recursive identification for symmetric two-component MLR.

Data follow ``y = z * beta^T phi + w`` with a hidden sign ``z``.  The
conditional mean ``(2p-1) beta^T phi`` is linear, so a weighted RLS tracks
the direction ``theta = (2p-1) beta``.  A projected scalar recursion then
estimates the ratio ``q = ||beta|| / ||theta||``.  The product ``q * theta``
converges to ``beta * sgn(2p-1)``.

The per-observation arithmetic lives in two numba kernels (``_scale_kernel``
and ``_ls_kernel``).  The single-step API and the whole-stream fast path both
call them, so the two give bit-identical trajectories.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .linalg import is_spd, sym

TANH_SATURATION = 20.0

_FAITHFUL, _CONSTANT, _UNBOUNDED = 0, 1, 2


class NumericError(FloatingPointError):
    """A non-finite value appeared while processing observation ``step``."""

    def __init__(self, message, step):
        super().__init__(f"{message} at step {step}")
        self.step = step


@dataclass(frozen=True)
class CapMode:
    """Upper edge of the projection interval for the scaling estimate.

    ``faithful`` uses sqrt(ln(n + e)); ``constant`` a fixed ceiling C > 1;
    ``unbounded`` removes the upper edge (the lower edge 1 always applies).
    """

    kind: str = "faithful"
    value: float = math.inf

    def __post_init__(self):
        if self.kind not in ("faithful", "constant", "unbounded"):
            raise ValueError(f"unknown cap mode {self.kind!r}")
        if self.kind == "constant" and not self.value > 1.0:
            raise ValueError("constant cap must be > 1")

    @classmethod
    def parse(cls, text):
        """Parse ``faithful``, ``unbounded`` or ``constant:C``."""
        if isinstance(text, CapMode):
            return text
        text = str(text).strip()
        if text.startswith("constant"):
            _, _, num = text.partition(":")
            if not num:
                raise ValueError("constant cap mode needs a value, e.g. constant:6")
            return cls("constant", float(num))
        return cls(text)

    def __str__(self):
        if self.kind == "constant":
            return f"constant:{self.value:g}"
        return self.kind

    @property
    def _code(self):
        return {"faithful": _FAITHFUL, "constant": _CONSTANT, "unbounded": _UNBOUNDED}[self.kind]


def cap(n, cap_mode=CapMode()):
    """Upper bound of the projection interval at step ``n`` (n >= 1)."""
    if n < 1:
        raise ValueError("cap is defined for n >= 1")
    mode = CapMode.parse(cap_mode)
    return float(_cap(n, mode._code, mode.value))


def project_q(x, n, cap_mode=CapMode()):
    """Nearest point of [1, cap(n)] to ``x``."""
    return min(max(float(x), 1.0), cap(n, cap_mode))


@njit(cache=True)
def _cap(n, kind, value):
    if kind == 0:
        return math.sqrt(math.log(n + math.e))
    if kind == 1:
        return value
    return math.inf


@njit(cache=True)
def _weight(n, delta):
    return max(n, 1) ** delta


@njit(cache=True)
def _sat_tanh(x):
    if x > TANH_SATURATION:
        return 1.0
    if x < -TANH_SATURATION:
        return -1.0
    return math.tanh(x)


@njit(cache=True)
def _scale_kernel(theta, q, r, n, phi, y, delta, sigma2, cap_kind, cap_value):
    u = 0.0
    for i in range(theta.shape[0]):
        u += theta[i] * phi[i]
    w = _weight(n, delta)
    alpha = -math.expm1(-u * u / (2.0 * sigma2))
    s = y * _sat_tanh(q * u * y / sigma2)
    r_new = r + alpha * alpha * u * u / w
    q_raw = q + (alpha * u / (w * r_new)) * (s - q * u)
    q_new = min(max(q_raw, 1.0), _cap(n, cap_kind, cap_value))
    return q_new, r_new, alpha, s, q_raw, u


@njit(cache=True)
def _ls_kernel(theta, P, n, phi, y, delta):
    # updates theta and P in place, returns the gain a_n
    d = theta.shape[0]
    g = np.zeros(d)
    for i in range(d):
        for j in range(d):
            g[i] += P[i, j] * phi[j]
    quad = 0.0
    pred = 0.0
    for i in range(d):
        quad += phi[i] * g[i]
        pred += theta[i] * phi[i]
    a = 1.0 / (_weight(n, delta) + quad)
    err = y - pred
    for i in range(d):
        theta[i] += a * g[i] * err
    for i in range(d):
        for j in range(d):
            P[i, j] -= a * g[i] * g[j]
    for i in range(d):
        for j in range(i + 1, d):
            m = 0.5 * (P[i, j] + P[j, i])
            P[i, j] = m
            P[j, i] = m
    return a


@njit(cache=True)
def _all_finite(theta, P, q, r):
    if not (math.isfinite(q) and math.isfinite(r)):
        return False
    for i in range(theta.shape[0]):
        if not math.isfinite(theta[i]):
            return False
        for j in range(theta.shape[0]):
            if not math.isfinite(P[i, j]):
                return False
    return True


@njit(cache=True)
def _run_kernel(theta, P, q, r, n0, phis, ys, delta, sigma2, cap_kind, cap_value,
                beta_pre, alpha_out, q_out, r_out, snap_at, snap_theta, snap_P):
    N = ys.shape[0]
    k_snap = 0
    for k in range(N):
        n = n0 + k + 1
        phi = phis[k]
        for i in range(theta.shape[0]):
            beta_pre[k, i] = q * theta[i]
        q, r, alpha, s, q_raw, u = _scale_kernel(
            theta, q, r, n, phi, ys[k], delta, sigma2, cap_kind, cap_value)
        _ls_kernel(theta, P, n, phi, ys[k], delta)
        if not _all_finite(theta, P, q, r):
            return k, q, r
        alpha_out[k] = alpha
        q_out[k] = q
        r_out[k] = r
        while k_snap < snap_at.shape[0] and snap_at[k_snap] == n:
            snap_theta[k_snap] = theta
            snap_P[k_snap] = P
            k_snap += 1
    return -1, q, r


@dataclass
class EstimatorConfig:
    d: int
    delta: float = 0.1
    sigma2: float = 1.0
    theta0: np.ndarray = None
    P0: np.ndarray = None
    q0: float = 1.0
    cap_mode: CapMode = field(default_factory=CapMode)

    def __post_init__(self):
        if int(self.d) < 1:
            raise ValueError("dimension d must be >= 1")
        self.d = int(self.d)
        self.theta0 = np.ones(self.d) if self.theta0 is None else np.array(self.theta0, dtype=float)
        self.P0 = np.eye(self.d) if self.P0 is None else np.array(self.P0, dtype=float)
        self.cap_mode = CapMode.parse(self.cap_mode)
        self.delta = float(self.delta)
        self.sigma2 = float(self.sigma2)
        self.q0 = float(self.q0)
        if self.theta0.shape != (self.d,):
            raise ValueError(f"theta0 must have length {self.d}")
        if not np.any(self.theta0 != 0):
            raise ValueError("zero initial direction: theta0 must be nonzero")
        if self.P0.shape != (self.d, self.d) or not np.allclose(self.P0, self.P0.T, rtol=0, atol=1e-12) \
                or not is_spd(self.P0):
            raise ValueError("invalid P0: must be a symmetric positive definite d x d matrix")
        if not 0.0 <= self.delta < 0.5:
            raise ValueError("invalid delta: must lie in [0, 1/2)")
        if not self.sigma2 > 0.0:
            raise ValueError("invalid noise variance: sigma2 must be > 0")
        if not self.q0 >= 1.0:
            raise ValueError("q0 must be >= 1")


@dataclass
class EstimatorState:
    n: int
    theta: np.ndarray
    P: np.ndarray
    q: float
    r: float

    @property
    def beta(self):
        return self.q * self.theta

    def copy(self):
        return EstimatorState(self.n, self.theta.copy(), self.P.copy(), self.q, self.r)

    def to_row(self):
        """Flat snapshot record: n, theta, upper triangle of P (row-major), q, r."""
        iu = np.triu_indices(len(self.theta))
        return [self.n, *self.theta.tolist(), *self.P[iu].tolist(), self.q, self.r]

    @classmethod
    def from_row(cls, row, d):
        row = [float(v) for v in row]
        theta = np.array(row[1:1 + d])
        m = d * (d + 1) // 2
        P = np.zeros((d, d))
        P[np.triu_indices(d)] = row[1 + d:1 + d + m]
        P = P + np.triu(P, 1).T
        return cls(int(row[0]), theta, P, row[1 + d + m], row[2 + d + m])

    @staticmethod
    def row_header(d):
        return (["n"] + [f"theta_{i}" for i in range(d)]
                + [f"P_{i}_{j}" for i in range(d) for j in range(i, d)] + ["q", "r"])


@dataclass
class StepTrace:
    a: float
    alpha: float
    s_next: float
    q_raw: float
    u: float
    innovation: float


def new_state(cfg):
    return EstimatorState(0, cfg.theta0.copy(), sym(cfg.P0), cfg.q0, 1.0)


def _check_obs(state, phi, y):
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape != state.theta.shape:
        raise ValueError(f"phi has shape {phi.shape}, expected {state.theta.shape}")
    return phi, float(y)


def scale_step(state, phi, y, cfg):
    """Scaling-coefficient update using the current (pre-LS) direction.

    Returns ``(q_next, r_next, trace)``; ``trace.a`` is NaN because the LS
    gain is not computed here.
    """
    phi, y = _check_obs(state, phi, y)
    n = state.n + 1
    q, r, alpha, s, q_raw, u = _scale_kernel(
        state.theta, state.q, state.r, n, phi, y, cfg.delta, cfg.sigma2,
        cfg.cap_mode._code, cfg.cap_mode.value)
    if not (math.isfinite(q) and math.isfinite(r)):
        raise NumericError("numeric overflow in scaling update", n)
    return q, r, StepTrace(math.nan, alpha, s, q_raw, u, y - u)


def ls_step(state, phi, y, cfg):
    """Weighted RLS update of the direction; returns ``(theta_next, P_next, a_n)``."""
    phi, y = _check_obs(state, phi, y)
    theta, P = state.theta.copy(), state.P.copy()
    a = _ls_kernel(theta, P, state.n + 1, phi, y, cfg.delta)
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(P))):
        raise NumericError("numeric overflow in LS update", state.n + 1)
    return theta, P, a


def step(state, phi, y, cfg):
    """Process one observation ``(phi_n, y_{n+1})``; returns ``(new_state, trace)``."""
    q, r, trace = scale_step(state, phi, y, cfg)
    theta, P, a = ls_step(state, phi, y, cfg)
    trace.a = a
    return EstimatorState(state.n + 1, theta, P, q, r), trace


@dataclass
class StreamResult:
    """Output of :func:`run_stream`.

    ``beta_pre[k]`` is the estimate in force when observation k arrived, which
    is what the online classifier uses.  ``alpha``, ``q`` and ``r`` are the
    per-step values after each update.
    """

    state: EstimatorState
    beta_pre: np.ndarray
    alpha: np.ndarray
    q: np.ndarray
    r: np.ndarray
    snapshots: list


def run_stream(cfg, phis, ys, state=None, snapshot_at=()):
    """Advance the estimator over a block of observations.

    ``snapshot_at`` lists step counts (``state.n`` values) at which copies of
    the state are kept.  Raises :class:`NumericError` on the first non-finite
    update; ``err.partial`` then holds the result up to the preceding step.
    """
    phis = np.ascontiguousarray(phis, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    if state is None:
        state = new_state(cfg)
    if phis.ndim != 2 or phis.shape != (len(ys), cfg.d):
        raise ValueError(f"phis must have shape ({len(ys)}, {cfg.d})")
    N = len(ys)
    theta, P = state.theta.copy(), state.P.copy()
    snap_at = np.array(sorted(set(int(s) for s in snapshot_at
                                  if state.n < s <= state.n + N)), dtype=np.int64)
    snap_theta = np.zeros((len(snap_at), cfg.d))
    snap_P = np.zeros((len(snap_at), cfg.d, cfg.d))
    beta_pre = np.empty((N, cfg.d))
    alpha, q_out, r_out = np.empty(N), np.empty(N), np.empty(N)
    bad, q, r = _run_kernel(theta, P, state.q, state.r, state.n, phis, ys, cfg.delta,
                            cfg.sigma2, cfg.cap_mode._code, cfg.cap_mode.value,
                            beta_pre, alpha, q_out, r_out, snap_at, snap_theta, snap_P)
    snaps = [EstimatorState(int(n), snap_theta[i].copy(), snap_P[i].copy(), 0.0, 0.0)
             for i, n in enumerate(snap_at)]
    for s in snaps:
        s.q = float(q_out[s.n - state.n - 1])
        s.r = float(r_out[s.n - state.n - 1])
    if bad >= 0:
        done = int(bad)
        last = (EstimatorState(state.n + done, np.full(cfg.d, np.nan), np.full_like(P, np.nan),
                               math.nan, math.nan))
        err = NumericError("numeric overflow", state.n + done + 1)
        err.partial = StreamResult(last, beta_pre[:done], alpha[:done], q_out[:done],
                                   r_out[:done], [s for s in snaps if s.n <= state.n + done])
        raise err
    final = EstimatorState(state.n + N, theta, P, float(q), float(r))
    return StreamResult(final, beta_pre, alpha, q_out, r_out, snaps)
