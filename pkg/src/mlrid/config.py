"""JSON run configuration.

A minimal document only needs the generator block and a horizon::

    {
      "generator": {"d": 3, "beta_star": [1, 2, -1], "p": 0.8,
                    "sigma2": 1.0, "regressor": {"kind": "ar1", "a": 0.8, "gamma": 0.1},
                    "seed": 7},
      "horizon": 200000
    }

Everything else is filled in: delta 0.1, epsilon 0.01, q0 1, faithful cap,
theta0 = ones, P0 = identity, estimator sigma2 = generator sigma2 (or 1 for
noise-free data), checkpoints on a 10-per-decade log grid, one replication.
"""
import copy
import json
from dataclasses import dataclass

import numpy as np

from .analysis import RateParams
from .datagen import GeneratorConfig, regressor_from_dict, regressor_to_dict
from .estimator import CapMode, EstimatorConfig


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


@dataclass
class RunConfig:
    generator: GeneratorConfig
    estimator: EstimatorConfig
    horizon: int
    record_every: object = "geometric:10"
    analysis: RateParams = None
    outputs: str = "run"
    replications: int = 1
    parallel_jobs: int = 1

    def checkpoints(self):
        return checkpoint_grid(self.horizon, self.record_every)

    def to_dict(self):
        g, e = self.generator, self.estimator
        return {
            "generator": {"d": g.d, "beta_star": g.beta_star.tolist(), "p": g.p, "sigma2": g.sigma2,
                          "regressor": regressor_to_dict(g.regressor), "seed": g.seed,
                          "horizon": g.horizon},
            "estimator": {"delta": e.delta, "sigma2": e.sigma2, "theta0": e.theta0.tolist(),
                          "P0": e.P0.tolist(), "q0": e.q0, "cap_mode": str(e.cap_mode)},
            "horizon": self.horizon,
            "record_every": self.record_every,
            "analysis": {"epsilon": self.analysis.epsilon},
            "outputs": self.outputs,
            "replications": self.replications,
            "parallel_jobs": self.parallel_jobs,
        }


def checkpoint_grid(N, record_every):
    """Step counts at which a trajectory row is written; always ends at N.

    ``record_every`` is a stride, ``"geometric"`` (powers of two) or
    ``"geometric:K"`` (K log-spaced points per decade).
    """
    if isinstance(record_every, str):
        kind, _, per = record_every.partition(":")
        if kind != "geometric":
            raise ValueError(f"unknown checkpoint grid {record_every!r}")
        if not per:
            pts = [2 ** k for k in range(int(np.log2(N)) + 1)]
        else:
            per = int(per)
            if per < 1:
                raise ValueError("points per decade must be >= 1")
            top = int(np.ceil(np.log10(N) * per))
            pts = np.unique(np.floor(10.0 ** (np.arange(top + 1) / per) + 1e-9).astype(np.int64)).tolist()
    else:
        stride = int(record_every)
        if stride < 1:
            raise ValueError("record_every must be >= 1")
        pts = list(range(stride, N + 1, stride))
    pts = [int(p) for p in pts if 1 <= p <= N]
    if not pts or pts[-1] != N:
        pts.append(int(N))
    return pts


def _take(section, key, path, default=None, required=False):
    if key in section:
        return section[key]
    if required:
        raise ConfigError(f"{path}.{key}: required field missing")
    return default


def _check_known(section, allowed, path):
    extra = sorted(set(section) - set(allowed))
    if extra:
        raise ConfigError(f"{path}: unknown field(s) {extra}")


_GEN_FIELDS = ("d", "beta_star", "p", "sigma2", "regressor", "seed", "horizon")
_EST_FIELDS = ("d", "delta", "sigma2", "theta0", "P0", "q0", "cap_mode")
_RUN_FIELDS = ("generator", "estimator", "horizon", "record_every", "analysis", "outputs",
               "replications", "parallel_jobs")


def parse_config(doc):
    """Validate a config mapping and fill in defaults."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>: config must be a JSON object")
    doc = copy.deepcopy(doc)
    _check_known(doc, _RUN_FIELDS, "<root>")
    g = _take(doc, "generator", "<root>", required=True)
    if not isinstance(g, dict):
        raise ConfigError("generator: must be an object")
    _check_known(g, _GEN_FIELDS, "generator")

    beta = _take(g, "beta_star", "generator", required=True)
    d = int(_take(g, "d", "generator", default=len(beta)))
    if d < 1:
        raise ConfigError("generator.d: must be >= 1")
    if len(beta) != d:
        raise ConfigError(f"generator.beta_star: expected {d} entries, got {len(beta)}")
    p = float(_take(g, "p", "generator", required=True))
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"generator.p: must lie in [0, 1], got {p}")
    gsigma2 = float(_take(g, "sigma2", "generator", default=1.0))
    if not gsigma2 >= 0:
        raise ConfigError(f"generator.sigma2: must be >= 0, got {gsigma2}")
    seed = _take(g, "seed", "generator", default=0)
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("generator.seed: must be an unsigned 64-bit integer")
    try:
        regressor = regressor_from_dict(_take(g, "regressor", "generator", default={"kind": "ar1"}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"generator.regressor: {exc}") from None

    horizon = doc.get("horizon", g.get("horizon"))
    if horizon is None:
        raise ConfigError("horizon: required field missing")
    if g.get("horizon") is not None and int(g["horizon"]) != int(horizon):
        raise ConfigError("generator.horizon: disagrees with top-level horizon")
    horizon = int(horizon)
    if horizon < 1:
        raise ConfigError("horizon: must be >= 1")
    try:
        gen = GeneratorConfig(d=d, beta_star=beta, p=p, sigma2=gsigma2, regressor=regressor,
                              seed=seed, horizon=horizon)
    except ValueError as exc:
        raise ConfigError(f"generator: {exc}") from None

    e = _take(doc, "estimator", "<root>", default={})
    _check_known(e, _EST_FIELDS, "estimator")
    if "d" in e and int(e["d"]) != d:
        raise ConfigError("estimator.d: must equal generator.d")
    delta = float(e.get("delta", 0.1))
    if not 0.0 <= delta < 0.5:
        raise ConfigError(f"estimator.delta: must lie in the half-open interval [0, 1/2), got {delta}")
    esigma2 = float(e.get("sigma2", gsigma2 if gsigma2 > 0 else 1.0))
    if not esigma2 > 0:
        raise ConfigError(f"estimator.sigma2: must be > 0, got {esigma2}")
    try:
        cap_mode = CapMode.parse(e.get("cap_mode", "faithful"))
    except ValueError as exc:
        raise ConfigError(f"estimator.cap_mode: {exc}") from None
    q0 = float(e.get("q0", 1.0))
    if not q0 >= 1.0:
        raise ConfigError(f"estimator.q0: must be >= 1, got {q0}")
    theta0 = e.get("theta0")
    if theta0 is not None and (len(theta0) != d or not any(v != 0 for v in theta0)):
        raise ConfigError("estimator.theta0: must be a nonzero vector of length d")
    P0 = e.get("P0")
    if isinstance(P0, (int, float)):
        P0 = float(P0) * np.eye(d)
    try:
        est = EstimatorConfig(d=d, delta=delta, sigma2=esigma2, theta0=theta0, P0=P0, q0=q0,
                              cap_mode=cap_mode)
    except ValueError as exc:
        field = "P0" if "P0" in str(exc) else "theta0" if "theta0" in str(exc) else ""
        raise ConfigError(f"estimator.{field}: {exc}".replace(".: ", ": ")) from None

    a = _take(doc, "analysis", "<root>", default={})
    _check_known(a, ("delta", "epsilon"), "analysis")
    if "delta" in a and float(a["delta"]) != delta:
        raise ConfigError("analysis.delta: must equal estimator.delta")
    try:
        rates = RateParams(delta=delta, epsilon=float(a.get("epsilon", 0.01)))
    except ValueError as exc:
        raise ConfigError(f"analysis.epsilon: {exc}") from None

    record_every = doc.get("record_every", "geometric:10")
    try:
        checkpoint_grid(horizon, record_every)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"record_every: {exc}") from None
    reps = int(doc.get("replications", 1))
    if reps < 1:
        raise ConfigError("replications: must be >= 1")
    jobs = int(doc.get("parallel_jobs", 1))
    if jobs < 1:
        raise ConfigError("parallel_jobs: must be >= 1")
    return RunConfig(gen, est, horizon, record_every, rates, str(doc.get("outputs", "run")), reps, jobs)


def load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"<file>: config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<file>: invalid JSON in {path}: {exc}") from None
    return parse_config(doc)
