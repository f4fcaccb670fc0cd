"""Recursive identification and online clustering for two-component symmetric
mixed linear regression."""
from .analysis import RateParams, kappa, loglog_slope
from .clustering import ClusterMetrics, classify, misclass_gap, oracle_classify, update_metrics
from .config import ConfigError, RunConfig, load_config, parse_config
from .datagen import AR1, BoundedSphere, GeneratorConfig, IIDGaussian, MLRStream, generate, make_generator
from .estimator import (CapMode, EstimatorConfig, EstimatorState, NumericError, new_state, run_stream,
                        step)
from .experiment import run_experiment, sweep

__version__ = "0.1.0"
