"""Growth of the Gram matrix for the decaying-innovation AR(1) regressor.

lambda_min(n) grows like n^(1 - 2 gamma) rather than linearly, so the
regressor is not persistently exciting.  The fitted slopes sit well above
the rate the convergence argument needs.

    python3 demos/excitation.py
"""
import numpy as np

from mlrid.analysis import loglog_slope
from mlrid.baselines import gram_lambda
from mlrid.config import checkpoint_grid
from mlrid.datagen import AR1, GeneratorConfig, MLRStream

N = 100_000
for gamma in (0.0, 0.1, 0.25):
    gen = GeneratorConfig(d=3, beta_star=[1.0, 2.0, -1.0], p=0.8,
                          regressor=AR1(0.8, gamma), seed=11)
    phis = MLRStream(gen).draw(N).phi
    rows = gram_lambda(phis, np.eye(3), checkpoints=checkpoint_grid(N, "geometric:10"))
    n, lo, hi = rows.T
    s_lo = loglog_slope(n, lo, window=(1e3, N))
    s_hi = loglog_slope(n, hi, window=(1e3, N))
    print(f"gamma = {gamma:<5} lambda_min slope {s_lo:.3f} (1 - 2 gamma = {1 - 2 * gamma:.2f}), "
          f"lambda_max slope {s_hi:.3f}")
