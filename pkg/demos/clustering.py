"""Online classification quality against the oracle that knows beta*.

Each observation is assigned to the submodel whose prediction is closer.
The gap between the algorithm's and the oracle's mis-classification rates
shrinks with n, and the within-cluster error settles below sigma^2.

    python3 demos/clustering.py
"""
import numpy as np

from mlrid.analysis import thm2_bound
from mlrid.clustering import stream_metrics
from mlrid.datagen import AR1, GeneratorConfig, MLRStream
from mlrid.estimator import EstimatorConfig, run_stream

gen = GeneratorConfig(d=3, beta_star=[1.0, 2.0, -1.0], p=0.8, sigma2=1.0,
                      regressor=AR1(0.8, 0.1), seed=3)
block = MLRStream(gen).draw(100_000)

est = EstimatorConfig(d=3, delta=0.1, sigma2=1.0)
res = run_stream(est, block.phi, block.y)

# beta_pre[k] is the estimate the classifier had when observation k arrived
trace = stream_metrics(res.beta_pre, gen.beta_star, block.phi, block.y, block.z)

print(f"{'n':>7} {'alg':>8} {'oracle':>8} {'gap':>9} {'bound':>8} {'J_n/n':>7}")
for n in (100, 1000, 10_000, 100_000):
    m = trace.at(n)
    gap = abs(m.miss_alg - m.miss_oracle) / n
    print(f"{n:>7} {m.miss_alg / n:>8.4f} {m.miss_oracle / n:>8.4f} {gap:>9.2e} "
          f"{thm2_bound(n, 0.1):>8.4f} {m.J / n:>7.4f}")

# The oracle is wrong whenever noise pushes y closer to the other submodel;
# that floor is set by the noise, not by the estimator.
wrong = np.mean(np.where(block.y * (block.phi @ gen.beta_star) >= 0, 1, -1) != block.z)
print(f"\noracle error floor from the data itself: {wrong:.4f}")
