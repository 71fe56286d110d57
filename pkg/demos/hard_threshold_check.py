"""Orthonormal designs collapse the whole problem to thresholding.

When X'X = I the residual constraint decouples coordinate by
coordinate, so the sparsest feasible vector keeps exactly the
correlations above delta.  The certified solver has to rediscover that
from the generic formulation; this script checks it does, across a
sweep of thresholds on one random rotation.
"""

import numpy as np

from ddsel import DesignMatrix, MiloConfig, ProblemData, solve_with_intelligence

rng = np.random.default_rng(7)
q, _ = np.linalg.qr(rng.normal(size=(20, 20)))
y = rng.normal(size=20)
c = q.T @ y

mags = np.sort(np.abs(c))
print("correlation magnitudes:")
print("  " + " ".join(f"{v:.2f}" for v in mags))

for frac in (0.1, 0.3, 0.5, 0.7, 0.9):
    delta = float(np.quantile(mags, frac)) * 1.001  # nudge off the tie
    expected = int(np.sum(np.abs(c) > delta))
    prob = ProblemData(DesignMatrix(q), y, delta)
    res = solve_with_intelligence(prob, config=MiloConfig(heuristic=False))
    mark = "ok" if res.incumbent.objective == expected else "MISMATCH"
    print(
        f"delta={delta:.3f}  threshold count {expected:2d}  "
        f"solver {res.incumbent.objective:2d}  [{mark}]"
    )
