# Superposing many small heavy-tailed clusters.
#
# Each cluster puts atoms at X and X/2 for one Pareto(1) draw X. Summing n
# copies and shrinking by n gives, in the limit, a Poisson process of clusters
# with mean count 1.5/x beyond x.
#
#   python3 demos/04_superposition.py

import numpy as np

from heavybrw import TestFunction
from heavybrw.harness.doa import ClusterTemplate, superpose_scaled

template = ClusterTemplate((1.0, 0.5), alpha=1.0, p=1.0)
rng = np.random.default_rng(7)
n, reps = 10_000, 4000

samples = [superpose_scaled(template, n, rng, floor=0.5) for _ in range(reps)]
for x in (1.0, 2.0, 4.0):
    c = np.array([s.count_exceedances(x)[0] for s in samples])
    print(f"x={x}: mean count {c.mean():.3f} +- {c.std() / np.sqrt(reps):.3f}   limit {template.limit_mean_exceedance(x):.3f}")

f = TestFunction(1.0, 1.0, 1.0)
v = np.exp(-np.array([s.integrate(f) for s in samples]))
print("Psi(f):", v.mean().round(4), "limit", round(template.limit_laplace(f, 1.0, (1.0, 2.0)), 4))
