# Rightmost particle of a binary branching random walk with Pareto steps.
#
# Every particle has exactly two children, each displaced by an independent
# Pareto(1) step. After n generations we scale positions by c_n = 2^n and
# look at the largest one. Its law should approach exp(-kappa / x), kappa = 2.
#
#   python3 demos/01_rightmost_particle.py

import numpy as np

from heavybrw import BrwModel, DisplacementModel, OffspringLaw, kappa_lambda, simulate_conditioned
from heavybrw.harness.parallel import rep_rng

model = BrwModel(OffspringLaw.deterministic(2), DisplacementModel.iid(alpha=1.0, p=1.0))
kappa = kappa_lambda(model.displacement, model.offspring).value
print("kappa =", round(kappa, 6))

xs = np.array([1.0, 2.0, 4.0, 8.0])
reps = 2000

# the gap at small x closes slowly: alpha = 1 path sums drift to the right
for n in (8, 10, 12):
    m = np.array([simulate_conditioned(model, n, rep_rng(1, n, i), track_tilde=False).M_n_scaled
                  for i in range(reps)])
    emp = (m[:, None] <= xs).mean(axis=0)
    oracle = np.exp(-kappa / xs)
    se = np.sqrt(oracle * (1 - oracle) / reps)
    print(f"n={n:2d}  z =", np.round((emp - oracle) / se, 2))

# a lighter right tail (p = 0.5) puts half the big jumps on the left
model_half = BrwModel(model.offspring, DisplacementModel.iid(1.0, 0.5))
print("kappa with p=0.5:", kappa_lambda(model_half.displacement, model_half.offspring).value)
