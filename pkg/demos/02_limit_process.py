# Drawing the limit point process N_* directly.
#
# N_* is a randomly scaled Poisson process whose points carry clusters of
# multiplicities. We draw it for a geometric offspring law and check its
# Laplace functional against numerical quadrature, then compute kappa three ways.
#
#   python3 demos/02_limit_process.py

import numpy as np

from heavybrw import (AngularMeasure, DisplacementModel, OffspringLaw, SscdpppSpec, TestFunction,
                      kappa_lambda, laplace_exponent, sample_N_star)

rng = np.random.default_rng(2024)
geo = OffspringLaw.geometric(2 / 3)      # mean 2, extinction probability 1/2
spec = SscdpppSpec.from_model(geo, DisplacementModel.iid(1.0, p=0.5))

f = TestFunction(a=1.0, w=1.0, theta=1.0)
W = spec.survival_W(depth=30).sample(rng, 5000)
vals = np.exp(-np.array([sample_N_star(spec, None, w, f.a, rng).integrate(f) for w in W]))
L = laplace_exponent(spec, f, f.a, kinks=(1.0, 2.0))

# for this law W given survival is exponential with mean 2
print("Monte Carlo  :", vals.mean().round(4), "+-", (vals.std() / np.sqrt(vals.size)).round(4))
print("quadrature   :", round(1 / (1 + 2 * L), 4))

# one sample, for a feel of the clustering
m = sample_N_star(spec, None, W[0], 0.5, rng)
print("atoms beyond 0.5:", len(m), " total mass:", m.mass)

# kappa for the diagonal model, where both children move together
diag = DisplacementModel.polar(1.0, AngularMeasure([[1.0, 1.0]], [1.0]))
two = OffspringLaw.deterministic(2)
print("kappa (closed form):", kappa_lambda(diag, two, "closed_form_polar").value)
mc = kappa_lambda(diag, two, "monte_carlo", rng, reps=3000, x_grid=(1.0, 2.0))
print("kappa (Monte Carlo):", round(mc.value, 3), "+-", round(mc.std_error, 3))
