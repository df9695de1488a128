# One big jump: far-out particles owe their position to a single large step.
#
# N~_n places one atom at every ancestral step of every particle. Beyond a
# radius eps, N_n and N~_n should eventually agree on every annulus. The
# fraction of runs where they disagree falls with n, slower for small eps.
#
#   python3 demos/03_one_big_jump.py

import numpy as np

from heavybrw import BrwModel, DisplacementModel, OffspringLaw
from heavybrw.brw import big_jump_diagnostic

model = BrwModel(OffspringLaw.deterministic(2), DisplacementModel.iid(1.0, 1.0))
reps = 500

print("eps \\ n   " + "".join(f"{n:>8d}" for n in (4, 6, 8, 10)))
for eps in (0.5, 1.0, 2.0, 4.0):
    row = [big_jump_diagnostic(model, n, eps, reps, np.random.default_rng(n)) for n in (4, 6, 8, 10)]
    print(f"{eps:<10}" + "".join(f"{v:8.3f}" for v in row))
