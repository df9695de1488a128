"""Superposition of scaled i.i.d. cluster point processes.

The template cluster is ``L = sum_j delta(a_j X)`` with fixed positive
coefficients ``a_j`` and ``X`` pure Pareto(alpha) with right-tail weight
``p``.  ``b_n^-1 (L_1 + ... + L_n)`` with ``b_n = n^(1/alpha)`` converges to
the ScDPPP with intensity ``nu_alpha`` and decoration ``sum_j delta(a_j eps)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..limit import _radial_integral
from ..pointproc import PointMeasure


@dataclass(frozen=True)
class ClusterTemplate:
    coeffs: tuple
    alpha: float = 1.0
    p: float = 1.0

    def __post_init__(self):
        if not self.coeffs or any(a <= 0 for a in self.coeffs):
            raise ValueError("template coefficients must be positive")
        if not self.alpha > 0 or not 0 <= self.p <= 1:
            raise ValueError("bad alpha or p")

    def b(self, n: int) -> float:
        return n ** (1.0 / self.alpha)

    def limit_mean_exceedance(self, x: float) -> float:
        """``E Q(x, inf) = p x^-alpha sum_j a_j^alpha``."""
        return self.p * x**-self.alpha * sum(a**self.alpha for a in self.coeffs)

    def limit_laplace(self, f, support_inner: float, kinks=()) -> float:
        """``exp(-int (1 - exp(-sum_j f(a_j u))) nu_alpha(du))`` by quadrature."""
        a = np.asarray(self.coeffs)
        lo = support_inner / a.max()
        kk = [k / c for k in kinks for c in a]

        def h(sign):
            return lambda u: 1.0 - math.exp(-float(np.sum(f(sign * a * u))))

        right = _radial_integral(h(1), self.alpha, lo, kk)
        left = _radial_integral(h(-1), self.alpha, lo, kk)
        return math.exp(-(self.p * right + (1 - self.p) * left))


def superpose_scaled(template: ClusterTemplate, n: int, rng: np.random.Generator,
                     floor: float | None = None) -> PointMeasure:
    """``b_n^-1 sum_{i<=n} L_i``, restricted to ``|x| >= floor`` when ``floor`` is given.

    With a floor, only copies whose largest atom can reach the floor are
    drawn: their number is Binomial and their magnitudes are Pareto beyond
    the cut, which is exact for the restricted process.
    """
    a = np.asarray(template.coeffs, dtype=float)
    bn = template.b(n)
    alpha = template.alpha
    if floor is None:
        k = n
        cut = 1.0
    else:
        cut = max(1.0, floor * bn / a.max())
        k = rng.binomial(n, cut**-alpha)
    mag = cut * (1.0 - rng.random(k)) ** (-1.0 / alpha)
    sign = np.where(rng.random(k) < template.p, 1.0, -1.0)
    atoms = (np.outer(sign * mag, a) / bn).ravel()
    if floor is not None:
        atoms = atoms[np.abs(atoms) >= floor]
    return PointMeasure.from_points(atoms)
