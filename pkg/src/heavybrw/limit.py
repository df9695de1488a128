"""Sampler of the limiting randomly scaled scale-decorated Poisson process.

The limit of the scaled generation-``n`` point process is

    N_* = sum_l sum_{k <= V_l} T_lk  delta( (s W / mu)^(1/alpha) xi_lk )

with ``xi_l`` the points of a Poisson random measure with the limit
intensity, ``(V_l, T_l)`` i.i.d. cluster marks and ``W`` the martingale limit
under survival.  For i.i.d. displacements the clusters collapse onto a single
axis and the equivalent decoration form ``S_{(rW)^(1/alpha)} sum_l T_l
delta(eps_l j_l)`` is used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .gw import OffspringLaw, ExtinctionProfile, MartingaleLimitSampler, extinction_profile
from .pointproc import PointMeasure
from .tails import DisplacementModel

SERIES_TOL = 1e-12


class SeriesNotConverged(RuntimeError):
    pass


def series_horizon(mu: float, tol: float = SERIES_TOL) -> int:
    """Smallest ``I`` with ``mu^-I < tol``."""
    return int(math.floor(math.log(1 / tol) / math.log(mu))) + 1


@dataclass(frozen=True)
class VTLaw:
    """Tabulated laws of the cluster size ``V`` and the multiplicities ``T``.

    ``P(V = v)`` is proportional to ``P(Z_1 = v) sum_i mu^-i (1 - q_i^v)``.
    Given ``V = v`` the multiplicity vector is drawn in two stages: a
    generation index ``i`` with weight ``mu^-i (1 - q_i^v) / s_v``, then ``v``
    independent copies of ``Z_i`` rejected until not all zero.
    """

    offspring: OffspringLaw
    extinction: ExtinctionProfile
    i_max: int
    v_support: np.ndarray
    v_pmf: np.ndarray
    s: float
    s_v: np.ndarray            # index v - 1, for v = 1..vmax
    gen_weights: np.ndarray    # row v - 1: law of the generation index given V = v

    @classmethod
    def build(cls, offspring: OffspringLaw, i_max: int | None = None) -> "VTLaw":
        mu = offspring.mean
        if i_max is None:
            i_max = series_horizon(mu)
        ext = extinction_profile(offspring, i_max)
        q = ext.q
        tab = offspring.pmf_table()
        vmax = len(tab) - 1
        v = np.arange(1, vmax + 1)
        disc = mu ** -np.arange(i_max + 1)
        surv = 1.0 - q[None, :] ** v[:, None]        # (vmax, I+1)
        terms = disc[None, :] * surv
        s_v = terms.sum(axis=1)
        gen_w = terms / s_v[:, None]
        raw = tab[1:] * s_v
        s = float(raw.sum())
        keep = tab[1:] > 0
        for arr in (s_v, gen_w):
            arr.setflags(write=False)
        return cls(offspring, ext, i_max, v[keep], raw[keep] / s, s, s_v, gen_w)

    @property
    def mu(self) -> float:
        return self.offspring.mean

    @property
    def r(self) -> float:
        """``sum_i mu^-i P(Z_i > 0)``, the normaliser of the single-axis decoration."""
        return float(self.s_v[0])

    def pmf_V(self, v: int) -> float:
        hit = np.flatnonzero(self.v_support == v)
        return float(self.v_pmf[hit[0]]) if hit.size else 0.0

    def sample_V(self, rng: np.random.Generator, size=None):
        return self.v_support[rng.choice(self.v_support.size, size=size, p=self.v_pmf)]

    def sample_T_given_V(self, v: int, rng: np.random.Generator) -> np.ndarray:
        _, z = self.sample_clusters(rng, np.array([v]))
        return z

    def sample_clusters(self, rng: np.random.Generator, V: np.ndarray):
        """Multiplicities for clusters of sizes ``V``.

        Returns ``(owner, T)``: flat arrays where ``T[j]`` belongs to cluster ``owner[j]``;
        the coordinates of one cluster are contiguous and in order.
        """
        V = np.asarray(V, dtype=np.int64)
        n = V.size
        owner = np.repeat(np.arange(n), V)
        if n == 0:
            return owner, np.zeros(0, dtype=np.int64)
        cum = np.cumsum(self.gen_weights[V - 1], axis=1)
        gen = (cum < rng.random(n)[:, None] * cum[:, -1:]).sum(axis=1)
        gen = np.minimum(gen, self.i_max)
        T = np.zeros(owner.size, dtype=np.int64)
        todo = np.arange(n)
        while todo.size:
            sel = np.isin(owner, todo)
            depth = gen[owner[sel]]
            z = np.ones(depth.size, dtype=np.int64)
            for g in range(int(depth.max(initial=0))):
                act = depth > g
                z[act] = self.offspring.sample_sum(rng, z[act])
            T[sel] = z
            alive = np.bincount(owner[sel], weights=z > 0, minlength=n)
            todo = todo[alive[todo] == 0]
        return owner, T

    # -- exact pmfs for tabulation checks ---------------------------------
    def gen_pmf_table(self, ymax: int) -> np.ndarray:
        from .gw import generation_pmf
        return np.array([generation_pmf(self.offspring, i, ymax) for i in range(self.i_max + 1)])

    def pmf_T_given_V(self, y: Sequence[int], gen_table: np.ndarray) -> float:
        """Direct series ``(1/s_v) sum_i mu^-i prod_m P(Z_i = y_m)``; ``gen_table`` from :meth:`gen_pmf_table`."""
        y = np.asarray(y, dtype=np.int64)
        v = y.size
        if not np.any(y):
            return 0.0
        disc = self.mu ** -np.arange(self.i_max + 1)
        prod = np.prod(gen_table[:, y], axis=1)
        return float(disc @ prod / self.s_v[v - 1])


def sample_V(law: VTLaw, rng: np.random.Generator) -> int:
    return int(law.sample_V(rng))


def sample_T_given_V(law: VTLaw, v: int, rng: np.random.Generator) -> np.ndarray:
    return law.sample_T_given_V(v, rng)


@dataclass(frozen=True)
class PoissonSeries:
    """Points ``j_1 > j_2 > ...`` of PRM(c m_alpha) above ``r_min`` with marks."""

    radii: np.ndarray
    marks: np.ndarray


def _radii(alpha: float, c: float, r_min: float, rng: np.random.Generator) -> np.ndarray:
    # j_l = (c / Gamma_l)^(1/alpha); stop once j < r_min, i.e. Gamma > c r_min^-alpha
    gmax = c * r_min**-alpha
    out = []
    g = 0.0
    block = max(8, int(gmax * 1.2) + 8)
    while True:
        steps = g + np.cumsum(rng.exponential(size=block))
        inside = steps[steps <= gmax]
        out.append(inside)
        if inside.size < block:
            break
        g = steps[-1]
    gam = np.concatenate(out)
    return (c / gam) ** (1.0 / alpha)


def sample_poisson_series(model: DisplacementModel, r_min: float, rng: np.random.Generator) -> PoissonSeries:
    """Series representation of the radial Poisson points with angular/sign marks.

    Marks are signs ``+-1`` for the i.i.d. model and angular atom indices for
    the polar model.
    """
    if not r_min > 0:
        raise ValueError("r_min must be positive")
    c = model.lambda_radial_const
    radii = _radii(model.alpha, c, r_min, rng)
    if model.kind == "iid":
        marks = np.where(rng.random(radii.size) < model.p, 1, -1)
    else:
        marks = model.angular.sample_index(rng, radii.size)
    return PoissonSeries(radii, np.asarray(marks))


@dataclass(frozen=True)
class SscdpppSpec:
    """Everything needed to draw the limit process for a (offspring, displacement) pair."""

    offspring: OffspringLaw
    displacement: DisplacementModel
    vt: VTLaw = field(repr=False)

    @classmethod
    def from_model(cls, offspring: OffspringLaw, displacement: DisplacementModel) -> "SscdpppSpec":
        if displacement.kind == "polar" and offspring.max_offspring > displacement.B:
            raise ValueError("polar limit needs offspring bounded by B")
        return cls(offspring, displacement, VTLaw.build(offspring))

    @property
    def alpha(self) -> float:
        return self.displacement.alpha

    @property
    def scale_constant(self) -> float:
        """Constant multiplying ``W`` inside the random scale ``(const * W)^(1/alpha)``."""
        if self.displacement.kind == "iid":
            return self.vt.r
        return self.vt.s / self.vt.mu

    def survival_W(self, depth: int = 30) -> MartingaleLimitSampler:
        return MartingaleLimitSampler(self.offspring, depth, conditioned_on_survival=True)


def sample_N_star(spec: SscdpppSpec, law: VTLaw | None, w_sampler, threshold: float,
                  rng: np.random.Generator) -> PointMeasure:
    """Draw ``N_*`` restricted to ``{|x| >= threshold}``.

    ``w_sampler`` is a callable ``rng -> W`` or a positive constant (frozen W).
    The Poisson series is cut adaptively at ``threshold / scale`` for the
    realised scale, so no atom with ``|x| >= threshold`` is ever discarded.
    """
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    law = spec.vt if law is None else law
    w = float(w_sampler(rng)) if callable(w_sampler) else float(w_sampler)
    if not w > 0:
        raise ValueError("W must be positive (N_* is taken under survival)")
    scale = (spec.scale_constant * w) ** (1.0 / spec.alpha)
    series = sample_poisson_series(spec.displacement, threshold / scale, rng)
    if series.radii.size == 0:
        return PointMeasure.empty()
    if spec.displacement.kind == "iid":
        _, T = law.sample_clusters(rng, np.ones(series.radii.size, dtype=np.int64))
        loc = scale * series.radii * series.marks
        keep = np.abs(loc) >= threshold
        return PointMeasure.from_points(loc[keep], T[keep])
    V = law.sample_V(rng, series.radii.size)
    owner, T = law.sample_clusters(rng, V)
    rank = np.arange(owner.size) - np.repeat(np.cumsum(V) - V, V)
    eta = spec.displacement.angular.directions[series.marks[owner], rank]
    loc = scale * series.radii[owner] * eta
    keep = (T > 0) & (np.abs(loc) >= threshold) & (eta != 0)
    return PointMeasure.from_points(loc[keep], T[keep])


def sample_scdppp(alpha: float, decoration_sampler: Callable[[np.random.Generator], PointMeasure],
                  rng: np.random.Generator, threshold: float, c: float = 1.0,
                  decoration_max: float = 1.0) -> PointMeasure:
    """Generic ScDPPP(c m_alpha, decoration) restricted to ``{|x| >= threshold}``.

    Decorations must have every atom inside ``[-decoration_max, decoration_max]``.
    """
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    radii = _radii(alpha, c, threshold / decoration_max, rng)
    parts = []
    for lam in radii:
        d = decoration_sampler(rng)
        if len(d) and np.abs(d.locations).max() > decoration_max * (1 + 1e-12):
            raise ValueError("decoration atom exceeds decoration_max")
        parts.append(d.scale(lam).restrict(threshold))
    from .pointproc import superpose
    return superpose(parts)


# -- analytic functionals ---------------------------------------------------

def _radial_integral(h: Callable[[float], float], alpha: float, r_lo: float, kinks=()) -> float:
    """``int_{r_lo}^inf h(r) alpha r^(-alpha-1) dr`` via ``u = r^-alpha``."""
    u_hi = r_lo**-alpha
    pts = sorted(k**-alpha for k in kinks if k > r_lo)
    val, _ = integrate.quad(lambda u: h(u ** (-1.0 / alpha)), 0.0, u_hi,
                            points=pts or None, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def laplace_exponent(spec: SscdpppSpec, g: Callable, support_inner: float, kinks=()) -> float:
    """``L(g)`` with ``E* exp(-N_*(g)) = E* exp(-W L(g))``.

    i.i.d.:  ``sum_i mu^-i int (1 - f_i(e^{-g(x)})) nu_alpha(dx)``
    polar:   ``(c/mu) sum_eta Theta(eta) sum_v P(Z_1 = v) sum_i mu^-i
              int (1 - prod_{k<=v} f_i(e^{-g(r eta_k)})) m_alpha(dr)``
    where ``f_i`` is the pgf of ``Z_i``.  ``g`` must vanish on
    ``(-support_inner, support_inner)``.
    """
    law = spec.offspring
    mu = law.mean
    I = series_horizon(mu, 1e-14)
    disc = mu ** -np.arange(I + 1)
    alpha = spec.alpha
    model = spec.displacement

    def gen_sum(svals):
        # sum_i mu^-i (1 - prod_k f_i(s_k))
        cur = np.asarray(svals, dtype=float)
        tot = 0.0
        for i in range(I + 1):
            tot += disc[i] * (1.0 - np.prod(cur))
            cur = law.pgf(cur)
        return tot

    if model.kind == "iid":
        right = _radial_integral(lambda x: gen_sum([math.exp(-g(x))]), alpha, support_inner, kinks)
        left = _radial_integral(lambda x: gen_sum([math.exp(-g(-x))]), alpha, support_inner, kinks)
        return model.p * right + (1 - model.p) * left
    tab = law.pmf_table()
    total = 0.0
    for eta, w in zip(model.angular.directions, model.angular.weights):
        for v in range(1, len(tab)):
            if tab[v] == 0:
                continue
            e = eta[:v]
            if not np.any(e):
                continue
            lo = support_inner / np.abs(e).max()
            kk = [k / abs(c) for k in kinks for c in e if c != 0]
            val = _radial_integral(lambda r: gen_sum(np.exp(-g(r * e))), alpha, lo, kk)
            total += w * tab[v] * val
    return model.lambda_radial_const * total / mu


def limit_laplace(L: float, w_samples=None) -> tuple[float, float]:
    """``E exp(-W L)`` and its Monte Carlo standard error (0 when W is frozen at 1)."""
    if w_samples is None:
        return math.exp(-L), 0.0
    vals = np.exp(-np.asarray(w_samples) * L)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size))


# -- kappa -------------------------------------------------------------------

@dataclass(frozen=True)
class KappaResult:
    value: float
    method: str
    std_error: float = 0.0
    x_grid: tuple = ()
    per_point: tuple = ()
    per_point_se: tuple = ()

    def to_dict(self) -> dict:
        return {"value": self.value, "method": self.method, "se": self.std_error,
                "x_grid": list(self.x_grid), "per_point": list(self.per_point),
                "per_point_se": list(self.per_point_se)}


def kappa_lambda(model: DisplacementModel, offspring: OffspringLaw, method: str = "closed_form_iid",
                 rng: np.random.Generator | None = None, reps: int = 10_000,
                 x_grid: Sequence[float] = (1.0, 2.0, 4.0)) -> KappaResult:
    """Constant in ``P*(c_n^-1 M_n <= x) -> E* exp(-kappa W x^-alpha)``.

    ``closed_form_iid``: ``p * sum_i mu^-i P(Z_i > 0)``.
    ``closed_form_polar``: exact sum over which cluster coordinates carry mass.
    ``monte_carlo``: ``-log P(N_*(x, inf) = 0 | W = 1) x^alpha`` on ``x_grid``,
    one independent block of ``reps`` draws per grid point, combined by
    inverse-variance weighting.
    """
    if method == "closed_form_iid":
        if model.kind != "iid":
            raise ValueError("closed_form_iid needs an iid displacement model")
        vt = VTLaw.build(offspring)
        tail = offspring.mean ** -(vt.i_max + 1) / (1 - 1 / offspring.mean)
        if tail > SERIES_TOL:
            raise SeriesNotConverged(f"series tail bound {tail} exceeds {SERIES_TOL}")
        return KappaResult(model.p * vt.r, method)
    if method == "closed_form_polar":
        if model.kind != "polar":
            raise ValueError("closed_form_polar needs a polar displacement model")
        return KappaResult(_kappa_polar(model, VTLaw.build(offspring)), method)
    if method == "monte_carlo":
        if rng is None:
            raise ValueError("monte_carlo needs an rng")
        spec = SscdpppSpec.from_model(offspring, model)
        vals, ses = [], []
        for x, r in zip(x_grid, rng.spawn(len(x_grid))):
            zero = 0
            for rr in r.spawn(reps):
                m = sample_N_star(spec, None, 1.0, x, rr)
                zero += m.count_exceedances(x)[0] == 0
            pz = zero / reps
            if pz in (0.0, 1.0):
                raise ValueError(f"degenerate zero fraction {pz} at x={x}; widen reps or x_grid")
            se = math.sqrt(pz * (1 - pz) / reps) / pz
            vals.append(-math.log(pz) * x**model.alpha)
            ses.append(se * x**model.alpha)
        w = 1 / np.square(ses)
        value = float(np.sum(w * vals) / w.sum())
        return KappaResult(value, method, float(1 / math.sqrt(w.sum())), tuple(x_grid),
                           tuple(vals), tuple(ses))
    raise ValueError(f"unknown kappa method {method!r}")


def _kappa_polar(model: DisplacementModel, vt: VTLaw) -> float:
    # rate of clusters reaching (x, inf) at x = 1 with W = 1:
    # (s/mu) c sum_eta w E[max_{k <= V, T_k > 0} (eta_k^+)^alpha]
    q = vt.extinction.q
    a = model.alpha
    total = 0.0
    for eta, w in zip(model.angular.directions, model.angular.weights):
        pos = np.maximum(eta, 0.0) ** a
        for v, pv in zip(vt.v_support, vt.v_pmf):
            gw_row = vt.gen_weights[v - 1]
            acc = 0.0
            for i, wi in enumerate(gw_row):
                if wi == 0:
                    continue
                qi = q[i]
                denom = 1.0 - qi**v
                for size in range(1, v + 1):
                    prob = (1 - qi) ** size * qi ** (v - size) / denom
                    for A in combinations(range(v), size):
                        acc += wi * prob * pos[list(A)].max()
            total += w * pv * acc
    return vt.s / vt.mu * model.lambda_radial_const * total
