"""Galton-Watson machinery: offspring laws, generation sizes, extinction
probabilities and the martingale limit ``W = lim Z_n / mu^n``.

Every offspring law shipped here has either finite support or finite
variance, so ``E[Z_1 log+ Z_1] < inf`` (Kesten-Stigum) holds and ``W > 0``
almost surely on survival.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import stats

# Hard limit on materialised particles per generation.
POPULATION_CAP = 10**8
# Limit for counting-only samplers (no per-particle storage).
COUNTER_CAP = 2**62

_KINDS = ("deterministic", "binomial", "geometric", "poisson", "table")


class PopulationCapError(RuntimeError):
    """Raised when a generation would exceed the configured population cap."""

    def __init__(self, generation, size, cap):
        self.generation = generation
        self.size = size
        self.cap = cap
        super().__init__(
            f"population cap exceeded at generation {generation}: "
            f"{size} > {cap}"
        )


class RejectionBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class OffspringLaw:
    """Supercritical progeny distribution.

    Use the named constructors (:meth:`deterministic`, :meth:`binomial`,
    :meth:`geometric`, :meth:`poisson`, :meth:`table`) rather than calling
    the class directly.  ``geometric(a)`` has pmf ``(1 - a) a^k`` on
    ``k = 0, 1, ...`` and mean ``a / (1 - a)``.
    """

    kind: str
    params: tuple
    mean: float = field(init=False)
    _table: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown offspring kind {self.kind!r}")
        tab = _tabulate(self.kind, self.params)
        total = tab.sum()
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"offspring pmf sums to {total!r}, not 1")
        if np.any(tab < 0):
            raise ValueError("offspring pmf has negative entries")
        tab.setflags(write=False)
        object.__setattr__(self, "_table", tab)
        object.__setattr__(self, "mean", _exact_mean(self.kind, self.params, tab))
        if not self.mean > 1.0:
            raise ValueError(
                f"offspring mean {self.mean} <= 1: only supercritical laws are supported"
            )

    # -- constructors -----------------------------------------------------
    @classmethod
    def deterministic(cls, k: int) -> "OffspringLaw":
        return cls("deterministic", (int(k),))

    @classmethod
    def binomial(cls, n: int, p: float) -> "OffspringLaw":
        if not 0.0 <= p <= 1.0:
            raise ValueError("binomial p must lie in [0, 1]")
        return cls("binomial", (int(n), float(p)))

    @classmethod
    def geometric(cls, a: float) -> "OffspringLaw":
        if not 0.0 < a < 1.0:
            raise ValueError("geometric parameter a must lie in (0, 1)")
        return cls("geometric", (float(a),))

    @classmethod
    def poisson(cls, m: float) -> "OffspringLaw":
        return cls("poisson", (float(m),))

    @classmethod
    def table(cls, pmf) -> "OffspringLaw":
        return cls("table", tuple(float(v) for v in pmf))

    @classmethod
    def from_config(cls, cfg: dict[str, Any]) -> "OffspringLaw":
        cfg = dict(cfg)
        kind = cfg.pop("kind", None)
        try:
            if kind == "deterministic":
                return cls.deterministic(cfg["k"])
            if kind == "binomial":
                return cls.binomial(cfg["n"], cfg["p"])
            if kind == "geometric":
                return cls.geometric(cfg["a"])
            if kind == "poisson":
                return cls.poisson(cfg["m"])
            if kind == "table":
                return cls.table(cfg["pmf"])
        except KeyError as exc:
            raise ValueError(f"offspring law {kind!r} is missing field {exc.args[0]!r}") from None
        raise ValueError(f"unknown offspring kind {kind!r}")

    def to_config(self) -> dict[str, Any]:
        names = {
            "deterministic": ("k",),
            "binomial": ("n", "p"),
            "geometric": ("a",),
            "poisson": ("m",),
        }
        if self.kind == "table":
            return {"kind": "table", "pmf": list(self.params)}
        return {"kind": self.kind, **dict(zip(names[self.kind], self.params))}

    # -- distribution -----------------------------------------------------
    @property
    def max_offspring(self) -> float:
        """Upper bound of the support (``inf`` for unbounded laws)."""
        if self.kind in ("geometric", "poisson"):
            return float("inf")
        return float(len(self._table) - 1)

    def pmf_table(self) -> np.ndarray:
        """pmf on ``0..K``; unbounded laws are cut at the ``1 - 1e-15`` quantile."""
        return self._table

    def pmf(self, k):
        k = np.asarray(k)
        a = self.params[0] if self.kind in ("geometric", "poisson") else None
        if self.kind == "geometric":
            out = np.where(k >= 0, (1 - a) * a ** np.maximum(k, 0), 0.0)
        elif self.kind == "poisson":
            out = stats.poisson.pmf(k, a)
        else:
            tab = self._table
            inside = (k >= 0) & (k < len(tab))
            out = np.where(inside, tab[np.clip(k, 0, len(tab) - 1)], 0.0)
        return out[()] if out.ndim == 0 else out

    def pgf(self, s):
        """Probability generating function; accepts real or complex arrays."""
        s = np.asarray(s)
        if self.kind == "deterministic":
            return s ** self.params[0]
        if self.kind == "binomial":
            n, p = self.params
            return (1 - p + p * s) ** n
        if self.kind == "geometric":
            (a,) = self.params
            return (1 - a) / (1 - a * s)
        if self.kind == "poisson":
            (m,) = self.params
            return np.exp(m * (s - 1))
        return np.polynomial.polynomial.polyval(s, self._table)

    def iterated_pgf(self, s, i: int):
        """pgf of ``Z_i``: the ``i``-fold composition of :meth:`pgf`."""
        out = np.asarray(s, dtype=float if np.isrealobj(s) else complex)
        for _ in range(i):
            out = self.pgf(out)
        return out

    # -- sampling ---------------------------------------------------------
    def sample(self, rng: np.random.Generator, size=None):
        """Independent offspring counts, one per particle."""
        if self.kind == "deterministic":
            return np.full(size, self.params[0], dtype=np.int64) if size is not None else self.params[0]
        if self.kind == "binomial":
            return rng.binomial(self.params[0], self.params[1], size=size)
        if self.kind == "geometric":
            return rng.negative_binomial(1, 1 - self.params[0], size=size)
        if self.kind == "poisson":
            return rng.poisson(self.params[0], size=size)
        return rng.choice(len(self._table), size=size, p=self._table)

    def sample_sum(self, rng: np.random.Generator, z):
        """Sum of ``z`` i.i.d. offspring counts, O(1) in ``z``; ``z`` may be an array."""
        z = np.asarray(z, dtype=np.int64)
        if self.kind == "deterministic":
            return z * self.params[0]
        if self.kind == "binomial":
            return rng.binomial(z * self.params[0], self.params[1])
        if self.kind == "poisson":
            return rng.poisson(self.params[0] * z)
        if self.kind == "geometric":
            out = np.zeros_like(z)
            pos = z > 0
            if np.ndim(z) == 0:
                return rng.negative_binomial(z, 1 - self.params[0]) if pos else out
            out[pos] = rng.negative_binomial(z[pos], 1 - self.params[0])
            return out
        counts = rng.multinomial(z, self._table)
        return counts @ np.arange(len(self._table))


def _tabulate(kind, params) -> np.ndarray:
    if kind == "deterministic":
        (k,) = params
        if k < 0:
            raise ValueError("deterministic offspring count must be >= 0")
        tab = np.zeros(k + 1)
        tab[k] = 1.0
        return tab
    if kind == "binomial":
        n, p = params
        return stats.binom.pmf(np.arange(n + 1), n, p)
    if kind == "geometric":
        (a,) = params
        kmax = int(np.ceil(np.log(1e-15) / np.log(a)))
        tab = (1 - a) * a ** np.arange(kmax + 1)
        tab[-1] += a ** (kmax + 1)
        return tab
    if kind == "poisson":
        (m,) = params
        if m <= 0:
            raise ValueError("poisson mean must be positive")
        kmax = int(stats.poisson.ppf(1 - 1e-15, m)) + 1
        tab = stats.poisson.pmf(np.arange(kmax + 1), m)
        tab[-1] += stats.poisson.sf(kmax, m)
        return tab
    return np.asarray(params, dtype=float).copy()


def _exact_mean(kind, params, tab) -> float:
    if kind == "geometric":
        return params[0] / (1 - params[0])
    if kind == "poisson":
        return params[0]
    if kind == "binomial":
        return params[0] * params[1]
    return float(np.arange(len(tab)) @ tab)


@dataclass(frozen=True)
class ExtinctionProfile:
    """``q[i] = P(Z_i = 0)`` for ``i = 0..horizon``."""

    q: np.ndarray
    horizon: int

    @property
    def q_star(self) -> float:
        return float(self.q[-1])


def extinction_profile(law: OffspringLaw, horizon: int) -> ExtinctionProfile:
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    q = np.zeros(horizon + 1)
    for i in range(horizon):
        q[i + 1] = law.pgf(q[i])
    q.setflags(write=False)
    return ExtinctionProfile(q=q, horizon=horizon)


def extinction_probability(law: OffspringLaw, tol: float = 1e-15) -> float:
    """Smallest fixed point of the pgf in [0, 1]."""
    q = 0.0
    for _ in range(1_000_000):
        nxt = float(law.pgf(q))
        if abs(nxt - q) <= tol:
            return nxt
        q = nxt
    return q


def sample_generation_size(law: OffspringLaw, z_prev: int, rng: np.random.Generator,
                           cap: int = POPULATION_CAP, generation: int | None = None) -> int:
    """Size of the next generation given ``z_prev`` parents."""
    if z_prev < 0:
        raise ValueError("z_prev must be >= 0")
    if z_prev == 0:
        return 0
    z = int(law.sample_sum(rng, z_prev))
    if z > cap:
        raise PopulationCapError(generation, z, cap)
    return z


def generation_pmf(law: OffspringLaw, i: int, ymax: int) -> np.ndarray:
    """``P(Z_i = y)`` for ``y = 0..ymax`` by truncated power-series composition.

    Uses ``Z_{i+1} = sum_{k<Z_1} Z_i^{(k)}``; truncating every series at degree
    ``ymax`` is exact for the coefficients kept.
    """
    tab = law.pmf_table()
    cur = np.zeros(ymax + 1)
    if ymax >= 1:
        cur[1] = 1.0
    for _ in range(i):
        # Horner: f(P) = p0 + P (p1 + P (p2 + ...))
        acc = np.zeros(ymax + 1)
        for pk in tab[::-1]:
            acc = np.convolve(acc, cur)[: ymax + 1]
            acc[0] += pk
        cur = acc
    return cur


@dataclass(frozen=True)
class MartingaleLimitSampler:
    """Approximate sampler of ``W`` via ``Z_m / mu^m`` at depth ``m``.

    With ``conditioned_on_survival`` the draw is rejected until ``Z_m > 0``,
    a finite-horizon stand-in for conditioning on ultimate survival.
    """

    law: OffspringLaw
    depth: int = 30
    conditioned_on_survival: bool = False
    max_attempts: int = 10_000

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")

    def _raw(self, rng, size):
        z = np.ones(size, dtype=np.int64)
        for g in range(self.depth):
            z = self.law.sample_sum(rng, z)
            if np.any(z > COUNTER_CAP):
                raise PopulationCapError(g + 1, int(z.max()), COUNTER_CAP)
        return z

    def sample(self, rng: np.random.Generator, size: int | None = None):
        n = 1 if size is None else int(size)
        scale = self.law.mean ** -self.depth
        z = self._raw(rng, n)
        if self.conditioned_on_survival:
            dead = np.flatnonzero(z == 0)
            attempts = 1
            while dead.size:
                if attempts >= self.max_attempts:
                    raise RejectionBudgetError(
                        f"survival rejection budget of {self.max_attempts} attempts exhausted"
                    )
                z[dead] = self._raw(rng, dead.size)
                dead = dead[z[dead] == 0]
                attempts += 1
        w = z * scale
        return float(w[0]) if size is None else w

    def __call__(self, rng: np.random.Generator) -> float:
        return self.sample(rng)


def sample_W(sampler: MartingaleLimitSampler, rng: np.random.Generator) -> float:
    return sampler.sample(rng)
