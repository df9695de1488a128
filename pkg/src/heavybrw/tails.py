"""Regularly varying displacement laws and their limit intensities.

Two displacement families ship:

* ``iid``: children receive independent pure-Pareto steps with tail index
  ``alpha`` and right-tail weight ``p``.  The limit measure charges only the
  coordinate axes.
* ``polar``: all children of a parent share one radial Pareto draw ``R`` and
  one direction ``eta`` from a finite angular measure on the sup-norm sphere;
  child ``k`` moves by ``R * eta_k``.

Normalisation convention: ``b(n)`` is chosen so that
``n P(|X_1| > b(n)) = 1``, which makes the first marginal of the limit
measure equal to the unit-mass tail measure ``nu_alpha``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class TailIndexSpec:
    alpha: float
    p: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    def nu_tail(self, t):
        """``nu_alpha({|x| > t})`` split as ``(right, left)`` masses."""
        t = np.asarray(t, dtype=float)
        base = t ** -self.alpha
        return self.p * base, self.q * base


@dataclass(frozen=True)
class ScalarHeavyLaw:
    """Pure Pareto magnitude on ``[1, inf)`` with an independent random sign.

    ``P(|X| > x) = x^-alpha`` exactly for ``x >= 1``.
    """

    spec: TailIndexSpec

    @property
    def alpha(self) -> float:
        return self.spec.alpha

    def sf_abs(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 1.0, 1.0, np.maximum(x, 1.0) ** -self.alpha)

    def cdf(self, x):
        """Distribution function of the signed variable."""
        x = np.asarray(x, dtype=float)
        right = self.spec.p * self.sf_abs(np.abs(x))
        left = self.spec.q * self.sf_abs(np.abs(x))
        return np.where(x >= 0, 1.0 - right, left)

    def sample(self, rng: np.random.Generator, size=None):
        u = 1.0 - rng.random(size)
        mag = u ** (-1.0 / self.alpha)
        if self.spec.p >= 1.0:
            return mag
        sign = np.where(rng.random(size) < self.spec.p, 1.0, -1.0)
        return sign * mag


def sample_scalar(law: ScalarHeavyLaw, rng: np.random.Generator) -> float:
    return float(law.sample(rng))


@dataclass(frozen=True)
class AngularMeasure:
    """Finite atomic probability measure on the sup-norm unit sphere of R^B."""

    directions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.directions, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if d.shape[0] != w.size:
            raise ValueError("one weight per direction is required")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("angular weights must be a probability vector")
        if not np.allclose(np.abs(d).max(axis=1), 1.0, rtol=0, atol=1e-12):
            raise ValueError("every direction must have sup-norm 1")
        d.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    @classmethod
    def from_config(cls, atoms: Sequence[dict]) -> "AngularMeasure":
        return cls([a["dir"] for a in atoms], [a["w"] for a in atoms])

    def to_config(self) -> list[dict]:
        return [{"dir": list(map(float, d)), "w": float(w)}
                for d, w in zip(self.directions, self.weights)]

    def sample_index(self, rng, size=None):
        return rng.choice(len(self.weights), size=size, p=self.weights)


@dataclass(frozen=True)
class RectQuery:
    """Intersection of half-spaces ``{x_k > t}`` (sign +1) or ``{x_k < -t}`` (sign -1).

    ``constraints`` is a tuple of ``(k, sign, t)`` with 0-based coordinate ``k``.
    """

    constraints: tuple

    def __post_init__(self):
        cons = tuple((int(k), int(s), float(t)) for k, s, t in self.constraints)
        if not cons:
            raise ValueError("empty query is the whole space (not bounded away from 0)")
        for k, s, t in cons:
            if k < 0 or s not in (1, -1):
                raise ValueError(f"bad constraint {(k, s, t)}")
            if not t > 0:
                raise ValueError("query thresholds must be > 0 (sets must avoid a neighbourhood of 0)")
        object.__setattr__(self, "constraints", cons)

    @classmethod
    def above(cls, k: int, t: float) -> "RectQuery":
        return cls(((k, 1, t),))

    @classmethod
    def below(cls, k: int, t: float) -> "RectQuery":
        return cls(((k, -1, t),))

    def __and__(self, other: "RectQuery") -> "RectQuery":
        return RectQuery(self.constraints + other.constraints)

    def scaled(self, b: float) -> "RectQuery":
        """The set ``b * self``."""
        if not b > 0:
            raise ValueError("scale must be positive")
        return RectQuery(tuple((k, s, b * t) for k, s, t in self.constraints))

    @property
    def coords(self) -> set:
        return {k for k, _, _ in self.constraints}


@dataclass(frozen=True)
class ScalingSequence:
    """``b(n) = (n * tail_const)^(1/alpha)`` and ``c_n = b(floor(mu^n))``.

    ``tail_const`` is the constant in ``P(|X_1| > x) = tail_const * x^-alpha``.
    """

    alpha: float
    mu: float
    tail_const: float = 1.0

    def b(self, n: float) -> float:
        return (n * self.tail_const) ** (1.0 / self.alpha)

    def log_c(self, n: int) -> float:
        if n < 0:
            raise ValueError("n must be >= 0")
        log_mu_n = n * math.log(self.mu)
        if log_mu_n < 52 * math.log(2):
            log_count = math.log(math.floor(self.mu**n))
        else:
            # floor is immaterial at this magnitude
            log_count = log_mu_n
        return (log_count + math.log(self.tail_const)) / self.alpha

    def c(self, n: int) -> float:
        if n >= 0 and n * math.log(self.mu) < 52 * math.log(2):
            return self.b(math.floor(self.mu**n))
        return math.exp(self.log_c(n))


def c_n(seq: ScalingSequence, n: int) -> float:
    return seq.c(n)


@dataclass(frozen=True)
class DisplacementModel:
    """Joint law of the displacements handed to the children of one parent.

    Build with :meth:`iid` or :meth:`polar`.  For ``polar``, ``radial_const``
    is ``c`` in ``P(R > r) = c r^-alpha`` (``r >= c^(1/alpha)``).
    """

    kind: str
    alpha: float
    p: float = 1.0
    B: int | None = None
    radial_const: float = 1.0
    angular: AngularMeasure | None = None
    scalar: ScalarHeavyLaw = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("iid", "polar"):
            raise ValueError(f"unknown displacement kind {self.kind!r}")
        spec = TailIndexSpec(self.alpha, self.p if self.kind == "iid" else 1.0)
        object.__setattr__(self, "scalar", ScalarHeavyLaw(spec))
        if self.kind == "polar":
            if self.angular is None or self.B is None:
                raise ValueError("polar model needs B and an angular measure")
            if self.angular.dim != self.B:
                raise ValueError("angular measure dimension must equal B")
            if not self.radial_const > 0:
                raise ValueError("radial constant must be positive")
            if not np.any(self.angular.directions[:, 0] != 0):
                raise ValueError("first coordinate must not vanish under the angular measure")

    @classmethod
    def iid(cls, alpha: float, p: float = 1.0) -> "DisplacementModel":
        return cls("iid", float(alpha), float(p))

    @classmethod
    def polar(cls, alpha: float, angular: AngularMeasure, radial_const: float = 1.0) -> "DisplacementModel":
        return cls("polar", float(alpha), 1.0, angular.dim, float(radial_const), angular)

    @classmethod
    def from_config(cls, cfg: dict[str, Any]) -> "DisplacementModel":
        kind = cfg.get("kind")
        if "alpha" not in cfg:
            raise ValueError("displacement model is missing field 'alpha'")
        if kind == "iid":
            return cls.iid(cfg["alpha"], cfg.get("p", 1.0))
        if kind == "polar":
            if "angular" not in cfg:
                raise ValueError("polar displacement model is missing field 'angular'")
            ang = AngularMeasure.from_config(cfg["angular"])
            if "B" in cfg and int(cfg["B"]) != ang.dim:
                raise ValueError("B does not match the angular measure dimension")
            return cls.polar(cfg["alpha"], ang, cfg.get("c", 1.0))
        raise ValueError(f"unknown displacement kind {kind!r}")

    def to_config(self) -> dict[str, Any]:
        if self.kind == "iid":
            return {"kind": "iid", "alpha": self.alpha, "p": self.p}
        return {"kind": "polar", "alpha": self.alpha, "B": self.B, "c": self.radial_const,
                "angular": self.angular.to_config()}

    # -- tail constants ---------------------------------------------------
    def _eta_moment(self, k: int, sign: int = 0) -> float:
        d = self.angular.directions[:, k]
        if sign > 0:
            d = np.maximum(d, 0.0)
        elif sign < 0:
            d = np.maximum(-d, 0.0)
        else:
            d = np.abs(d)
        return float(self.angular.weights @ d**self.alpha)

    @property
    def marginal_tail_const(self) -> float:
        """``c`` with ``P(|X_1| > x) = c x^-alpha`` for large ``x``."""
        if self.kind == "iid":
            return 1.0
        return self.radial_const * self._eta_moment(0)

    @property
    def lambda_radial_const(self) -> float:
        """Radial constant of the limit measure under the marginal normalisation."""
        if self.kind == "iid":
            return 1.0
        return 1.0 / self._eta_moment(0)

    def scaling(self, mu: float) -> ScalingSequence:
        return ScalingSequence(self.alpha, mu, self.marginal_tail_const)

    # -- sampling ---------------------------------------------------------
    def sample_vector(self, count: int, rng: np.random.Generator) -> np.ndarray:
        if count < 0:
            raise ValueError("count must be >= 0")
        if self.kind == "iid":
            return self.scalar.sample(rng, count)
        if count > self.B:
            raise ValueError(f"polar model supports at most B={self.B} children, got {count}")
        r = self._radial(rng, None)
        eta = self.angular.directions[self.angular.sample_index(rng)]
        return r * eta[:count]

    def sample_children(self, counts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Displacements for a whole generation, flattened in parent order."""
        counts = np.asarray(counts, dtype=np.int64)
        total = int(counts.sum())
        if self.kind == "iid":
            return self.scalar.sample(rng, total)
        if counts.size and counts.max() > self.B:
            raise ValueError(f"polar model supports at most B={self.B} children")
        nparents = counts.size
        r = self._radial(rng, nparents)
        idx = self.angular.sample_index(rng, nparents)
        parent = np.repeat(np.arange(nparents), counts)
        starts = np.cumsum(counts) - counts
        rank = np.arange(total) - np.repeat(starts, counts)
        return r[parent] * self.angular.directions[idx[parent], rank]

    def _radial(self, rng, size):
        u = 1.0 - rng.random(size)
        return self.radial_const ** (1.0 / self.alpha) * u ** (-1.0 / self.alpha)

    # -- limit intensity --------------------------------------------------
    def lambda_intensity(self, query) -> float:
        """Analytic ``lambda(query)`` for a :class:`RectQuery` or a union (iterable) of them."""
        if isinstance(query, RectQuery):
            return self._lambda_rect(query)
        parts = list(query)
        total = 0.0
        for r in range(1, len(parts) + 1):
            for sub in combinations(parts, r):
                inter = sub[0]
                for s in sub[1:]:
                    inter = inter & s
                total += (-1) ** (r + 1) * self._lambda_rect(inter)
        return total

    def _lambda_rect(self, query: RectQuery) -> float:
        a = self.alpha
        if self.kind == "iid":
            if len(query.coords) > 1:
                return 0.0
            lo_pos, lo_neg = 0.0, 0.0
            for _, s, t in query.constraints:
                if s > 0:
                    lo_pos = max(lo_pos, t)
                else:
                    lo_neg = max(lo_neg, t)
            if lo_pos and lo_neg:
                return 0.0
            if lo_pos:
                return self.p * lo_pos**-a
            return (1.0 - self.p) * lo_neg**-a
        dirs = self.angular.directions
        if max(query.coords) >= self.B:
            return 0.0
        rmin = np.zeros(len(dirs))
        ok = np.ones(len(dirs), dtype=bool)
        for k, s, t in query.constraints:
            comp = s * dirs[:, k]
            ok &= comp > 0
            with np.errstate(divide="ignore"):
                rmin = np.maximum(rmin, np.where(comp > 0, t / np.where(comp > 0, comp, 1.0), np.inf))
        mass = np.where(ok, rmin ** -a, 0.0)
        return float(self.lambda_radial_const * (self.angular.weights @ mass))

    def marginal_masses(self, t: float = 1.0, dims: Iterable[int] | None = None) -> np.ndarray:
        """``lambda({x_k > t})`` for each coordinate ``k``."""
        if dims is None:
            dims = range(self.B if self.kind == "polar" else 4)
        return np.array([self.lambda_intensity(RectQuery.above(k, t)) for k in dims])


def sample_displacement_vector(model: DisplacementModel, count: int, rng: np.random.Generator) -> np.ndarray:
    return model.sample_vector(count, rng)


def lambda_intensity(model: DisplacementModel, query) -> float:
    return model.lambda_intensity(query)


def homogeneity_check(model: DisplacementModel, query: RectQuery, b: float) -> tuple[float, float]:
    """``(lambda(b * set), b^-alpha lambda(set))``; the two agree for a valid limit measure."""
    return model.lambda_intensity(query.scaled(b)), b ** -model.alpha * model.lambda_intensity(query)
