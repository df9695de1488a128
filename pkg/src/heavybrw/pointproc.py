"""Finite point measures on the punctured line and Laplace-functional estimators."""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

# Annulus grid used as the distance surrogate between point measures.
ANNULUS_GRID = tuple(2.0**k for k in range(-2, 7))


@dataclass(frozen=True, eq=False)
class PointMeasure:
    """Finite sum of Dirac masses at nonzero finite locations.

    Stored canonically: ``locations`` strictly increasing, ``multiplicities``
    positive integers.
    """

    locations: np.ndarray
    multiplicities: np.ndarray

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float).ravel()
        mult = np.asarray(self.multiplicities, dtype=np.int64).ravel()
        if loc.shape != mult.shape:
            raise ValueError("locations and multiplicities differ in length")
        if not np.all(np.isfinite(loc)):
            raise ValueError("point measures cannot charge +-inf")
        if np.any(loc == 0):
            raise ValueError("point measures cannot charge 0")
        if np.any(mult < 1):
            raise ValueError("multiplicities must be >= 1")
        if loc.size > 1 and not np.all(np.diff(loc) > 0):
            loc, inv = np.unique(loc, return_inverse=True)
            mult = np.bincount(inv, weights=mult, minlength=loc.size).astype(np.int64)
        loc.setflags(write=False)
        mult.setflags(write=False)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "multiplicities", mult)

    @classmethod
    def empty(cls) -> "PointMeasure":
        return cls(np.empty(0), np.empty(0, dtype=np.int64))

    @classmethod
    def from_points(cls, points, multiplicities=None) -> "PointMeasure":
        points = np.asarray(points, dtype=float).ravel()
        if multiplicities is None:
            multiplicities = np.ones(points.size, dtype=np.int64)
        return cls(points, multiplicities)

    def __eq__(self, other):
        if not isinstance(other, PointMeasure):
            return NotImplemented
        return (np.array_equal(self.locations, other.locations)
                and np.array_equal(self.multiplicities, other.multiplicities))

    def __len__(self):
        return self.locations.size

    def __add__(self, other: "PointMeasure") -> "PointMeasure":
        return superpose([self, other])

    def __repr__(self):
        atoms = ", ".join(f"{x:g}:{m}" for x, m in zip(self.locations[:6], self.multiplicities[:6]))
        more = ", ..." if len(self) > 6 else ""
        return f"PointMeasure({atoms}{more})"

    @property
    def mass(self) -> int:
        return int(self.multiplicities.sum())

    def scale(self, b: float) -> "PointMeasure":
        if not b > 0:
            raise ValueError("scale factor must be positive")
        return PointMeasure(self.locations * b, self.multiplicities)

    def restrict(self, threshold: float) -> "PointMeasure":
        """Atoms with ``|x| >= threshold``."""
        keep = np.abs(self.locations) >= threshold
        return PointMeasure(self.locations[keep], self.multiplicities[keep])

    def integrate(self, f: Callable) -> float:
        if not len(self):
            return 0.0
        return float(self.multiplicities @ f(self.locations))

    def count_exceedances(self, x: float) -> tuple[int, int]:
        if not x > 0:
            raise ValueError("x must be positive")
        hi = np.searchsorted(self.locations, x, side="right")
        lo = np.searchsorted(self.locations, -x, side="left")
        return int(self.multiplicities[hi:].sum()), int(self.multiplicities[:lo].sum())

    def rightmost(self) -> float | None:
        return float(self.locations[-1]) if len(self) else None

    def leftmost(self) -> float | None:
        return float(self.locations[0]) if len(self) else None

    def annulus_counts(self, edges: Sequence[float] = ANNULUS_GRID) -> np.ndarray:
        """Mass in ``(e_j, e_{j+1}]`` and ``(e_last, inf)`` on each side of 0.

        Returned as ``[negative side (outer to inner)..., positive side (inner to outer)...]``.
        """
        return annulus_counts(self.locations, self.multiplicities, edges)

    # -- serialisation ----------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("location,multiplicity\n")
        for x, m in zip(self.locations, self.multiplicities):
            buf.write(f"{float(x)!r},{int(m)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PointMeasure":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if lines and lines[0].startswith("location"):
            lines = lines[1:]
        if not lines:
            return cls.empty()
        rows = [ln.split(",") for ln in lines]
        return cls([float(r[0]) for r in rows], [int(r[1]) for r in rows])


def annulus_counts(locations, multiplicities, edges=ANNULUS_GRID) -> np.ndarray:
    edges = np.asarray(edges, dtype=float)
    locations = np.asarray(locations, dtype=float)
    multiplicities = np.asarray(multiplicities)

    def side(mag, w):
        # number of edges strictly below |x|; 0 means inside the inner edge
        idx = np.searchsorted(edges, mag, side="left")
        return np.bincount(idx, weights=w, minlength=edges.size + 1)[1:]

    pos = locations > 0
    right = side(locations[pos], multiplicities[pos])
    left = side(-locations[~pos], multiplicities[~pos])[::-1]
    return np.concatenate([left, right]).astype(np.int64)


def superpose(ms: Iterable[PointMeasure]) -> PointMeasure:
    ms = list(ms)
    if not ms:
        return PointMeasure.empty()
    loc = np.concatenate([m.locations for m in ms])
    mult = np.concatenate([m.multiplicities for m in ms])
    if loc.size == 0:
        return PointMeasure.empty()
    loc, inv = np.unique(loc, return_inverse=True)
    return PointMeasure(loc, np.bincount(inv, weights=mult).astype(np.int64))


def scale(m: PointMeasure, b: float) -> PointMeasure:
    return m.scale(b)


def integrate(m: PointMeasure, f: Callable) -> float:
    return m.integrate(f)


def count_exceedances(m: PointMeasure, x: float) -> tuple[int, int]:
    return m.count_exceedances(x)


def rightmost(m: PointMeasure) -> float | None:
    return m.rightmost()


@dataclass(frozen=True)
class TestFunction:
    """Ramp ``f(x) = theta * clamp((|x| - a) / w, 0, 1)``; vanishes on ``(-a, a)``."""

    __test__ = False  # not a pytest class

    a: float
    w: float = 1.0
    theta: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.w > 0 and self.theta > 0):
            raise ValueError("a, w and theta must be positive")

    def __call__(self, x):
        return self.theta * np.clip((np.abs(x) - self.a) / self.w, 0.0, 1.0)

    def scaled(self, y: float) -> Callable:
        """``x -> f(x / y)``."""
        return lambda x: self(np.asarray(x) / y)

    def to_config(self) -> dict:
        return {"a": self.a, "w": self.w, "theta": self.theta}


@dataclass(frozen=True)
class LaplaceEstimate:
    value: float
    std_error: float
    reps: int

    def to_json(self) -> str:
        return json.dumps({"value": self.value, "se": self.std_error, "reps": self.reps})

    @property
    def neg_log(self) -> tuple[float, float]:
        """``-log value`` with its delta-method standard error."""
        return -math.log(self.value), self.std_error / self.value

    @classmethod
    def from_samples(cls, values) -> "LaplaceEstimate":
        values = np.asarray(values, dtype=float)
        n = values.size
        return cls(float(values.mean()), float(values.std(ddof=1) / math.sqrt(n)), n)


def _streams(rng, reps):
    if isinstance(rng, np.random.Generator):
        return rng.spawn(reps)
    ss = np.random.SeedSequence(rng)
    return [np.random.default_rng(s) for s in ss.spawn(reps)]


def estimate_laplace(sampler: Callable[[np.random.Generator], PointMeasure], f: Callable,
                     reps: int, rng) -> LaplaceEstimate:
    """Monte Carlo estimate of ``E exp(-N(f))`` with one derived stream per replication."""
    if reps < 2:
        raise ValueError("reps must be >= 2")
    vals = [math.exp(-sampler(r).integrate(f)) for r in _streams(rng, reps)]
    return LaplaceEstimate.from_samples(vals)


def scaled_laplace(sampler: Callable[[np.random.Generator], PointMeasure], f: Callable,
                   y: float, reps: int, rng) -> LaplaceEstimate:
    """Estimate of ``E exp(-int f(x / y) N(dx))``."""
    if not y > 0:
        raise ValueError("y must be positive")
    return estimate_laplace(lambda r: sampler(r).scale(1.0 / y), f, reps, rng)
