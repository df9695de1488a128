"""Forward simulation of the branching random walk.

A run keeps only the current generation: particle positions and, when the
one-big-jump companion process is requested, the matrix of ancestral edge
displacements (``Z_n x n``).  Full trees are never stored.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .gw import POPULATION_CAP, OffspringLaw, PopulationCapError
from .pointproc import ANNULUS_GRID, PointMeasure, annulus_counts
from .tails import DisplacementModel

log = logging.getLogger(__name__)


class ConditioningError(RuntimeError):
    pass


@dataclass(frozen=True)
class BrwModel:
    offspring: OffspringLaw
    displacement: DisplacementModel

    def __post_init__(self):
        if self.displacement.kind == "polar" and self.offspring.max_offspring > self.displacement.B:
            raise ValueError(
                f"polar displacements need offspring bounded by B={self.displacement.B}, "
                f"law has max {self.offspring.max_offspring}"
            )

    def c_n(self, n: int) -> float:
        return self.displacement.scaling(self.offspring.mean).c(n)

    @classmethod
    def from_config(cls, cfg: dict) -> "BrwModel":
        for key in ("offspring", "displacement"):
            if key not in cfg:
                raise ValueError(f"model is missing field {key!r}")
        return cls(OffspringLaw.from_config(cfg["offspring"]),
                   DisplacementModel.from_config(cfg["displacement"]))

    def to_config(self) -> dict:
        return {"offspring": self.offspring.to_config(), "displacement": self.displacement.to_config()}


@dataclass
class GenerationState:
    n: int
    positions: np.ndarray
    # ancestral edge displacements, one row per particle (None when not tracked)
    edges: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.positions.size

    @property
    def max_jump_per_particle(self) -> np.ndarray:
        if self.edges is None or self.edges.shape[1] == 0:
            return np.zeros(self.size)
        return np.abs(self.edges).max(axis=1)


@dataclass(frozen=True)
class BrwRunResult:
    n: int
    c_n: float
    survived: bool
    Z_n: int
    N_n: PointMeasure
    N_tilde_n: PointMeasure | None
    M_n_scaled: float | None
    z_history: tuple = ()
    dropped_zero_atoms: int = 0
    attempts: int = 1


def step(model: BrwModel, state: GenerationState, rng: np.random.Generator,
         cap: int = POPULATION_CAP) -> GenerationState:
    counts = model.offspring.sample(rng, state.size)
    total = int(np.sum(counts))
    if total > cap:
        raise PopulationCapError(state.n + 1, total, cap)
    parent = np.repeat(np.arange(state.size), counts)
    disp = model.displacement.sample_children(counts, rng)
    positions = state.positions[parent] + disp
    edges = None
    if state.edges is not None:
        edges = np.column_stack([state.edges[parent], disp])
    return GenerationState(state.n + 1, positions, edges)


def simulate(model: BrwModel, n: int, rng: np.random.Generator, track_tilde: bool = True,
             cap: int = POPULATION_CAP) -> BrwRunResult:
    """Simulate ``n`` generations and return the scaled extremal point processes.

    ``track_tilde=False`` skips the one-big-jump process (O(Z_n) instead of
    O(n Z_n) memory).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    state = GenerationState(0, np.zeros(1), np.zeros((1, 0)) if track_tilde else None)
    history = [1]
    for _ in range(n):
        state = step(model, state, rng, cap)
        history.append(state.size)
        if state.size == 0:
            break
    cn = model.c_n(n)
    z = state.size if state.n == n else 0
    if z == 0:
        empty = PointMeasure.empty()
        history += [0] * (n + 1 - len(history))
        return BrwRunResult(n, cn, False, 0, empty, empty if track_tilde else None, None, tuple(history))
    pos = state.positions / cn
    dropped = int(np.count_nonzero(pos == 0))
    tilde = None
    if track_tilde:
        atoms = state.edges.ravel() / cn
        zero = atoms == 0
        dropped += int(np.count_nonzero(zero))
        tilde = PointMeasure.from_points(atoms[~zero])
    if dropped:
        log.warning("dropped %d atoms located exactly at 0", dropped)
    N_n = PointMeasure.from_points(pos[pos != 0])
    return BrwRunResult(n, cn, True, z, N_n, tilde, float(pos.max()), tuple(history), dropped)


def simulate_conditioned(model: BrwModel, n: int, rng: np.random.Generator,
                         max_attempts: int = 10_000, **kwargs) -> BrwRunResult:
    """Rejection-resample :func:`simulate` until generation ``n`` is nonempty."""
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    for attempt in range(1, max_attempts + 1):
        res = simulate(model, n, rng, **kwargs)
        if res.survived:
            return BrwRunResult(**{**res.__dict__, "attempts": attempt})
    raise ConditioningError(f"no surviving run in {max_attempts} attempts")


def grid_edges(eps: float, grid=ANNULUS_GRID) -> np.ndarray:
    """Annulus edges outside radius ``eps``: ``eps`` followed by grid points above it."""
    return np.concatenate([[eps], [g for g in grid if g > eps]])


def jump_disagreement(res: BrwRunResult, eps: float) -> bool:
    """Whether ``N_n`` and its one-big-jump companion differ on the annulus grid beyond ``eps``."""
    edges = grid_edges(eps)
    a = res.N_n.annulus_counts(edges)
    b = res.N_tilde_n.annulus_counts(edges)
    return not np.array_equal(a, b)


def big_jump_diagnostic(model: BrwModel, n: int, eps: float, reps: int,
                        rng: np.random.Generator) -> float:
    """Fraction of conditioned runs whose ``N_n`` and ``N~_n`` annulus counts differ."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    hits = 0
    for r in rng.spawn(reps):
        res = simulate_conditioned(model, n, r, track_tilde=True)
        hits += jump_disagreement(res, eps)
    return hits / reps
