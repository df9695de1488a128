"""Declarative experiment configuration (JSON)."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from ..brw import BrwModel
from ..pointproc import TestFunction

EXPERIMENTS = (
    "validate_maxima",
    "validate_laplace",
    "validate_stability",
    "validate_frechet",
    "superposition_doa",
    "big_jump",
    "compute_kappa",
)

DEFAULT_PANEL = ({"a": 1.0, "w": 1.0, "theta": 1.0},
                 {"a": 0.5, "w": 0.5, "theta": 0.5},
                 {"a": 2.0, "w": 2.0, "theta": 2.0})


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    reps: int = 1000
    model: BrwModel | None = None
    n: int = 10
    n_grid: tuple = (6, 8, 10, 12)
    x_grid: tuple = (1.0, 2.0, 4.0, 8.0)
    y_grid: tuple = (0.5, 1.0, 2.0, 4.0)
    panel: tuple = tuple(TestFunction(**p) for p in DEFAULT_PANEL)
    b1: float = 1.0
    b2: float = 1.0
    eps: float = 1.0
    template: tuple = (1.0,)
    template_alpha: float = 1.0
    template_p: float = 1.0
    w_reps: int = 100_000
    w_depth: int = 30
    threads: int = 1
    out_dir: str = "out"
    z_tol: float = 3.0
    p_min: float = 1e-3
    max_final: float = 0.05
    kappa_methods: tuple = ("closed_form", "monte_carlo")
    dump_points: int = 0
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        for key in ("experiment", "seed"):
            if key not in d:
                raise ConfigError(f"missing required field {key!r}")
        exp = d["experiment"]
        if exp not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {exp!r}; expected one of {EXPERIMENTS}")
        if not isinstance(d["seed"], int) or isinstance(d["seed"], bool) or d["seed"] < 0:
            raise ConfigError("field 'seed' must be a nonnegative integer")
        kw: dict[str, Any] = {"experiment": exp, "seed": d["seed"], "raw": d}
        try:
            if "model" in d:
                kw["model"] = BrwModel.from_config(d["model"])
            for key in ("reps", "n", "w_reps", "w_depth", "threads", "dump_points"):
                if key in d:
                    kw[key] = int(d[key])
            for key in ("b1", "b2", "eps", "z_tol", "p_min", "max_final", "template_alpha", "template_p"):
                if key in d:
                    kw[key] = float(d[key])
            for key in ("n_grid",):
                if key in d:
                    kw[key] = tuple(int(v) for v in d[key])
            for key in ("x_grid", "y_grid", "template"):
                if key in d:
                    kw[key] = tuple(float(v) for v in d[key])
            if "f_params" in d:
                kw["panel"] = tuple(TestFunction(**p) for p in d["f_params"])
            if "kappa_methods" in d:
                kw["kappa_methods"] = tuple(d["kappa_methods"])
            if "output" in d:
                kw["out_dir"] = str(d["output"])
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(d)

    def override(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        cfg = replace(self, **kw)
        cfg.validate()
        return cfg

    def validate(self):
        needs_model = self.experiment not in ("superposition_doa",)
        if needs_model and self.model is None:
            raise ConfigError(f"experiment {self.experiment!r} requires field 'model'")
        statistical = self.experiment != "compute_kappa" or "monte_carlo" in self.kappa_methods
        if statistical and self.reps < 100:
            raise ConfigError("reps must be >= 100 for statistical experiments")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.b1 <= 0 or self.b2 <= 0:
            raise ConfigError("b1 and b2 must be positive")
        if self.eps <= 0:
            raise ConfigError("eps must be positive")
        if any(x <= 0 for x in self.x_grid + self.y_grid):
            raise ConfigError("x_grid and y_grid entries must be positive")
        if any(a <= 0 for a in self.template):
            raise ConfigError("template coefficients must be positive")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
