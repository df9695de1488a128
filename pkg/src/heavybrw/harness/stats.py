"""Comparison statistics and the report container."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

SCHEMA_VERSION = 1


@dataclass
class Comparison:
    label: str
    x: float
    empirical: float
    se: float
    oracle: float
    oracle_se: float = 0.0

    @property
    def z(self) -> float:
        return zscore(self.empirical, self.se, self.oracle, self.oracle_se)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["z"] = self.z
        return d


@dataclass
class ComparisonReport:
    experiment: str
    statistic: str
    rows: list = field(default_factory=list)
    z_tol: float = 3.0
    ks_distance: float | None = None
    checks: dict = field(default_factory=dict)   # name -> {"value":..., "pass": bool}
    info: dict = field(default_factory=dict)

    @property
    def max_abs_z(self) -> float:
        zs = [abs(r.z) for r in self.rows]
        return max(zs) if zs else 0.0

    @property
    def passed(self) -> bool:
        return self.max_abs_z < self.z_tol and all(c["pass"] for c in self.checks.values())

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "statistic": self.statistic,
            "rows": [r.to_dict() for r in self.rows],
            "z_tol": self.z_tol,
            "max_abs_z": self.max_abs_z,
            "bonferroni_note": (f"{len(self.rows)} comparisons at |z| < {self.z_tol}; "
                                f"family-wise level not adjusted"),
            "ks_distance": self.ks_distance,
            "checks": self.checks,
            "info": self.info,
            "pass": self.passed,
        }


def zscore(emp, se, oracle, oracle_se=0.0) -> float:
    scale = math.hypot(se, oracle_se)
    diff = emp - oracle
    if scale == 0:
        return 0.0 if diff == 0 else math.copysign(math.inf, diff)
    return diff / scale


def mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def pairwise_constancy(values, ses, z_tol=3.0) -> tuple[bool, float]:
    """Whether all pairs agree within ``z_tol`` combined SEs; returns (ok, worst |z|)."""
    worst = 0.0
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            worst = max(worst, abs(zscore(values[i], ses[i], values[j], ses[j])))
    return worst < z_tol, worst


def two_sample_chi2(a, b, min_expected: float = 5.0) -> tuple[float, int, float]:
    """Chi-square homogeneity test of two samples of nonnegative integers.

    Count values are binned ``0, 1, 2, ...`` and the upper tail pooled until
    every expected cell is at least ``min_expected``.  Returns
    ``(statistic, dof, p_value)``; ``p = 1`` when both samples are constant
    and equal.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    top = int(max(a.max(initial=0), b.max(initial=0)))
    ca = np.bincount(a, minlength=top + 1).astype(float)
    cb = np.bincount(b, minlength=top + 1).astype(float)
    na, nb = ca.sum(), cb.sum()
    # pool from the top down
    cells_a, cells_b = [], []
    acc_a = acc_b = 0.0
    for k in range(top, -1, -1):
        acc_a += ca[k]
        acc_b += cb[k]
        tot = acc_a + acc_b
        if min(tot * na, tot * nb) / (na + nb) >= min_expected:
            cells_a.append(acc_a)
            cells_b.append(acc_b)
            acc_a = acc_b = 0.0
    if acc_a + acc_b > 0:
        if cells_a:
            cells_a[-1] += acc_a
            cells_b[-1] += acc_b
        else:
            cells_a.append(acc_a)
            cells_b.append(acc_b)
    table = np.array([cells_a, cells_b])
    if table.shape[1] < 2:
        return 0.0, 0, 1.0
    chi2, p, dof, _ = stats.chi2_contingency(table, correction=False)
    return float(chi2), int(dof), float(p)


def ks_distance(samples, cdf) -> float:
    """Sup-distance between the empirical CDF of ``samples`` and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(n) / n
    return float(max(upper.max(), lower.max()))
