import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from heavybrw.limit import sample_scdppp
from heavybrw.pointproc import (ANNULUS_GRID, LaplaceEstimate, PointMeasure, TestFunction,
                                annulus_counts, count_exceedances, estimate_laplace, integrate as pm_integrate,
                                scale, scaled_laplace, superpose)

nonzero = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False).filter(lambda x: abs(x) > 1e-6)


@st.composite
def measures(draw, max_size=12):
    locs = draw(st.lists(nonzero, max_size=max_size))
    mults = draw(st.lists(st.integers(1, 5), min_size=len(locs), max_size=len(locs)))
    return PointMeasure.from_points(locs, mults)


def delta(x, m=1):
    return PointMeasure.from_points([x], [m])


def prm_sampler(alpha=1.0, threshold=0.25):
    unit = PointMeasure.from_points([1.0])
    return lambda rng: sample_scdppp(alpha, lambda r: unit, rng, threshold)


def prm_laplace(f: TestFunction, alpha=1.0):
    # exp(-int (1 - e^{-f}) dm_alpha) over the positive half-line
    val, _ = integrate.quad(lambda x: (1 - math.exp(-f(x))) * alpha * x ** (-alpha - 1),
                            f.a, np.inf, points=None, limit=200)
    return math.exp(-val)


class TestConstruction:
    def test_rejects_zero_and_inf(self):
        with pytest.raises(ValueError):
            PointMeasure.from_points([0.0])
        with pytest.raises(ValueError):
            PointMeasure.from_points([np.inf])

    def test_merges_duplicates(self):
        m = PointMeasure.from_points([1.0, -2.0, 1.0])
        assert list(m.locations) == [-2.0, 1.0] and list(m.multiplicities) == [1, 2]


class TestScale:
    def test_identity(self):
        m = delta(2.0) + delta(-1.0, 3)
        assert scale(m, 1.0) == m

    def test_halving(self):
        assert scale(delta(2.0), 0.5) == delta(1.0)

    @given(measures(), st.floats(0.1, 10), st.floats(0.1, 10))
    def test_composition(self, m, b1, b2):
        lhs = scale(scale(m, b1), b2)
        rhs = scale(m, b1 * b2)
        assert lhs.mass == rhs.mass
        assert np.allclose(lhs.locations, rhs.locations, rtol=1e-12, atol=0)


class TestSuperpose:
    def test_identity(self):
        m = delta(2.0) + delta(-1.0, 3)
        assert superpose([m, PointMeasure.empty()]) == m

    def test_merge(self):
        assert superpose([delta(1.0), delta(1.0)]) == delta(1.0, 2)

    @given(st.lists(measures(), max_size=5))
    def test_mass_conservation(self, ms):
        assert superpose(ms).mass == sum(m.mass for m in ms)

    @given(measures(), measures())
    def test_commutative(self, a, b):
        assert a + b == b + a


class TestIntegrate:
    f = TestFunction(1.0, 1.0, 1.0)

    def test_empty(self):
        assert pm_integrate(PointMeasure.empty(), self.f) == 0.0

    def test_saturated(self):
        assert pm_integrate(delta(2.0), self.f) == 1.0

    def test_ramp(self):
        assert pm_integrate(delta(1.5), self.f) == 0.5

    @given(measures(), measures())
    def test_additive(self, a, b):
        assert pm_integrate(a + b, self.f) == pytest.approx(pm_integrate(a, self.f) + pm_integrate(b, self.f))


class TestExceedances:
    def test_example(self):
        assert count_exceedances(delta(2.0) + delta(-1.0, 3), 0.5) == (1, 3)

    def test_empty(self):
        assert count_exceedances(PointMeasure.empty(), 3.0) == (0, 0)

    @given(measures(), st.floats(0.01, 100), st.floats(0.01, 100))
    def test_monotone(self, m, x, y):
        lo, hi = min(x, y), max(x, y)
        assert count_exceedances(m, hi)[0] <= count_exceedances(m, lo)[0]
        assert count_exceedances(m, hi)[1] <= count_exceedances(m, lo)[1]

    @given(measures())
    def test_annulus_counts_cover_tail(self, m):
        c = annulus_counts(m.locations, m.multiplicities, ANNULUS_GRID)
        above, below = count_exceedances(m, ANNULUS_GRID[0])
        half = len(ANNULUS_GRID)
        assert c[half:].sum() == above and c[:half].sum() == below

    def test_annulus_boundaries(self):
        m = PointMeasure.from_points([0.25, 0.5, 64.0, 65.0, -0.5])
        c = m.annulus_counts(ANNULUS_GRID)
        half = len(ANNULUS_GRID)
        pos = c[half:]
        assert pos[0] == 1          # (0.25, 0.5] holds 0.5; 0.25 itself is excluded
        assert pos[-2] == 1         # (32, 64]
        assert pos[-1] == 1         # (64, inf)
        assert c[half - 1] == 1     # -0.5 in the innermost negative annulus


class TestCsv:
    @given(measures())
    def test_roundtrip(self, m):
        assert PointMeasure.from_csv(m.to_csv()) == m


class TestLaplace:
    def test_empty_sampler(self):
        est = estimate_laplace(lambda r: PointMeasure.empty(), TestFunction(1.0), 10, 0)
        assert est.value == 1.0 and est.std_error == 0.0

    def test_point_mass(self):
        est = estimate_laplace(lambda r: delta(2.0), TestFunction(1.0, 1.0, 0.7), 10, 0)
        assert est.value == pytest.approx(math.exp(-0.7))

    def test_prm_quadrature(self):
        f = TestFunction(1.0, 1.0, 1.0)
        est = estimate_laplace(prm_sampler(), f, 10_000, np.random.default_rng(1))
        assert abs(est.value - prm_laplace(f)) < 3 * est.std_error

    def test_scaled_y1_matches(self):
        f = TestFunction(1.0)
        a = estimate_laplace(prm_sampler(), f, 200, 7)
        b = scaled_laplace(prm_sampler(), f, 1.0, 200, 7)
        assert a == b

    def test_scaled_point_mass(self):
        f = TestFunction(1.0, 2.0, 1.0)
        est = scaled_laplace(lambda r: delta(6.0), f, 2.0, 5, 0)
        assert est.value == pytest.approx(math.exp(-f(3.0)))

    def test_prm_frechet_constancy(self):
        f = TestFunction(1.0, 1.0, 1.0)
        vals, ses = [], []
        for k, y in enumerate((0.5, 1.0, 2.0, 4.0)):
            est = scaled_laplace(prm_sampler(threshold=0.5), f, y, 10_000, np.random.default_rng(100 + k))
            v, s = est.neg_log
            vals.append(v * y)
            ses.append(s * y)
        for i in range(4):
            for j in range(i + 1, 4):
                assert abs(vals[i] - vals[j]) < 3 * math.hypot(ses[i], ses[j])

    def test_json(self):
        assert '"value": 0.5' in LaplaceEstimate(0.5, 0.1, 10).to_json()
