"""Tests for the binomial thinning kernel."""

import numpy as np
import pytest
from scipy.stats import binom as sp_binom

from urnprofile.kernel import BinomialKernel
from urnprofile.population import (
    fingerprint,
    observed_distribution,
    profile_of_urn,
    sample_bernoulli,
)

from conftest import random_urn


class TestRows:
    def test_empty_state(self):
        for p in (0.0, 0.3, 1.0):
            np.testing.assert_array_equal(BinomialKernel(p, 4).row(0), [1.0])

    def test_two_trials_fair(self):
        np.testing.assert_allclose(BinomialKernel(0.5, 4).row(2), [0.25, 0.5, 0.25])

    def test_deterministic_kernel(self):
        np.testing.assert_array_equal(BinomialKernel(1.0, 4).row(3), [0, 0, 0, 1])

    def test_row_out_of_range(self):
        with pytest.raises(IndexError):
            BinomialKernel(0.5, 4).row(-1)

    @pytest.mark.parametrize("p", [0.01, 0.1, 0.5, 0.9, 0.99])
    def test_rows_against_scipy(self, p, rng):
        kern = BinomialKernel(p, 600)
        for i in (1, 7, 63, 400, 600):
            np.testing.assert_allclose(
                kern.row(i), sp_binom.pmf(np.arange(i + 1), i, p),
                rtol=1e-10, atol=1e-280,
            )

    def test_on_the_fly_rows_beyond_dense_cap(self):
        kern = BinomialKernel(0.7, 10)
        row = kern.row(2500)  # exercises the log-domain fallback
        assert row.shape == (2501,)
        np.testing.assert_allclose(row.sum(), 1.0, atol=1e-9)
        ref = sp_binom.pmf(np.arange(2501), 2500, 0.7)
        np.testing.assert_allclose(row, ref, rtol=1e-8, atol=1e-280)


class TestMatrixInvariants:
    @pytest.mark.parametrize("p", [0.01, 0.1, 0.5, 0.9, 0.99])
    def test_stochastic_and_triangular_at_2000(self, p):
        kern = BinomialKernel(p, 2000)
        sums = kern.matrix.sum(axis=1)
        np.testing.assert_allclose(sums, 1.0, atol=1e-12)
        assert np.all(np.triu(kern.matrix, k=1) == 0.0)
        # diagonal is p**i wherever that is representable
        i = np.arange(2001)
        rep = (i * np.log(p) > -690) if p > 0 else np.zeros(2001, bool)
        np.testing.assert_allclose(kern.matrix[i[rep], i[rep]], p ** i[rep].astype(float),
                                   rtol=1e-9)
        if p > 0:
            assert np.all(kern.matrix[i[rep], i[rep]] > 0)

    def test_dense_cap_enforced(self):
        with pytest.raises(ValueError, match="capped"):
            BinomialKernel(0.5, 5001)


class TestPushForward:
    def test_absorbing_state(self):
        kern = BinomialKernel(0.37, 6)
        out = kern.push_forward(np.array([1.0]))
        np.testing.assert_allclose(out[0], 1.0)
        np.testing.assert_allclose(out[1:], 0.0)

    def test_identity_kernel(self, rng):
        kern = BinomialKernel(1.0, 9)
        v = rng.normal(size=10)
        np.testing.assert_allclose(kern.push_forward(v), v, atol=1e-14)

    def test_point_mass_matches_row(self):
        kern = BinomialKernel(0.5, 4)
        v = np.zeros(3)
        v[2] = 1.0
        np.testing.assert_allclose(kern.push_forward(v)[:3], [0.25, 0.5, 0.25])

    def test_sum_preserved_and_mean_scaled(self, rng):
        kern = BinomialKernel(0.3, 40)
        v = rng.normal(size=41)
        out = kern.push_forward(v)
        assert abs(out.sum() - v.sum()) < 1e-12
        prob = np.abs(v) / np.abs(v).sum()
        img = kern.push_forward(prob)
        mean_in = np.arange(41) @ prob
        mean_out = np.arange(41) @ img
        assert abs(mean_out - 0.3 * mean_in) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            BinomialKernel(0.5, 3).push_forward(np.ones(6))

    def test_unbiasedness_monte_carlo(self, rng):
        # the observed distribution averages to the pushed-forward profile
        urn = random_urn(rng, k_max=30)
        p = 0.6
        prof = profile_of_urn(urn)
        kern = BinomialKernel(p, prof.mass.shape[0] - 1)
        expected = kern.push_forward(prof.mass)
        n = 10_000
        acc = np.zeros_like(expected)
        acc2 = np.zeros_like(expected)
        for seed in range(n):
            nu = observed_distribution(fingerprint(sample_bernoulli(urn, p, seed))).mass
            acc[: nu.shape[0]] += nu
            acc2[: nu.shape[0]] += nu**2
        mean = acc / n
        se = np.sqrt(np.maximum(acc2 / n - mean**2, 0.0) / n)
        assert np.all(np.abs(mean - expected) <= 4 * se + 1e-12)


class TestImageNorm:
    def test_zero(self):
        assert BinomialKernel(0.5, 3).l1_image_norm(np.zeros(4)) == 0.0

    def test_hand_value(self):
        # (delta_1 - delta_0) maps to (pbar - 1, p) = (-p, p)
        kern = BinomialKernel(0.5, 3)
        assert abs(kern.l1_image_norm(np.array([-1.0, 1.0])) - 1.0) < 1e-15

    def test_collapsing_kernel(self):
        kern = BinomialKernel(0.0, 3)
        assert kern.l1_image_norm(np.array([-1.0, 1.0])) < 1e-15

    def test_contraction(self, rng):
        for p in (0.1, 0.5, 0.9):
            kern = BinomialKernel(p, 60)
            for _ in range(333):
                v = rng.normal(size=61)
                assert kern.l1_image_norm(v) <= np.abs(v).sum() + 1e-10


class TestCompositionOperator:
    def test_power_series_substitution(self, rng):
        # pushing forward coefficient vectors is the substitution
        # z -> p z + (1 - p), checked against convolution-built expansion
        N = 200
        p = 0.35
        kern = BinomialKernel(p, N)
        v = rng.normal(size=N + 1) * 0.5 ** np.arange(N + 1)
        base = np.array([1.0 - p, p])
        coef = np.zeros(N + 1)
        power = np.array([1.0])  # coefficients of (pbar + p z)**i
        for i, c in enumerate(v):
            coef[: power.shape[0]] += c * power
            power = np.convolve(power, base)
        np.testing.assert_allclose(kern.push_forward(v), coef, atol=1e-10)


class TestColumns:
    @pytest.mark.parametrize("p", [0.05, 0.5, 0.95])
    def test_column_matches_matrix(self, p):
        kern = BinomialKernel(p, 300)
        for m in (0, 1, 17, 300):
            np.testing.assert_allclose(kern.column(m, 300), kern.matrix[:, m],
                                       rtol=1e-9, atol=1e-300)

    def test_log_domain_column(self):
        # head entry p**m underflows but the column peak must survive
        kern = BinomialKernel(0.05, 0)
        col = kern.column(300, 8000)  # 0.05**300 is far below double range
        assert col[300] == 0.0
        peak = int(np.argmax(col))
        assert abs(peak - 300 / 0.05) < 400
        for i in (2000, peak, 8000):
            np.testing.assert_allclose(col[i], sp_binom.pmf(300, i, 0.05), rtol=1e-8)
