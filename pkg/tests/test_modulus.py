"""Tests for the modulus-of-continuity solvers."""

import math

import numpy as np
import pytest

from urnprofile.kernel import BinomialKernel
from urnprofile.modulus import (
    default_truncation,
    minimax_risk_bracket,
    modulus_decay_bound,
    modulus_grid,
    modulus_pair,
    signed_l1_modulus,
    signed_to_pair,
    tv_modulus,
)
from urnprofile.population import Profile, tv_distance


def _norms(delta, p):
    kern = BinomialKernel(p, delta.shape[0] - 1)
    weighted = float(np.arange(delta.shape[0]) @ np.abs(delta))
    return weighted, kern.l1_image_norm(delta)


class TestIdentityKernel:
    @pytest.mark.parametrize("t", [0.1, 0.5])
    def test_pair_modulus_equals_budget(self, t):
        res = tv_modulus(t, 1.0, 50)
        assert abs(res.value_lower - t) <= 1e-8

    def test_signed_modulus_equals_budget_at_identity(self):
        res = signed_l1_modulus(0.1, 1.0, 50)
        assert abs(res.value_lower - 0.1) <= 1e-8


class TestFeasibilityAndInvariants:
    @pytest.mark.parametrize("t,p", [(1e-2, 0.5), (1e-4, 0.9), (1e-3, 0.1)])
    def test_optimizers_are_strictly_feasible(self, t, p):
        res_tv, res_l1 = modulus_pair(t, p, 120)
        w, img = _norms(res_l1.optimizer, p)
        assert img <= t * (1 + 1e-8) + 1e-12
        assert w <= 1.0 + 1e-8
        d = res_tv.optimizer
        assert abs(d.sum()) <= 1e-10  # pair difference is balanced
        _, img = _norms(d, p)
        assert img <= 2 * t * (1 + 1e-8) + 1e-12
        a, b = res_tv.pair
        assert abs(tv_distance(a, b) - res_tv.value_lower) <= 1e-10
        assert a.mean() <= 1 + 1e-9 and b.mean() <= 1 + 1e-9
        assert res_tv.value_lower <= res_tv.value_upper
        assert res_tv.value_lower <= 1.0 + 1e-12

    @pytest.mark.parametrize("t,p", [(1e-2, 0.5), (1e-4, 0.9), (1e-3, 0.1),
                                     (1e-5, 0.3), (0.3, 0.7)])
    def test_processing_floor_and_sandwich(self, t, p):
        res_tv, res_l1 = modulus_pair(t, p, 120)
        assert res_tv.value_lower >= t - 1e-8
        assert 0.5 * (res_l1.value_lower - t) <= res_tv.value_lower + 1e-9
        assert res_tv.value_lower <= res_l1.value_lower + 1e-9

    def test_signed_modulus_finite_at_moderate_budget(self):
        res = signed_l1_modulus(0.5, 0.5, 30)
        assert np.isfinite(res.value_lower)
        assert res.value_lower >= 0.0  # the zero sequence is always feasible
        # at this budget exceeding the unit mass is genuinely possible
        assert res.value_lower > 1.0

    def test_input_validation(self):
        with pytest.raises(ValueError):
            tv_modulus(0.0, 0.5, 50)
        with pytest.raises(ValueError):
            tv_modulus(0.1, 1.5, 50)
        with pytest.raises(ValueError):
            tv_modulus(0.1, 0.5, 1)


class TestCoefficientDecay:
    @pytest.mark.parametrize("t,p", [(1e-3, 0.5), (1e-4, 0.9), (1e-2, 0.3)])
    def test_optimizer_coefficients_decay(self, t, p):
        res = signed_l1_modulus(t, p, 120)
        bound = 2.0 ** np.arange(res.optimizer.shape[0]) * t ** (p / 3.0)
        assert np.all(np.abs(res.optimizer) <= bound + 1e-8)


class TestMonotonicity:
    def test_nondecreasing_in_budget(self):
        ts = np.logspace(-5, -0.5, 20)
        results = modulus_grid(list(ts), 0.5, 100, kind="both")
        tv_vals = [r[0].value_lower for r in results]
        l1_vals = [r[1].value_lower for r in results]
        assert all(b >= a - 1e-12 for a, b in zip(tv_vals, tv_vals[1:]))
        assert all(b >= a - 1e-12 for a, b in zip(l1_vals, l1_vals[1:]))

    def test_nondecreasing_in_truncation(self):
        t, p = 1e-3, 0.5
        prev = None
        carry = ()
        for M in (50, 100, 200):
            res = signed_l1_modulus(t, p, M, seeds=carry)
            if prev is not None:
                assert res.value_lower >= prev - 1e-12
            prev = res.value_lower
            carry = (res.optimizer,)

    def test_grid_requires_ascending_input(self):
        with pytest.raises(ValueError):
            modulus_grid([1e-2, 1e-3], 0.5, 50)


class TestPairConstruction:
    def test_zero_sequence(self):
        a, b = signed_to_pair(np.zeros(4))
        np.testing.assert_allclose(a.mass[0], 1.0)
        assert tv_distance(a, b) == 0.0

    def test_half_swap_example(self):
        a, b = signed_to_pair(np.array([0.0, 0.5, -0.5]))
        np.testing.assert_allclose(a.mass, [0.5, 0.5, 0.0])
        np.testing.assert_allclose(b.mass, [0.5, 0.0, 0.5])
        diff = a.mass - b.mass
        np.testing.assert_allclose(diff, [0.0, 0.5, -0.5])

    def test_rejects_overweight_sequence(self):
        with pytest.raises(ValueError, match="budget"):
            signed_to_pair(np.array([0.0, 0.0, 1.0]))

    def test_signed_optimizer_realizes_pair_at_doubled_budget(self):
        t, p = 1e-3, 0.5
        res = signed_l1_modulus(t, p, 100)
        a, b = signed_to_pair(res.optimizer)
        kern = BinomialKernel(p, max(a.mass.shape[0], b.mass.shape[0]) - 1)
        pa = kern.push_forward(np.pad(a.mass, (0, kern.N + 1 - a.mass.shape[0])))
        pb = kern.push_forward(np.pad(b.mass, (0, kern.N + 1 - b.mass.shape[0])))
        assert 0.5 * np.abs(pa - pb).sum() <= 2 * t + 1e-10
        assert tv_distance(a, b) >= 0.5 * (res.value_lower - t) - 1e-9


class TestDecayBound:
    def test_small_exponent_branch(self):
        assert modulus_decay_bound(0.5, 0.1) == 1.0

    def test_arithmetic_example(self):
        # p = 1, t = 1e-12: floor(27.63 / 5.375) = 5, bound 0.4
        assert abs(modulus_decay_bound(1e-12, 1.0) - 0.4) < 1e-12

    def test_bounds_solver_values(self):
        for (t, p) in [(1e-5, 0.9), (1e-6, 0.9), (1e-5, 0.5)]:
            res_tv, res_l1 = modulus_pair(t, p, 150)
            cap = modulus_decay_bound(t, p)
            assert res_tv.value_lower <= cap + 2.0 / 150 + 1e-9
            J = math.floor(p * math.log(1 / t) / (3 * math.log(6)))
            assert J >= 1
            assert res_l1.value_lower <= 2.0 / J + 2.0 / 150 + 1e-9


class TestDefaultTruncation:
    def test_formula(self):
        assert default_truncation(1e-3, 0.5) == max(100, math.ceil(40 * math.log(1e3) / 0.5))
        assert default_truncation(0.5, 0.01) == max(100, math.ceil(40 * math.log(2) / 0.05))


class TestRiskBracket:
    def test_identity_kernel_scales(self):
        # at p = 1 both moduli equal their budgets, collapsing the bracket
        br = minimax_risk_bracket(1000, 1.0, M=60)
        assert abs(br.lower - br.t_lower / 72.0) <= 1e-9
        assert abs(br.upper - 2.0 * br.t_upper) <= 1e-8

    def test_lower_positive_without_subtraction(self):
        br = minimax_risk_bracket(10_000, 0.5, M=100)
        assert br.lower > 0.0
        assert br.upper > br.lower

    def test_upper_nonincreasing_in_k(self):
        # evaluate the upper branch through the chained grid so the
        # heuristic values inherit monotonicity from the budget ordering
        ks = [100, 1000, 10_000, 100_000]
        ts = [math.sqrt(math.log(k) / k) for k in ks]  # descending in k
        results = modulus_grid(sorted(ts), 0.5, 120, kind="tv")
        uppers = [2.0 * r.value_lower for r in results]  # ascending t order
        assert all(b >= a - 1e-12 for a, b in zip(uppers, uppers[1:]))
