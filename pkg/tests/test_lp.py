"""Tests for the dense two-phase simplex solver."""

import numpy as np
import pytest

import urnprofile.lp as lpmod
from urnprofile.lp import LpProblem, LpSolution, format_problem, solve_lp

from conftest import enumerate_lp_optimum


def _random_bounded_lp(rng, n_vars=6, n_rows=8):
    A = rng.normal(size=(n_rows, n_vars))
    x0 = rng.uniform(0, 1, n_vars)
    relations = list(rng.choice(["<=", "=", ">="], size=n_rows, p=[0.6, 0.2, 0.2]))
    slack = rng.uniform(0.1, 1, n_rows)
    b = A @ x0
    b = np.where(np.array(relations) == "<=", b + slack,
                 np.where(np.array(relations) == ">=", b - slack, b))
    # one extra row keeps the feasible set bounded
    A = np.vstack([A, np.ones(n_vars)])
    b = np.concatenate([b, [2.0 * n_vars]])
    relations.append("<=")
    sense = "min" if rng.random() < 0.5 else "max"
    return LpProblem(c=rng.normal(size=n_vars), A=A, b=b, relations=relations,
                     sense=sense)


class TestBasics:
    def test_min_with_lower_bound(self):
        sol = solve_lp(LpProblem(c=[1.0], A=[[1.0]], b=[3.0], relations=(">=",)))
        assert sol.status == "optimal"
        assert abs(sol.objective - 3.0) < 1e-12
        np.testing.assert_allclose(sol.x, [3.0])

    def test_degenerate_optimum_face(self):
        # every point of the face is optimal; the solver must return value 1
        sol = solve_lp(LpProblem(c=[1.0, 1.0], A=[[1.0, 1.0]], b=[1.0],
                                 relations=("<=",), sense="max"))
        assert sol.status == "optimal"
        assert abs(sol.objective - 1.0) < 1e-12

    def test_infeasible(self):
        sol = solve_lp(LpProblem(c=[1.0], A=[[1.0]], b=[-1.0], relations=("<=",)))
        assert sol.status == "infeasible"

    def test_unbounded(self):
        sol = solve_lp(LpProblem(c=[1.0], A=[[1.0]], b=[1.0], relations=(">=",),
                                 sense="max"))
        assert sol.status == "unbounded"

    def test_upper_bounds(self):
        sol = solve_lp(LpProblem(c=[1.0, 2.0], A=[[1.0, 1.0]], b=[10.0],
                                 relations=("<=",), sense="max",
                                 upper=np.array([1.5, 2.5])))
        assert sol.status == "optimal"
        assert abs(sol.objective - (1.5 + 5.0)) < 1e-9

    def test_validation(self):
        with pytest.raises(ValueError, match="dimensions"):
            LpProblem(c=[1.0], A=[[1.0, 2.0]], b=[1.0], relations=("<=",))
        with pytest.raises(ValueError, match="relation"):
            LpProblem(c=[1.0], A=[[1.0]], b=[1.0], relations=("<",))
        with pytest.raises(ValueError, match="sense"):
            LpProblem(c=[1.0], A=[[1.0]], b=[1.0], relations=("<=",), sense="mid")


class TestAgainstVertexEnumeration:
    def test_random_instances(self, rng):
        # small instances where every vertex can be enumerated outright
        for trial in range(60):
            prob = _random_bounded_lp(rng, n_vars=5, n_rows=6)
            sol = solve_lp(prob)
            ref = enumerate_lp_optimum(prob.c, prob.A, prob.b, prob.relations,
                                       prob.sense)
            if ref is None:
                assert sol.status in ("infeasible", "numerical_failure")
            else:
                assert sol.status == "optimal"
                assert abs(sol.objective - ref) <= 1e-7 * (1.0 + abs(ref))

    def test_ten_variable_subproblems(self, rng):
        for trial in range(8):
            prob = _random_bounded_lp(rng, n_vars=10, n_rows=7)
            sol = solve_lp(prob)
            ref = enumerate_lp_optimum(prob.c, prob.A, prob.b, prob.relations,
                                       prob.sense)
            assert ref is not None and sol.status == "optimal"
            assert abs(sol.objective - ref) <= 1e-7 * (1.0 + abs(ref))


class TestSolutionContract:
    def test_objective_consistency_and_residuals(self, rng):
        for _ in range(40):
            prob = _random_bounded_lp(rng)
            sol = solve_lp(prob)
            if sol.status != "optimal":
                continue
            assert abs(sol.objective - float(prob.c @ sol.x)) <= 1e-9 * (
                1.0 + abs(sol.objective)
            )
            assert sol.max_residual <= 1e-9 * 1e3
            assert np.all(sol.x >= -1e-9)

    def test_bitwise_determinism(self, rng):
        prob = _random_bounded_lp(rng)
        a, b = solve_lp(prob), solve_lp(prob)
        assert a.status == b.status and a.iterations == b.iterations
        assert np.array_equal(a.x, b.x)
        assert a.objective == b.objective

    def test_numba_and_numpy_paths_agree(self, rng):
        # force a tableau big enough for the compiled path, then compare
        prob = _random_bounded_lp(rng, n_vars=80, n_rows=70)
        have = lpmod._HAVE_NUMBA
        try:
            lpmod._HAVE_NUMBA = False
            ref = solve_lp(prob)
        finally:
            lpmod._HAVE_NUMBA = have
        if not have:
            pytest.skip("numba unavailable")
        fast = solve_lp(prob)
        assert ref.status == fast.status
        assert ref.iterations == fast.iterations
        assert np.array_equal(ref.x, fast.x)


class TestDuality:
    def test_complementary_slackness(self, rng):
        from urnprofile.lp import reconstructed_duals

        checked = 0
        for _ in range(40):
            prob = _random_bounded_lp(rng)
            sol = solve_lp(prob)
            if sol.status != "optimal" or sol.basis.shape[0] != prob.n_rows:
                continue  # rows dropped as redundant have no dual here
            y = reconstructed_duals(prob, sol)
            c_std = prob.c if prob.sense == "min" else -prob.c
            ax = prob.A @ sol.x
            # strong duality on the standardized form
            assert abs(float(y @ prob.b) - float(c_std @ sol.x)) <= 1e-7 * (
                1.0 + abs(c_std @ sol.x)
            )
            # slack rows carry zero price
            for i, rel in enumerate(prob.relations):
                gap = ax[i] - prob.b[i]
                if rel != "=" and abs(gap) > 1e-7:
                    assert abs(y[i] * gap) <= 1e-7
            checked += 1
        assert checked >= 10


class TestDump:
    def test_format_contains_structure(self):
        prob = LpProblem(c=[1.0, -2.0], A=[[1.0, 1.0], [0.5, 0.0]], b=[1.0, 2.0],
                         relations=("<=", ">="), sense="max")
        text = format_problem(prob)
        lines = text.splitlines()
        assert lines[0] == "lp max 2 2"
        assert lines[1].startswith("obj: ")
        assert "<=" in lines[2] and ">=" in lines[3]
        # coefficients round-trip through repr
        assert float(lines[1].split()[1]) == 1.0
