"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the code paths they check: LP values
come from brute-force vertex enumeration, Laguerre values from a 256-bit
mpmath recurrence, binomial rows from scipy.stats, and the clip rule from
a literal one-decrement-at-a-time simulation.
"""

import itertools

import numpy as np
import pytest

from urnprofile.population import Urn


def random_urn(rng, k_max=200, full=False):
    """A random urn; with full=True the ball total is exactly k."""
    k = int(rng.integers(1, k_max + 1))
    n_balls = k if full else int(rng.integers(0, k + 1))
    counts = np.bincount(rng.integers(0, k, size=n_balls), minlength=k)
    return Urn(counts, k)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def enumerate_lp_optimum(c, A, b, relations, sense="min", tol=1e-9):
    """Brute-force LP oracle: scan all candidate vertices.

    A vertex solves n linearly independent tight constraints chosen from
    the rows of A (at equality) and the nonnegativity bounds.  Only viable
    for a handful of variables.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    rows = [(A[i], b[i]) for i in range(m)]
    rows += [(np.eye(n)[j], 0.0) for j in range(n)]
    best = None
    for subset in itertools.combinations(range(len(rows)), n):
        M = np.array([rows[i][0] for i in subset])
        rhs = np.array([rows[i][1] for i in subset])
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, rhs)
        if np.any(x < -tol):
            continue
        ax = A @ x
        ok = True
        for i, rel in enumerate(relations):
            gap = ax[i] - b[i]
            if rel == "<=" and gap > tol:
                ok = False
            elif rel == ">=" and gap < -tol:
                ok = False
            elif rel == "=" and abs(gap) > tol:
                ok = False
            if not ok:
                break
        if not ok:
            continue
        val = float(c @ x)
        if best is None or (sense == "min" and val < best) or (
            sense == "max" and val > best
        ):
            best = val
    return best


def decrement_largest_oracle(theta, budget):
    """Literal simulation of repeated decrement-the-largest (ties by index)."""
    theta = list(theta)
    while sum(theta) > budget:
        m = max(theta)
        theta[theta.index(m)] -= 1
    return np.array(theta)


def mp_scaled_laguerre(beta, m_max, prec=256):
    """Scaled Laguerre values from the same recurrence at 256-bit precision."""
    import mpmath as mp

    with mp.workprec(prec):
        x = mp.mpf(2) * mp.mpf(beta)
        vals = [mp.e ** (-mp.mpf(beta))]
        if m_max >= 1:
            vals.append(-x * vals[0])
        for n in range(1, m_max):
            vals.append(((2 * n - x) * vals[n] - (n - 1) * vals[n - 1]) / (n + 1))
        return vals


def sorted_frequency_tv(urn_a, urn_b):
    """Half-l1 distance between decreasing rearrangements of the frequency
    vectors of two full urns (independent of any package distance code)."""
    fa = np.sort(np.asarray(urn_a.counts, float))[::-1] / urn_a.k
    fb = np.sort(np.asarray(urn_b.counts, float))[::-1] / urn_b.k
    n = max(fa.shape[0], fb.shape[0])
    fa = np.pad(fa, (0, n - fa.shape[0]))
    fb = np.pad(fb, (0, n - fb.shape[0]))
    return 0.5 * np.abs(fa - fb).sum()
