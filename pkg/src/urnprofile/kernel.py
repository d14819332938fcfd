"""Binomial thinning kernel and its action on sequences.

``BinomialKernel(p, N)`` is the lower-triangular Markov matrix whose row i
is the Binomial(i, p) pmf.  It maps a profile to the expected observed
distribution of a Bernoulli(p) subsample, and acts on power-series
coefficient vectors as the substitution z -> p*z + (1-p).

Rows are built by the stable one-ball convolution step
``P[i] = (1-p)*P[i-1] + p*shift(P[i-1])``; isolated rows fall back to the
in-row ratio recurrence, switching to a log-domain form (with flush to
zero below 1e-320) once ``(1-p)**i`` underflows.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

__all__ = ["BinomialKernel", "DENSE_LIMIT"]

# dense storage cap; larger kernels must generate rows on the fly
DENSE_LIMIT = 5000

_UNDERFLOW_FLUSH = 1e-320
_LOG_SWITCH = 1e-300


def _row_by_recurrence(i: int, p: float) -> np.ndarray:
    """Binomial(i, p) pmf via the ratio recurrence from (1-p)**i."""
    q = 1.0 - p
    row = np.empty(i + 1)
    row[0] = q**i
    if i == 0:
        return row
    r = p / q
    for m in range(i):
        row[m + 1] = row[m] * (i - m) / (m + 1) * r
    return row


def _row_by_logs(i: int, p: float) -> np.ndarray:
    """Binomial(i, p) pmf through logarithms, for rows whose head underflows."""
    m = np.arange(i + 1, dtype=np.float64)
    logs = (
        gammaln(i + 1.0)
        - gammaln(m + 1.0)
        - gammaln(i - m + 1.0)
        + m * math.log(p)
        + (i - m) * math.log1p(-p)
    )
    row = np.exp(logs)
    row[row < _UNDERFLOW_FLUSH] = 0.0
    return row


class BinomialKernel:
    """Markov kernel of per-type Bernoulli thinning, on states 0..N.

    The dense matrix is materialized up to ``DENSE_LIMIT``; the instance is
    immutable after construction and safe for concurrent reads.
    """

    def __init__(self, p: float, N: int):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p!r}")
        if N < 0:
            raise ValueError("N must be nonnegative")
        if N > DENSE_LIMIT:
            raise ValueError(
                f"dense kernel capped at N={DENSE_LIMIT}; use row() for larger states"
            )
        self.p = float(p)
        self.N = int(N)
        self._matrix = self._build(self.p, self.N)
        self._matrix.setflags(write=False)

    @staticmethod
    def _build(p: float, N: int) -> np.ndarray:
        P = np.zeros((N + 1, N + 1))
        P[0, 0] = 1.0
        q = 1.0 - p
        for i in range(1, N + 1):
            P[i, 1 : i + 1] = p * P[i - 1, :i]
            P[i, :i] += q * P[i - 1, :i]
            # q == 1 keeps the absorbing column; q == 0 shifts cleanly
        return P

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def row(self, i: int) -> np.ndarray:
        """Binomial(i, p) pmf of length i+1 (works beyond the dense cap)."""
        if i < 0:
            raise IndexError(f"row index {i} out of range")
        if i <= self.N:
            return self._matrix[i, : i + 1].copy()
        return self._row_uncached(i)

    def _row_uncached(self, i: int) -> np.ndarray:
        if self.p == 0.0:
            row = np.zeros(i + 1)
            row[0] = 1.0
            return row
        if self.p == 1.0:
            row = np.zeros(i + 1)
            row[i] = 1.0
            return row
        if (1.0 - self.p) ** i >= _LOG_SWITCH:
            return _row_by_recurrence(i, self.p)
        return _row_by_logs(i, self.p)

    def push_forward(self, v: np.ndarray) -> np.ndarray:
        """Image of a signed sequence: (vP)_m = sum_i v_i P[i, m].

        Preserves the total sum; maps a probability vector with mean mu to
        one with mean p*mu.
        """
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] > self.N + 1:
            raise ValueError(
                f"vector of length {v.shape[0]} does not fit kernel dimension {self.N + 1}"
            )
        return v @ self._matrix[: v.shape[0], :]

    def l1_image_norm(self, v: np.ndarray) -> float:
        """l1 norm of the image, never larger than the l1 norm of the input."""
        return float(np.abs(self.push_forward(v)).sum())

    def column(self, m: int, i_max: int) -> np.ndarray:
        """Column m over rows 0..i_max, by the in-column ratio recurrence.

        Falls back to a log-domain evaluation when the head entry p**m
        underflows (the column peak near i = m/p is then still order one).
        """
        if not 0 <= m <= i_max:
            raise IndexError(f"column index {m} out of range")
        col = np.zeros(i_max + 1)
        if self.p == 0.0:
            if m == 0:
                col[:] = 1.0
            return col
        if self.p == 1.0:
            col[m] = 1.0
            return col
        q = 1.0 - self.p
        if self.p**m >= _LOG_SWITCH:
            col[m] = self.p**m
            for i in range(m, i_max):
                # C(i+1,m)/C(i,m) = (i+1)/(i+1-m)
                nxt = col[i] * q * (i + 1) / (i + 1 - m)
                col[i + 1] = 0.0 if nxt < _UNDERFLOW_FLUSH else nxt
            return col
        i = np.arange(m, i_max + 1, dtype=np.float64)
        logs = (
            gammaln(i + 1.0)
            - gammaln(m + 1.0)
            - gammaln(i - m + 1.0)
            + m * math.log(self.p)
            + (i - m) * math.log1p(-self.p)
        )
        vals = np.exp(logs)
        vals[vals < _UNDERFLOW_FLUSH] = 0.0
        col[m:] = vals
        return col
