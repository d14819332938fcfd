"""Dense linear programming by the two-phase tableau simplex method.

Solves

    min / max    c @ x
    subject to   A[i] @ x  (<= | = | >=)  b[i]
                 0 <= x <= upper (upper optional, per variable)

with deterministic pivoting: entering variable by most negative reduced
cost with ties broken by lowest index, leaving row by minimum ratio with
ties broken by lowest basic-variable index.  After a run of degenerate
pivots the entering rule switches to Bland's rule (lowest eligible
index), which guarantees termination; identical problems always produce
bit-identical solutions.

Free variables are not supported directly; callers encode them as
differences of two nonnegative variables.  Infeasibility and
unboundedness are reported through ``LpSolution.status`` rather than
exceptions, and a solution whose recomputed residuals exceed the
feasibility tolerance is downgraded to ``"numerical_failure"``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["LpProblem", "LpSolution", "solve_lp", "format_problem", "reconstructed_duals"]

FEAS_TOL = 1e-9
OPT_TOL = 1e-9

_RELATIONS = ("<=", "=", ">=")

# consecutive degenerate pivots tolerated before switching to Bland's rule
_DEGENERATE_RUN = 64


@dataclass(frozen=True)
class LpProblem:
    """A dense LP instance; arrays are copied and validated on construction."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    relations: tuple
    sense: str = "min"
    upper: np.ndarray | None = None

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=np.float64))
        A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        b = np.atleast_1d(np.asarray(self.b, dtype=np.float64))
        rel = tuple(self.relations)
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        if A.shape != (b.shape[0], c.shape[0]):
            raise ValueError(
                f"inconsistent dimensions: A {A.shape}, b {b.shape}, c {c.shape}"
            )
        if len(rel) != b.shape[0]:
            raise ValueError("one relation is required per constraint row")
        for r in rel:
            if r not in _RELATIONS:
                raise ValueError(f"unknown relation {r!r}")
        for name, arr in (("c", c), ("A", A), ("b", b)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        upper = self.upper
        if upper is not None:
            upper = np.asarray(upper, dtype=np.float64)
            if upper.shape != c.shape:
                raise ValueError("upper bounds must match the variable count")
            if np.any(upper < 0):
                raise ValueError("upper bounds must be nonnegative")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "relations", rel)
        object.__setattr__(self, "upper", upper)

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def n_rows(self) -> int:
        return self.b.shape[0]


@dataclass(frozen=True)
class LpSolution:
    """Outcome of a solve.

    ``status`` is one of ``optimal``, ``infeasible``, ``unbounded``,
    ``numerical_failure``.  For optimal solutions ``x`` is a vertex,
    ``objective`` equals ``c @ x`` in the problem's sense, and
    ``max_residual`` is the largest recomputed constraint/bound violation.
    """

    status: str
    objective: float
    x: np.ndarray
    max_residual: float
    iterations: int
    basis: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    phase1_objective: float = 0.0


def _standardize(problem: LpProblem):
    """Rewrite as min c@x, A_eq@x = b (b >= 0), x >= 0, with slack metadata.

    Returns (c, A, b, n_real, n_slack, art_rows) where columns are ordered
    [real | slacks/surpluses]; ``art_rows`` lists rows that still need an
    artificial variable (equalities and flipped >= rows).
    """
    c = problem.c if problem.sense == "min" else -problem.c
    A = problem.A
    b = problem.b
    relations = list(problem.relations)
    if problem.upper is not None:
        finite = np.isfinite(problem.upper)
        if np.any(finite):
            eye = np.eye(problem.n_vars)[finite]
            A = np.vstack([A, eye])
            b = np.concatenate([b, problem.upper[finite]])
            relations += ["<="] * int(finite.sum())
    A = A.copy()
    b = b.copy()
    rel = np.array(relations)
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    swap = {"<=": ">=", ">=": "<=", "=": "="}
    rel[flip] = [swap[r] for r in rel[flip]]

    m = b.shape[0]
    slack_cols = []
    art_rows = []
    for i, r in enumerate(rel):
        if r == "<=":
            slack_cols.append((i, 1.0))
        elif r == ">=":
            slack_cols.append((i, -1.0))
            art_rows.append(i)
        else:
            art_rows.append(i)
    n_real = problem.n_vars
    n_slack = len(slack_cols)
    A_std = np.zeros((m, n_real + n_slack))
    A_std[:, :n_real] = A
    for j, (i, sign) in enumerate(slack_cols):
        A_std[i, n_real + j] = sign
    c_std = np.concatenate([c, np.zeros(n_slack)])
    slack_row = np.full(m, -1, dtype=np.int64)
    for j, (i, sign) in enumerate(slack_cols):
        if sign > 0:
            slack_row[i] = n_real + j
    return c_std, A_std, b, n_real, n_slack, art_rows, slack_row, flip


def _pivot_col(T, tol, bland):
    row = T[-1, :-1]
    if bland:
        idx = np.flatnonzero(row < -tol)
        return (int(idx[0]), True) if idx.size else (-1, False)
    j = int(np.argmin(row))
    if row[j] >= -tol:
        return -1, False
    return j, True


def _pivot_row(T, basis, col, n_obj, tol):
    m = T.shape[0] - n_obj
    a = T[:m, col]
    ok = a > tol
    if not np.any(ok):
        return -1, False
    ratios = np.full(m, np.inf)
    ratios[ok] = T[:m, -1][ok] / a[ok]
    best = ratios.min()
    cand = np.flatnonzero(ratios <= best + 1e-15)
    # lowest basic-variable index among the tied rows (Bland-compatible)
    r = int(cand[np.argmin(basis[cand])])
    return r, True


def _apply_pivot(T, basis, row, col):
    basis[row] = col
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    T[:, col] = 0.0
    T[row, col] = 1.0


def _run_simplex_python(T, basis, n_obj, tol, max_iter, start_iter=0):
    """Minimize the last row of T in place; returns (status code, iterations).

    Status codes: 0 optimal, 1 unbounded, 2 iteration limit.  The numba
    kernel below transcribes this loop one-to-one (same pivot rules, same
    arithmetic order), so both paths produce bit-identical tableaus.
    """
    it = start_iter
    bland = False
    stall = 0
    last_obj = T[-1, -1]
    while it < max_iter:
        col, found = _pivot_col(T, tol, bland)
        if not found:
            return 0, it
        row, found = _pivot_row(T, basis, col, n_obj, tol)
        if not found:
            return 1, it
        _apply_pivot(T, basis, row, col)
        it += 1
        # the stored rhs is the negated objective, so progress raises it
        if T[-1, -1] <= last_obj + 1e-12:
            stall += 1
            if stall >= _DEGENERATE_RUN:
                bland = True
        else:
            stall = 0
            bland = False
        last_obj = T[-1, -1]
    return 2, it


try:  # compiled pivot loop; the pure-numpy path stays as the reference
    import numba as _numba

    @_numba.njit(cache=True)
    def _run_simplex_numba(T, basis, n_obj, tol, max_iter, start_iter, degen_run):
        m = T.shape[0] - n_obj
        n = T.shape[1] - 1
        it = start_iter
        bland = False
        stall = 0
        last_obj = T[-1, -1]
        while it < max_iter:
            # entering column: most negative reduced cost (first on ties),
            # or first eligible index under Bland's rule
            col = -1
            if bland:
                for j in range(n):
                    if T[-1, j] < -tol:
                        col = j
                        break
            else:
                best = -tol
                for j in range(n):
                    if T[-1, j] < best:
                        best = T[-1, j]
                        col = j
            if col < 0:
                return 0, it
            # leaving row: minimum ratio, ties by lowest basic index
            best_ratio = np.inf
            for i in range(m):
                a = T[i, col]
                if a > tol:
                    r = T[i, n] / a
                    if r < best_ratio:
                        best_ratio = r
                    # fall through; candidate scan below
            if best_ratio == np.inf:
                return 1, it
            row = -1
            lowest = 9223372036854775807
            for i in range(m):
                a = T[i, col]
                if a > tol and T[i, n] / a <= best_ratio + 1e-15:
                    if basis[i] < lowest:
                        lowest = basis[i]
                        row = i
            basis[row] = col
            piv = T[row, col]
            for j in range(n + 1):
                T[row, j] /= piv
            for i in range(T.shape[0]):
                if i == row:
                    continue
                f = T[i, col]
                if f != 0.0:
                    for j in range(n + 1):
                        T[i, j] -= f * T[row, j]
            for i in range(T.shape[0]):
                T[i, col] = 0.0
            T[row, col] = 1.0
            it += 1
            if T[-1, -1] <= last_obj + 1e-12:
                stall += 1
                if stall >= degen_run:
                    bland = True
            else:
                stall = 0
                bland = False
            last_obj = T[-1, -1]
        return 2, it

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional accelerator
    _HAVE_NUMBA = False


def _run_simplex(T, basis, n_obj, tol, max_iter, start_iter=0):
    if _HAVE_NUMBA and T.size > 20000:
        code, it = _run_simplex_numba(T, basis, n_obj, tol, max_iter, start_iter,
                                      _DEGENERATE_RUN)
    else:
        code, it = _run_simplex_python(T, basis, n_obj, tol, max_iter, start_iter)
    return ("optimal", "unbounded", "iteration_limit")[code], it


def solve_lp(
    problem: LpProblem,
    *,
    feas_tol: float = FEAS_TOL,
    opt_tol: float = OPT_TOL,
    max_iter: int | None = None,
) -> LpSolution:
    """Solve a dense LP; see the module docstring for the method.

    Always returns an ``LpSolution``; statuses other than ``optimal``
    report the reason instead of raising.
    """
    c_std, A_std, b, n_real, n_slack, art_rows, slack_row, _ = _standardize(problem)
    m, n = A_std.shape
    if max_iter is None:
        max_iter = 50 * (m + n) + 2000
    sense_sign = 1.0 if problem.sense == "min" else -1.0

    n_art = len(art_rows)
    total = n + n_art
    basis = np.empty(m, dtype=np.int64)
    iterations = 0
    phase1_obj = 0.0

    if n_art:
        # phase 1: minimize the artificial total with two stacked cost rows
        T = np.zeros((m + 2, total + 1))
        T[:m, :n] = A_std
        T[:m, -1] = b
        for j, i in enumerate(art_rows):
            T[i, n + j] = 1.0
        T[m, :n] = c_std
        art_mask = np.zeros(m, dtype=bool)
        art_mask[art_rows] = True
        T[m + 1, :] = -T[:m][art_mask].sum(axis=0)
        T[m + 1, n:-1] = 0.0
        for j, i in enumerate(art_rows):
            basis[i] = n + j
        for i in range(m):
            if not art_mask[i]:
                basis[i] = slack_row[i]
        status, iterations = _run_simplex(T, basis, 2, opt_tol, max_iter)
        phase1_obj = float(-T[m + 1, -1])
        if status == "iteration_limit":
            return LpSolution("numerical_failure", np.nan, np.full(n_real, np.nan),
                              np.inf, iterations, basis.copy(), phase1_obj)
        if phase1_obj > 1e3 * feas_tol:
            return LpSolution("infeasible", np.nan, np.full(n_real, np.nan),
                              np.inf, iterations, basis.copy(), phase1_obj)
        # drive leftover artificials out of the basis, dropping redundant rows
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= n:
                cols = np.flatnonzero(np.abs(T[i, :n]) > 1e3 * opt_tol)
                if cols.size:
                    _apply_pivot(T, basis, i, int(cols[0]))
                else:
                    keep[i] = False
        rows = np.concatenate([np.flatnonzero(keep), [m]])
        T = T[rows][:, np.concatenate([np.arange(n), [total]])]
        basis = basis[keep]
        m = int(keep.sum())
    else:
        T = np.zeros((m + 1, n + 1))
        T[:m, :n] = A_std
        T[:m, -1] = b
        T[m, :n] = c_std
        basis = slack_row.copy()

    # price out the basic columns of the cost row
    for i in range(m):
        cj = T[-1, basis[i]]
        if cj != 0.0:
            T[-1] -= cj * T[i]

    status, iterations = _run_simplex(T, basis, 1, opt_tol, max_iter, iterations)
    if status == "iteration_limit":
        return LpSolution("numerical_failure", np.nan, np.full(n_real, np.nan),
                          np.inf, iterations, basis.copy(), phase1_obj)
    if status == "unbounded":
        return LpSolution("unbounded", np.nan, np.full(n_real, np.nan),
                          np.inf, iterations, basis.copy(), phase1_obj)

    x_full = np.zeros(n)
    x_full[basis] = T[:m, -1]
    x = x_full[:n_real]
    residual = _max_residual(problem, x)
    objective = float(problem.c @ x)
    if residual > 1e3 * feas_tol:
        return LpSolution("numerical_failure", objective, x, residual,
                          iterations, basis.copy(), phase1_obj)
    return LpSolution("optimal", objective, x, residual, iterations,
                      basis.copy(), phase1_obj)


def _max_residual(problem: LpProblem, x: np.ndarray) -> float:
    ax = problem.A @ x
    res = 0.0
    for i, r in enumerate(problem.relations):
        gap = ax[i] - problem.b[i]
        if r == "<=":
            res = max(res, gap)
        elif r == ">=":
            res = max(res, -gap)
        else:
            res = max(res, abs(gap))
    res = max(res, float(-x.min(initial=0.0)))
    if problem.upper is not None:
        over = x - problem.upper
        res = max(res, float(over.max(initial=0.0)))
    return float(res)


def reconstructed_duals(problem: LpProblem, solution: LpSolution) -> np.ndarray:
    """Dual multipliers of the standardized rows, from the final basis.

    Solves B.T y = c_B on the standardized equality form.  Rows dropped as
    redundant during phase 1 are not represented; the caller should only
    use this on problems solved to optimality.
    """
    c_std, A_std, b, n_real, n_slack, art_rows, _, flip = _standardize(problem)
    basis = solution.basis
    if basis.size != A_std.shape[0]:
        raise ValueError("basis/rows mismatch (redundant rows were dropped)")
    y = np.linalg.solve(A_std[:, basis].T, c_std[basis])
    y[flip] *= -1.0  # back to the caller's row orientation
    return y


def format_problem(problem: LpProblem) -> str:
    """Plain-text dump: one line per row as ``coeffs | relation | rhs``.

    Format: a header line ``lp <sense> <n_vars> <n_rows>``, the objective
    row prefixed ``obj:``, then each constraint as space-separated
    coefficients, the relation token, and the right-hand side.  Optional
    upper bounds append ``ub:`` lines.  Intended for debugging diffs.
    """
    out = [f"lp {problem.sense} {problem.n_vars} {problem.n_rows}"]
    out.append("obj: " + " ".join(repr(float(v)) for v in problem.c))
    for i in range(problem.n_rows):
        coeffs = " ".join(repr(float(v)) for v in problem.A[i])
        out.append(f"{coeffs} {problem.relations[i]} {problem.b[i]!r}")
    if problem.upper is not None:
        out.append("ub: " + " ".join(repr(float(v)) for v in problem.upper))
    return "\n".join(out)
