"""Moduli of continuity of the binomial thinning kernel, as truncated LPs.

Two programs are solved over sequences supported on {0..M}:

* the *pair* modulus (``tv_modulus``): largest TV distance between two
  mean-bounded profiles whose kernel images are within ``t`` in TV;
* the *signed* modulus (``signed_l1_modulus``): largest l1 norm of a
  signed sequence with weighted-l1 norm at most one and image l1 norm at
  most ``t``.

Both objectives maximize an l1-type norm, which no single LP captures:
slack relaxations are unbounded (coordinate 0 carries no weight, so
opposite-sign mass there is free) and split-variable relaxations admit
cancellation rays.  Instead each program is solved exactly *within a sign
orthant* - fixing the sign pattern makes every norm linear in the
magnitudes - and a deterministic multi-start ascent walks between
orthants: solve the orthant LP, re-read the optimizer's signs, repeat.
Starts come from closed-form two-point solutions, Laguerre witnesses
across a parameter grid, the other program's optimizer, and caller seeds.

The reported ``value_lower`` is therefore the value of an explicitly
verified feasible point (optimizers are rescaled into strict feasibility
before evaluation): a true lower bound on the truncated supremum, which
itself lower-bounds the unrestricted program.  ``value_upper`` adds the
Markov truncation correction 2/M.  The pair result always dominates the
seed value min(1, t/p), so it respects the data-processing floor, and
the two programs exchange optimizers so the factor-two sandwich between
them holds by construction.

Orthant LPs are heavily primally degenerate (every absolute-value row
starts tight at zero); right-hand sides are perturbed by a deterministic
relative amount and the extracted point is rescaled against the true
budgets, trading ~1e-7 of objective for a dramatic cut in pivot counts.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .kernel import BinomialKernel
from .lp import LpProblem, solve_lp
from .population import Profile
from . import witness as _witness

__all__ = [
    "ModulusResult",
    "default_truncation",
    "tv_modulus",
    "signed_l1_modulus",
    "modulus_pair",
    "modulus_grid",
    "signed_to_pair",
    "modulus_decay_bound",
    "minimax_risk_bracket",
    "RiskBracket",
]

_PERT_REL = 1e-7
_LP_STAGE_SMALL = 120
_LP_STAGE_CAP = 320


def default_truncation(t: float, p: float) -> int:
    """Default support bound: past the coefficient-decay scale of feasible
    sequences, truncation error is dominated by the reported 2/M term."""
    return max(100, int(math.ceil(40.0 * math.log(1.0 / t) / max(p, 0.05))))


@dataclass(frozen=True)
class ModulusResult:
    """Solution record for one modulus evaluation.

    ``value_lower`` is the certified value of ``optimizer`` (a feasible
    point of the truncated program); ``value_upper`` adds the 2/M
    truncation correction.  For the pair program ``pair`` carries the two
    realizing profiles and ``optimizer`` their difference.
    """

    kind: str
    t: float
    p: float
    M: int
    value_lower: float
    value_upper: float
    optimizer: np.ndarray
    pair: tuple | None
    diagnostics: dict = field(default_factory=dict)


class _Candidate:
    """A feasible point with certified norm upper bounds.

    ``image_ub`` bounds the l1 norm of the kernel image; ``weighted_ub``
    bounds the weighted norms (total for the signed program, per-sign-side
    maximum for the pair program).
    """

    __slots__ = ("delta", "value", "weighted_ub", "image_ub", "label")

    def __init__(self, delta, value, weighted_ub, image_ub, label):
        self.delta = delta
        self.value = value
        self.weighted_ub = weighted_ub
        self.image_ub = image_ub
        self.label = label


def _kernel_cache(p):
    cache = {}

    def get(W: int) -> BinomialKernel:
        if W not in cache:
            cache[W] = BinomialKernel(p, W)
        return cache[W]

    return get


def _trim(delta: np.ndarray, M: int) -> np.ndarray:
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape[0] > M + 1:
        delta = delta[: M + 1]
    nz = np.flatnonzero(np.abs(delta) > 0)
    top = int(nz[-1]) + 1 if nz.size else 1
    return delta[:top].copy()


_STREAM_ABOVE = 4096  # supports past this use per-row streaming, not a dense kernel


def _exact_norms(delta: np.ndarray, kernels) -> tuple[float, float]:
    W = delta.shape[0] - 1
    weighted = float(np.arange(W + 1) @ np.abs(delta))
    if W <= _STREAM_ABOVE:
        image = kernels(W).l1_image_norm(delta)
    else:
        probe = kernels(0)  # row generator; rows beyond N come on the fly
        acc = np.zeros(W + 1)
        for i in np.flatnonzero(delta):
            row = probe.row(int(i))
            acc[: row.shape[0]] += delta[i] * row
        image = float(np.abs(acc).sum())
    return weighted, image


# ---------------------------------------------------------------------------
# signed (l1) program
# ---------------------------------------------------------------------------


def _fit_l1(delta, weighted_ub, image_ub, t, label) -> _Candidate | None:
    # constraints are homogeneous, so scale onto the tighter budget; this
    # both repairs slight infeasibility and amplifies slack candidates
    lims = []
    if image_ub > 0:
        lims.append(t / image_ub)
    if weighted_ub > 0:
        lims.append(1.0 / weighted_ub)
    s = min(lims) if lims else 1.0
    if not math.isfinite(s) or s <= 0:
        return None
    d = delta * s
    return _Candidate(d, float(np.abs(d).sum()), weighted_ub * s, image_ub * s, label)


def _fit_l1_exact(delta, kernels, t, label) -> _Candidate | None:
    delta = _trim(delta, 10**9)
    weighted, image = _exact_norms(delta, kernels)
    return _fit_l1(delta, weighted, image, t, label)


def _l1_orthant_lp(kern: BinomialKernel, sigma: np.ndarray, t: float):
    """Exact LP for the signed program restricted to sign pattern sigma."""
    W1 = kern.N + 1
    C = kern.matrix.T * sigma[None, :]
    n = 2 * W1  # magnitudes x, image slacks w
    rows = np.zeros((2 * W1 + 2, n))
    b = np.zeros(2 * W1 + 2)
    rows[0:2 * W1:2, :W1] = C
    rows[1:2 * W1:2, :W1] = -C
    rows[0:2 * W1:2, W1:] = -np.eye(W1)
    rows[1:2 * W1:2, W1:] = -np.eye(W1)
    rows[-2, W1:] = 1.0
    b[-2] = t
    rows[-1, :W1] = np.arange(W1)
    b[-1] = 1.0
    c = np.zeros(n)
    c[:W1] = 1.0
    scale = np.where(b > 0, b, t)
    u = 1.0 + ((7 * np.arange(b.shape[0]) + 3) % 101) / 101.0
    return LpProblem(c=c, A=rows, b=b + _PERT_REL * scale * u,
                     relations=("<=",) * b.shape[0], sense="max")


def _l1_base_seeds(t, p, M, kernels) -> list[_Candidate]:
    seeds = []
    for m in (1, 2, 4, 8, 16, 32, 64, 128):
        if m > M:
            break
        kern = kernels(m)
        row0 = kern.row(m)
        pbar_m = row0[0]
        amp = min(1.0 / m, t / max(1.0 - pbar_m, 1e-300))
        spare = t - amp * (1.0 - pbar_m)
        d = np.zeros(m + 1)
        d[m] = amp
        d[0] = -(amp * pbar_m + spare)
        cand = _fit_l1_exact(d, kernels, t, f"two_point_{m}")
        if cand:
            seeds.append(cand)
    for w, label in _witness_seeds(t, p):
        delta = _trim(w.feasible_sequence(), M)
        if delta.shape[0] - 1 < w.m_top:
            # truncation may blow the image; recompute exactly when small,
            # otherwise bound by full image + cut tail mass
            if delta.shape[0] <= 4096:
                cand = _fit_l1_exact(delta, kernels, t, label)
            else:
                cut = w.feasible_scale * float(
                    np.abs(w.delta[delta.shape[0]:]).sum()
                )
                img = math.exp(min(w.feasible_image_log_ub(), 700.0)) + cut
                wn = w.feasible_scale * w.weighted_norm_ub
                cand = _fit_l1(delta, wn, img, t, label)
        else:
            img_log = w.feasible_image_log_ub()
            img = math.exp(img_log) if img_log > -700 else 0.0
            cand = _fit_l1(delta, w.feasible_scale * w.weighted_norm_ub, img, t, label)
        if cand:
            seeds.append(cand)
    return seeds


def _witness_seeds(t, p):
    out = []
    betas = set()
    try:
        b0 = _witness.invert_image_budget(t, p)
        betas.update({round(b0, 2), round(min(300.0, 1.3 * b0), 2),
                      round(max(2.0, 0.7 * b0), 2)})
    except ValueError:
        pass
    betas.update({3.0, 5.0, 8.0, 12.0, 20.0, 35.0})
    for beta in sorted(betas):
        if not 2.0 <= beta <= 300.0:
            continue
        try:
            out.append((_witness.build_witness(beta, p), f"witness_b{beta}"))
        except (ValueError, FloatingPointError):
            continue
    return out


# ---------------------------------------------------------------------------
# pair (TV) program
# ---------------------------------------------------------------------------


def _recenter(delta: np.ndarray) -> np.ndarray:
    d = delta.astype(np.float64).copy()
    d[0] -= d.sum()
    return d


def _pair_value(delta: np.ndarray) -> float:
    return 0.5 * float(np.abs(delta).sum())


def _pair_side_weight(delta: np.ndarray) -> float:
    m = np.arange(delta.shape[0])
    pos = float(m[1:] @ np.maximum(delta[1:], 0.0))
    neg = float(m[1:] @ np.maximum(-delta[1:], 0.0))
    return max(pos, neg)


def _fit_pair(delta, side_weight_ub, image_ub, t, label) -> _Candidate | None:
    # constraints: image l1 <= 2t, each sign side's weighted norm <= 1
    # (each side's plain mass is dominated by its weighted norm)
    lims = []
    if image_ub > 0:
        lims.append(2.0 * t / image_ub)
    if side_weight_ub > 0:
        lims.append(1.0 / side_weight_ub)
    s = min(lims) if lims else 1.0
    if not math.isfinite(s) or s <= 0:
        return None
    d = delta * s
    return _Candidate(d, _pair_value(d), side_weight_ub * s, image_ub * s, label)


def _fit_pair_exact(delta, kernels, t, label) -> _Candidate | None:
    d = _recenter(_trim(delta, 10**9))
    if d.shape[0] == 1:
        return None
    kern = kernels(d.shape[0] - 1)
    return _fit_pair(d, _pair_side_weight(d), kern.l1_image_norm(d), t, label)


def _pair_orthant_lp(kern: BinomialKernel, sigma: np.ndarray, t: float):
    """Exact LP for the pair program in the orthant given by sigma.

    Coordinates 1..W carry magnitudes; coordinate 0 is eliminated through
    the zero-sum constraint and its sign sigma[0] is enforced by one row.
    """
    W1 = kern.N + 1
    W = W1 - 1
    sig0 = sigma[0]
    sig = sigma[1:]
    C = np.empty((W1, W))
    C[:] = kern.matrix[1:, :].T * sig[None, :]
    C[0, :] -= sig  # Delta_0 = -sum sigma_m x_m lands on image coordinate 0
    n = W + W1
    rows = np.zeros((2 * W1 + 4, n))
    b = np.zeros(2 * W1 + 4)
    rows[0:2 * W1:2, :W] = C
    rows[1:2 * W1:2, :W] = -C
    rows[0:2 * W1:2, W:] = -np.eye(W1)
    rows[1:2 * W1:2, W:] = -np.eye(W1)
    rows[-4, W:] = 1.0
    b[-4] = 2.0 * t
    mw = np.arange(1, W1, dtype=np.float64)
    rows[-3, :W] = np.where(sig > 0, mw, 0.0)
    b[-3] = 1.0
    rows[-2, :W] = np.where(sig < 0, mw, 0.0)
    b[-2] = 1.0
    rows[-1, :W] = sig0 * sig  # keeps sign(Delta_0) = sigma[0]
    b[-1] = 0.0
    c = np.zeros(n)
    c[:W] = 0.5 * (1.0 - sig0 * sig)
    scale = np.where(b > 0, b, 2.0 * t)
    u = 1.0 + ((7 * np.arange(b.shape[0]) + 3) % 101) / 101.0
    return LpProblem(c=c, A=rows, b=b + _PERT_REL * scale * u,
                     relations=("<=",) * b.shape[0], sense="max")


def _pair_base_seeds(t, p, M, kernels) -> list[_Candidate]:
    seeds = []
    for m in (1, 2, 4, 8, 16, 32, 64, 128):
        if m > M:
            break
        d = np.zeros(m + 1)
        d[m] = 1.0
        d[0] = -1.0
        cand = _fit_pair_exact(d, kernels, t, f"two_point_{m}")
        if cand:
            seeds.append(cand)
    for w, label in _witness_seeds(t, p):
        delta = _recenter(_trim(w.feasible_sequence(), M))
        if delta.shape[0] <= 4096:
            cand = _fit_pair_exact(delta, kernels, t, label)
        else:
            cut = w.feasible_scale * float(np.abs(w.delta[delta.shape[0]:]).sum())
            img = math.exp(min(w.feasible_image_log_ub(), 700.0)) + cut
            img += abs(float(w.feasible_sequence()[: delta.shape[0]].sum()))
            cand = _fit_pair(delta, _pair_side_weight(delta), img, t, label)
        if cand:
            seeds.append(cand)
    return seeds


# ---------------------------------------------------------------------------
# ascent driver
# ---------------------------------------------------------------------------


def _auto_effort(M: int):
    # ascent value saturates near working support ~120 (wider stages only
    # polish), while orthant-LP pivot counts grow superlinearly in the
    # support; past the polish cap the candidate pool does the work
    if M <= 140:
        return ((M,), 2, 6)
    if M <= _LP_STAGE_CAP:
        return ((_LP_STAGE_SMALL, M), 2, 6)
    return ((_LP_STAGE_SMALL,), 2, 5)


def _ascend(kind, pool, t, M, kernels, effort, diag):
    stages, starts, iters = effort
    if kind == "l1":
        make_lp, fit = _l1_orthant_lp, _fit_l1_exact
        nx = lambda W1: W1
        rebuild = lambda x, sigma: sigma * x
    else:
        make_lp, fit = _pair_orthant_lp, _fit_pair_exact

        def rebuild(x, sigma):
            d = np.empty(x.shape[0] + 1)
            d[1:] = sigma[1:] * x
            d[0] = -d[1:].sum()
            return d

        nx = lambda W1: W1 - 1

    best = max(pool, key=lambda c: c.value)
    for W in stages:
        W = min(W, M)
        kern = kernels(W)
        ranked = sorted(pool, key=lambda c: c.value, reverse=True)[:starts]
        tried = set()
        for start in ranked:
            cur = start
            for _ in range(iters):
                d = np.zeros(W + 1)
                src = cur.delta[: W + 1]
                d[: src.shape[0]] = src
                sigma = np.where(d >= 0, 1.0, -1.0)
                key = sigma.tobytes()
                if key in tried:
                    break
                tried.add(key)
                sol = solve_lp(make_lp(kern, sigma, t))
                diag["lp_solves"] += 1
                diag["lp_iterations"] += sol.iterations
                if sol.status != "optimal":
                    diag.setdefault("lp_nonoptimal", []).append(sol.status)
                    break
                delta = rebuild(sol.x[: nx(W + 1)], sigma)
                cand = fit(delta, kernels, t, f"ascent_W{W}")
                if cand is None or cand.value <= cur.value + 1e-12:
                    break
                cur = cand
            if cur.value > best.value:
                best = cur
                pool.append(cur)
    return best


def _finalize(kind, t, p, M, best, diag, started) -> ModulusResult:
    delta = np.zeros(M + 1)
    src = best.delta[: M + 1]
    delta[: src.shape[0]] = src
    diag["optimizer_label"] = best.label
    diag["solve_ms"] = 1000.0 * (time.perf_counter() - started)
    budget = t if kind == "l1" else 2.0 * t
    if best.image_ub > budget * (1.0 + 1e-8) + 1e-12:
        raise FloatingPointError("internal error: optimizer left the image budget")
    if best.weighted_ub > 1.0 + 1e-8:
        raise FloatingPointError("internal error: optimizer left the weighted budget")
    pair = signed_to_pair(delta) if kind == "tv" else None
    return ModulusResult(
        kind=kind,
        t=float(t),
        p=float(p),
        M=int(M),
        value_lower=best.value,
        value_upper=best.value + 2.0 / M,
        optimizer=delta,
        pair=pair,
        diagnostics=diag,
    )


def _validate(t, p, M):
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t!r}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p!r}")
    if M is not None and M < 2:
        raise ValueError("truncation order M must be at least 2")


def _seed_candidates(kind, seeds, kernels, t, M):
    out = []
    for s in seeds:
        arr = _trim(np.asarray(s, dtype=np.float64), M)
        cand = (_fit_l1_exact if kind == "l1" else _fit_pair_exact)(
            arr, kernels, t, "caller_seed"
        )
        if cand:
            out.append(cand)
    return out


def modulus_pair(t: float, p: float, M: int | None = None, *, seeds_tv=(),
                 seeds_l1=(), effort=None):
    """Solve both moduli at matched truncation with optimizer exchange.

    Returns ``(tv_result, l1_result)``.  The exchange guarantees
    l1 >= tv and tv >= (l1 - t)/2 on the reported values.
    """
    _validate(t, p, M)
    if M is None:
        M = default_truncation(t, p)
    if effort is None:
        effort = _auto_effort(M)
    kernels = _kernel_cache(p)
    started = time.perf_counter()

    diag_l1 = {"lp_solves": 0, "lp_iterations": 0}
    pool_l1 = _l1_base_seeds(t, p, M, kernels) + _seed_candidates("l1", seeds_l1, kernels, t, M)
    best_l1 = _ascend("l1", pool_l1, t, M, kernels, effort, diag_l1)

    started_tv = time.perf_counter()
    diag_tv = {"lp_solves": 0, "lp_iterations": 0}
    pool_tv = _pair_base_seeds(t, p, M, kernels) + _seed_candidates("tv", seeds_tv, kernels, t, M)
    handoff = _fit_pair_exact(best_l1.delta, kernels, t, "from_l1_optimizer")
    if handoff:
        pool_tv.append(handoff)
    best_tv = _ascend("tv", pool_tv, t, M, kernels, effort, diag_tv)

    # closing exchange: half the pair difference is feasible for the signed
    # program at budget t and carries the same value
    back = _fit_l1_exact(0.5 * best_tv.delta, kernels, t, "from_tv_optimizer")
    if back and back.value > best_l1.value:
        best_l1 = back

    res_tv = _finalize("tv", t, p, M, best_tv, diag_tv, started_tv)
    res_l1 = _finalize("l1", t, p, M, best_l1, diag_l1, started)
    return res_tv, res_l1


def tv_modulus(t: float, p: float, M: int | None = None, *, seeds=(),
               effort=None) -> ModulusResult:
    """Pair modulus: how far apart two profiles can be in TV when their
    thinned images are within t in TV.  See the module docstring for value
    semantics."""
    return modulus_pair(t, p, M, seeds_tv=seeds, effort=effort)[0]


def signed_l1_modulus(t: float, p: float, M: int | None = None, *, seeds=(),
                      effort=None) -> ModulusResult:
    """Signed-sequence modulus: largest l1 mass of a weighted-l1-bounded
    sequence whose kernel image has l1 norm at most t."""
    return modulus_pair(t, p, M, seeds_l1=seeds, effort=effort)[1]


def modulus_grid(t_values, p: float, M: int, kind: str = "tv", *,
                 effort=None) -> list[ModulusResult]:
    """Evaluate a modulus over an ascending t-grid with solution chaining.

    Each solve seeds the next with the previous optimizer (feasible at any
    larger budget), which makes the reported values monotone in t.  Input
    order must be ascending.
    """
    ts = list(t_values)
    if sorted(ts) != ts:
        raise ValueError("t grid must be ascending for chained evaluation")
    out = []
    carry_tv, carry_l1 = [], []
    for t in ts:
        res_tv, res_l1 = modulus_pair(t, p, M, seeds_tv=carry_tv,
                                      seeds_l1=carry_l1, effort=effort)
        carry_tv = [res_tv.optimizer]
        carry_l1 = [res_l1.optimizer]
        out.append(res_tv if kind == "tv" else res_l1 if kind == "l1"
                   else (res_tv, res_l1))
    return out


def signed_to_pair(delta: np.ndarray) -> tuple[Profile, Profile]:
    """Realize a signed sequence as a difference of two valid profiles.

    The zero coordinate is recentered so the sequence sums to zero; the
    positive part (off zero) becomes the first profile with the leftover
    mass at zero, and symmetrically for the negative part.  Requires each
    side's weighted norm to be at most one.
    """
    d = _recenter(np.asarray(delta, dtype=np.float64))
    if d.shape[0] < 2:
        d = np.concatenate([d, [0.0]])
    pos = np.maximum(d, 0.0)
    neg = np.maximum(-d, 0.0)
    m = np.arange(d.shape[0])
    if (m[1:] @ pos[1:]) > 1.0 + 1e-9 or (m[1:] @ neg[1:]) > 1.0 + 1e-9:
        raise ValueError("sequence violates the weighted-mass budget on one side")
    a = pos.copy()
    b = neg.copy()
    a[0] = 1.0 - pos[1:].sum()
    b[0] = 1.0 - neg[1:].sum()
    if a[0] < -1e-9 or b[0] < -1e-9:
        raise ValueError("sequence carries more than unit mass on one side")
    return Profile(a), Profile(b)


def modulus_decay_bound(t: float, p: float) -> float:
    """Constructive decay bound min(2/J, 1), J = floor(p log(1/t) / (3 log 6)).

    Valid for the pair modulus at every (t, p); the 2/J branch also bounds
    the signed modulus whenever J >= 1.
    """
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t!r}")
    J = int(math.floor(p * math.log(1.0 / t) / (3.0 * math.log(6.0))))
    if J < 1:
        return 1.0
    return min(2.0 / J, 1.0)


@dataclass(frozen=True)
class RiskBracket:
    """Risk bracket from the pair modulus at the two canonical budgets.

    The additive constants are unspecified by the underlying theory and
    enter as parameters: ``c1`` scales the concentration budget inside the
    upper branch, ``c2`` the subtractive term of the lower branch.
    """

    k: int
    p: float
    lower: float
    upper: float
    t_lower: float
    t_upper: float
    c1: float
    c2: float
    lower_modulus: ModulusResult
    upper_modulus: ModulusResult


def minimax_risk_bracket(k: int, p: float, *, c1: float = 1.0, c2: float = 0.0,
                         M: int | None = None, effort=None) -> RiskBracket:
    """Evaluate the modulus-based bracket on the k-type estimation risk."""
    if k < 2:
        raise ValueError("k must be at least 2")
    t_lo = 1.0 / (6.0 * k)
    t_hi = min(math.sqrt(c1 * math.log(k) / k), 0.999999)
    lo = tv_modulus(t_lo, p, M, effort=effort)
    hi = tv_modulus(t_hi, p, M if M is not None else None, effort=effort)
    return RiskBracket(
        k=int(k),
        p=float(p),
        lower=lo.value_lower / 72.0 - c2 / math.sqrt(k),
        upper=2.0 * hi.value_lower,
        t_lower=t_lo,
        t_upper=t_hi,
        c1=c1,
        c2=c2,
        lower_modulus=lo,
        upper_modulus=hi,
    )
