"""Desk-scale Monte Carlo experiments around the profile estimator.

Sweeps estimate the TV risk of the minimum-distance fit (and of the naive
sorted-baseline) over grids of population size, sampling probability, and
urn family; every cell derives its own seed stream from the master seed,
so runs are reproducible bit for bit and cells can be computed in any
order or in parallel.

Also here: construction of near-indistinguishable urn pairs by quantizing
the profiles realized from a certified witness sequence, an empirical
concentration check for the observed distribution around its mean, and
the information-theoretic lower bound showing the *labeled* type
distribution cannot be learned from a thinned sample.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .estimator import min_distance_estimate
from .kernel import BinomialKernel
from .modulus import signed_to_pair
from .population import (
    Urn,
    fingerprint,
    make_urn,
    observed_distribution,
    profile_of_urn,
    quantize_to_urn,
    sample_bernoulli,
    sorted_empirical_baseline,
    tv_distance,
    wasserstein1,
)
from .witness import certified_l1_modulus_lower, build_witness

__all__ = [
    "ExperimentConfig",
    "RiskRow",
    "run_risk_sweep",
    "hard_pair_from_witness",
    "concentration_check",
    "ConcentrationReport",
    "binary_entropy",
    "binary_entropy_inverse",
    "labeled_distribution_risk_bound",
]

FAMILIES = ("uniform_singletons", "single_color", "geometric", "two_point", "witness_pair")
ESTIMATORS = ("min_distance", "sorted_baseline")


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid specification for a risk sweep."""

    k_grid: tuple
    p_grid: tuple
    seeds_per_cell: int = 50
    families: tuple = ("uniform_singletons",)
    estimators: tuple = ("min_distance",)
    master_seed: int = 0
    support_cap: object = "auto"

    def __post_init__(self):
        if not self.k_grid or not self.p_grid:
            raise ValueError("k and p grids must be nonempty")
        if self.seeds_per_cell < 1:
            raise ValueError("seeds_per_cell must be at least 1")
        for f in self.families:
            if f not in FAMILIES:
                raise ValueError(f"unknown family {f!r}")
        for e in self.estimators:
            if e not in ESTIMATORS:
                raise ValueError(f"unknown estimator {e!r}")


@dataclass(frozen=True)
class RiskRow:
    """One sweep cell: mean risks with their Monte Carlo standard error."""

    k: int
    p: float
    family: str
    estimator: str
    mean_tv: float
    stderr_tv: float
    mean_w1: float
    mean_runtime_s: float
    n_seeds: int
    error: str = ""


def _cell_seed(master: int, *indices: int) -> int:
    ss = np.random.SeedSequence([int(master), *[int(i) for i in indices]])
    return int(ss.generate_state(1, np.uint64)[0])


def _family_urns(family: str, k: int, p: float) -> list[Urn]:
    if family == "witness_pair":
        a, b, _ = hard_pair_from_witness(1.0 / (6.0 * k), p, k)
        return [a, b]
    return [make_urn(family, k)]


def _run_cell(config: ExperimentConfig, ik: int, ip: int, ifam: int, iest: int) -> RiskRow:
    k = int(config.k_grid[ik])
    p = float(config.p_grid[ip])
    family = config.families[ifam]
    estimator = config.estimators[iest]
    try:
        urns = _family_urns(family, k, p)
        tvs, w1s, times = [], [], []
        for iseed in range(config.seeds_per_cell):
            for iu, urn in enumerate(urns):
                truth = profile_of_urn(urn)
                seed = _cell_seed(config.master_seed, ik, ip, ifam, iest, iseed, iu)
                observed = sample_bernoulli(urn, p, seed)
                started = time.perf_counter()
                if estimator == "min_distance":
                    report = min_distance_estimate(fingerprint(observed), p,
                                                   config.support_cap)
                    fitted = report.profile
                else:
                    fitted = sorted_empirical_baseline(observed, p)
                times.append(time.perf_counter() - started)
                tvs.append(tv_distance(fitted, truth))
                w1s.append(wasserstein1(fitted, truth))
        tvs = np.asarray(tvs)
        return RiskRow(
            k=k, p=p, family=family, estimator=estimator,
            mean_tv=float(tvs.mean()),
            stderr_tv=float(tvs.std(ddof=1) / math.sqrt(tvs.shape[0])) if tvs.shape[0] > 1 else 0.0,
            mean_w1=float(np.mean(w1s)),
            mean_runtime_s=float(np.mean(times)),
            n_seeds=config.seeds_per_cell,
        )
    except Exception as exc:  # record and continue the sweep
        return RiskRow(k=k, p=p, family=family, estimator=estimator,
                       mean_tv=float("nan"), stderr_tv=float("nan"),
                       mean_w1=float("nan"), mean_runtime_s=float("nan"),
                       n_seeds=config.seeds_per_cell, error=repr(exc))


def run_risk_sweep(config: ExperimentConfig, threads: int = 1) -> list[RiskRow]:
    """Run every (k, p, family, estimator) cell; failures land in the row's
    ``error`` field instead of aborting the sweep."""
    cells = [
        (ik, ip, ifam, iest)
        for ik in range(len(config.k_grid))
        for ip in range(len(config.p_grid))
        for ifam in range(len(config.families))
        for iest in range(len(config.estimators))
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_run_cell, *zip(*[(config, *c) for c in cells])))
    else:
        rows = [_run_cell(config, *c) for c in cells]
    return rows


def hard_pair_from_witness(t: float, p: float, k: int):
    """Two urns whose thinned samples are nearly indistinguishable.

    Realizes the certified witness at budget t as a pair of profiles, then
    quantizes each onto an urn with k types (largest-remainder rounding
    plus a ball-budget repair).  Returns (urn_a, urn_b, info) where info
    records the quantization TV errors; raises when k is too small for the
    witness support to quantize within the (support+1)/(2k) distortion.
    """
    bound = certified_l1_modulus_lower(t, p, details=True)
    w = build_witness(bound.beta, p)
    prior_a, prior_b = signed_to_pair(w.feasible_sequence())
    support = max(prior_a.mass.shape[0], prior_b.mass.shape[0]) - 1
    if k < support:
        raise ValueError(
            f"k={k} too small to quantize a witness with support {support}"
        )
    urns = []
    errs = []
    for prior in (prior_a, prior_b):
        urn = quantize_to_urn(prior.mass, k)
        err = tv_distance(profile_of_urn(urn), prior)
        limit = (prior.mass.shape[0] + 1) / (2.0 * k)
        if err > limit:
            raise ValueError(
                f"quantization error {err:.3g} exceeds {limit:.3g}; k={k} too small "
                f"for witness support {prior.mass.shape[0] - 1}"
            )
        urns.append(urn)
        errs.append(err)
    info = {"beta": bound.beta, "t": t, "quantization_tv": tuple(errs),
            "witness_value": bound.value}
    return urns[0], urns[1], info


@dataclass(frozen=True)
class ConcentrationReport:
    """Empirical concentration of the observed distribution around its mean."""

    k: int
    p: float
    seeds: int
    mean_tv: float
    scaled_mean: float  # mean_tv * sqrt(k / log k)
    fitted_constant: float
    variance_ok: bool
    worst_variance_margin: float
    tail_probabilities: tuple
    tail_decay_ok: bool


def concentration_check(k: int, p: float, urn: Urn, seeds: int = 200,
                        master_seed: int = 0) -> ConcentrationReport:
    """Estimate E tv(observed, expected image) and check the per-cell
    variance bound k Var <= image mass within 3 standard errors.

    The deviation tail is summarized by exceedance probabilities at 1..3
    empirical standard deviations; a bounded-difference tail must decay,
    which is asserted qualitatively (nonincreasing exceedance).
    """
    if seeds < 100:
        raise ValueError("concentration check needs at least 100 seeds")
    truth = profile_of_urn(urn)
    top = truth.mass.shape[0] - 1
    kern = BinomialKernel(p, top)
    image = kern.push_forward(truth.mass)
    tvs = np.empty(seeds)
    cells = np.zeros((seeds, top + 1))
    for i in range(seeds):
        seed = _cell_seed(master_seed, k, i)
        observed = sample_bernoulli(urn, p, seed)
        nu = observed_distribution(fingerprint(observed)).mass
        n = min(nu.shape[0], top + 1)
        cells[i, :n] = nu[:n]
        pad = np.zeros(max(nu.shape[0], top + 1))
        pad[: nu.shape[0]] = nu
        pad[: top + 1] -= image
        tvs[i] = 0.5 * np.abs(pad).sum()
    mean_tv = float(tvs.mean())
    scaled = mean_tv * math.sqrt(k / math.log(k))
    # per-cell variance bound: k Var[nu_m] <= image_m, within 3 SE of Var
    var = cells.var(axis=0, ddof=1)
    se_var = var * math.sqrt(2.0 / (seeds - 1))
    margin = k * var - image - 3.0 * k * se_var
    worst = float(margin.max())
    sd = tvs.std(ddof=1)
    tails = tuple(float(np.mean(np.abs(tvs - mean_tv) >= j * sd)) for j in (1, 2, 3))
    return ConcentrationReport(
        k=k, p=p, seeds=seeds,
        mean_tv=mean_tv,
        scaled_mean=scaled,
        fitted_constant=scaled,
        variance_ok=bool(worst <= 0.0),
        worst_variance_margin=worst,
        tail_probabilities=tails,
        tail_decay_ok=bool(tails[0] >= tails[1] >= tails[2]),
    )


def binary_entropy(x: float) -> float:
    """Binary entropy in bits; 0 at the endpoints."""
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def binary_entropy_inverse(y: float, tol: float = 1e-12) -> float:
    """Inverse of the binary entropy on [0, 1/2], by bisection."""
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"entropy value must lie in [0, 1], got {y!r}")
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def labeled_distribution_risk_bound(k: int, p: float) -> float:
    """Minimax TV lower bound for learning the labeled type distribution:
    (k-1)/(4k) * h^{-1}(1 - p - log2(k+1)/(k-1)), zero when degenerate.

    Stays order one for any fixed p < 1, which is why only the unlabeled
    profile is learnable from a thinned sample.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    arg = 1.0 - p - math.log2(k + 1.0) / (k - 1.0)
    if arg <= 0.0:
        return 0.0
    return (k - 1.0) / (4.0 * k) * binary_entropy_inverse(arg)
