"""Urns, profiles, fingerprints, and distances between profiles.

The data model: a population is an urn of at most ``k`` balls distributed
over ``k`` types; ``counts[j]`` is the number of balls of type ``j``.  Its
*profile* is the empirical distribution of the type sizes: ``mass[m]`` is
the fraction of types with exactly ``m`` balls.  A Bernoulli(p) subsample
reveals each ball independently, and the *fingerprint* counts how many
types were seen exactly ``m`` times.

All types here are immutable after construction (arrays are marked
read-only), so they can be shared freely across parallel workers.
Sampling is driven by an explicit seed through a PCG64 generator, which
makes every experiment reproducible from its seed schedule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Urn",
    "Profile",
    "Fingerprint",
    "profile_of_urn",
    "sample_bernoulli",
    "fingerprint",
    "observed_distribution",
    "tv_distance",
    "wasserstein1",
    "sorted_empirical_baseline",
    "sorted_color_distribution",
    "quantize_to_urn",
    "make_urn",
    "urn_to_json",
    "urn_from_json",
    "profile_to_json",
    "profile_from_json",
]

SUM_TOL = 1e-9
MEAN_TOL = 1e-9

URN_GENERATORS = ("uniform_singletons", "single_color", "geometric", "two_point")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Urn:
    """A population of at most ``k`` balls over ``k`` types.

    ``counts[j]`` is the ball count of type ``j``; ``sum(counts) <= k``.
    """

    counts: np.ndarray
    k: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1:
            raise ValueError("counts must be a 1-D integer array")
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if counts.shape[0] != self.k:
            raise ValueError(f"counts has length {counts.shape[0]}, expected k={self.k}")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        if counts.sum() > self.k:
            raise ValueError(f"total ball count {counts.sum()} exceeds k={self.k}")
        object.__setattr__(self, "counts", _readonly(counts))

    @property
    def n_balls(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class Profile:
    """A finitely supported probability vector over type sizes.

    ``mass[m]`` is the fraction of types of size ``m``.  When
    ``mean_constrained`` is true the profile is asserted to have mean at
    most one (total balls at most the number of types); the observed
    distribution of a subsample does not carry that assertion.
    """

    mass: np.ndarray
    mean_constrained: bool = True

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=np.float64)
        if mass.ndim != 1 or mass.shape[0] == 0:
            raise ValueError("mass must be a nonempty 1-D array")
        if np.any(mass < -SUM_TOL) or not np.all(np.isfinite(mass)):
            raise ValueError("mass entries must be finite and nonnegative")
        mass = np.maximum(mass, 0.0)  # flush rounding-level negatives
        total = mass.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"mass sums to {total!r}, not 1 within {SUM_TOL}")
        if self.mean_constrained:
            mean = float(np.arange(mass.shape[0]) @ mass)
            if mean > 1.0 + MEAN_TOL:
                raise ValueError(f"mean {mean!r} exceeds 1 for a mean-constrained profile")
        object.__setattr__(self, "mass", _readonly(mass))

    @property
    def support_bound(self) -> int:
        return self.mass.shape[0] - 1

    def mean(self) -> float:
        return float(np.arange(self.mass.shape[0]) @ self.mass)


@dataclass(frozen=True)
class Fingerprint:
    """Counts of types seen exactly ``m`` times; ``sum(y) == k``."""

    y: np.ndarray
    k: int

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.int64)
        if y.ndim != 1 or y.shape[0] == 0:
            raise ValueError("y must be a nonempty 1-D integer array")
        if np.any(y < 0):
            raise ValueError("fingerprint entries must be nonnegative")
        if y.sum() != self.k:
            raise ValueError(f"fingerprint sums to {y.sum()}, expected k={self.k}")
        object.__setattr__(self, "y", _readonly(y))


def profile_of_urn(urn: Urn) -> Profile:
    """Empirical distribution of the type sizes of ``urn``."""
    top = int(urn.counts.max()) if urn.k else 0
    hist = np.bincount(urn.counts, minlength=top + 1).astype(np.float64)
    return Profile(hist / urn.k, mean_constrained=True)


def sample_bernoulli(urn: Urn, p: float, seed: int) -> np.ndarray:
    """Observed per-type counts when each ball is revealed with probability p.

    Each type's observed count is an independent Binomial(counts[j], p)
    draw from ``PCG64(seed)``; identical inputs reproduce identical output.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.binomial(urn.counts, p).astype(np.int64)


def fingerprint(observed: np.ndarray) -> Fingerprint:
    """Histogram of observed counts: y[m] = #{types seen exactly m times}."""
    observed = np.asarray(observed, dtype=np.int64)
    if observed.ndim != 1 or observed.shape[0] == 0:
        raise ValueError("observed counts must be a nonempty 1-D array")
    if np.any(observed < 0):
        raise ValueError("observed counts must be nonnegative")
    return Fingerprint(np.bincount(observed), k=observed.shape[0])


def observed_distribution(fp: Fingerprint) -> Profile:
    """Normalized fingerprint, with the zero cell recomputed by complementation.

    The returned profile need not have mean at most one, so the mean
    constraint is not asserted.
    """
    nu = fp.y.astype(np.float64) / fp.k
    nu[0] = 1.0 - nu[1:].sum()
    return Profile(nu, mean_constrained=False)


def _pad_pair(a: np.ndarray, b: np.ndarray):
    n = max(a.shape[0], b.shape[0])
    if a.shape[0] < n:
        a = np.concatenate([a, np.zeros(n - a.shape[0])])
    if b.shape[0] < n:
        b = np.concatenate([b, np.zeros(n - b.shape[0])])
    return a, b


def tv_distance(a: Profile, b: Profile) -> float:
    """Total variation distance, half the l1 distance on zero-padded supports."""
    x, y = _pad_pair(a.mass, b.mass)
    return 0.5 * float(np.abs(x - y).sum())


def wasserstein1(a: Profile, b: Profile) -> float:
    """1-Wasserstein distance: l1 distance between the survival functions."""
    x, y = _pad_pair(a.mass, b.mass)
    diff = x - y
    # survival at j is sum_{i >= j} diff_i; the j=0 term vanishes for
    # equal total masses and is excluded.
    surv = np.cumsum(diff[::-1])[::-1]
    return float(np.abs(surv[1:]).sum())


def sorted_color_distribution(urn: Urn) -> np.ndarray:
    """Type frequencies counts/k sorted in decreasing order.

    Requires a full urn (exactly k balls) so the frequencies form a
    probability vector over the k types.
    """
    if urn.n_balls != urn.k:
        raise ValueError("sorted color distribution needs an urn with exactly k balls")
    freq = np.sort(urn.counts)[::-1].astype(np.float64) / urn.k
    return _readonly(freq)


def _decrement_largest(theta: np.ndarray, budget: int) -> np.ndarray:
    """Reduce sum(theta) to ``budget`` by repeatedly decrementing the maximum.

    Ties are broken by lowest index.  Implemented by water-level search,
    which reproduces the sequential process exactly.
    """
    theta = theta.copy()
    excess = int(theta.sum()) - budget
    if excess <= 0:
        return theta
    lo, hi = 0, int(theta.max())
    while lo < hi:  # smallest level c with sum(max(theta-c,0)) <= excess
        mid = (lo + hi) // 2
        if int(np.maximum(theta - mid, 0).sum()) <= excess:
            hi = mid
        else:
            lo = mid + 1
    level = lo
    rem = excess - int(np.maximum(theta - level, 0).sum())
    out = np.minimum(theta, level)
    if rem > 0:
        eligible = np.flatnonzero(theta >= level)
        out[eligible[:rem]] = level - 1
    return out


def sorted_empirical_baseline(observed: np.ndarray, p: float) -> Profile:
    """Naive scale-up baseline: profile of the urn with counts round(X/p).

    The scale-up can overshoot the ball budget; totals are clipped back to
    k by decrementing the largest entries first (ties by lowest index), so
    the result is always a valid mean-constrained profile.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p!r}")
    observed = np.asarray(observed, dtype=np.int64)
    k = observed.shape[0]
    theta = np.floor(observed / p + 0.5).astype(np.int64)
    theta = _decrement_largest(theta, k)
    return profile_of_urn(Urn(theta, k))


def quantize_to_urn(mass: np.ndarray, k: int) -> Urn:
    """Deterministically quantize a profile onto an urn with k types.

    Largest-remainder rounding of k*mass fixes the type total at k; if the
    rounded configuration holds more than k balls, single types are moved
    down from the top of the support until the ball budget is met.
    """
    mass = np.asarray(mass, dtype=np.float64)
    if np.any(mass < -1e-12):
        raise ValueError("profile mass must be nonnegative")
    target = k * np.maximum(mass, 0.0)
    n = np.floor(target).astype(np.int64)
    short = k - int(n.sum())
    if short < 0:
        raise ValueError("profile mass exceeds 1; cannot quantize")
    if short > 0:
        remainders = target - n
        order = np.lexsort((np.arange(mass.shape[0]), -remainders))
        n[order[:short]] += 1
    # mean repair: move one type at a time from the top occupied size down
    while int((np.arange(n.shape[0]) * n).sum()) > k:
        top = int(np.flatnonzero(n[1:])[-1]) + 1
        n[top] -= 1
        n[top - 1] += 1
    counts = np.repeat(np.arange(n.shape[0], dtype=np.int64), n)
    return Urn(counts, k)


def make_urn(generator: str, k: int, **params) -> Urn:
    """Construct a named urn family member.

    Families: ``uniform_singletons`` (every type one ball), ``single_color``
    (one type holds all k balls), ``geometric`` (profile mass (1/2)^{m+1},
    mean one, quantized), ``two_point`` (mass at 0 and at one large size m
    with m*mass_m = 1; default m = round(sqrt(k))).
    """
    if generator == "uniform_singletons":
        return Urn(np.ones(k, dtype=np.int64), k)
    if generator == "single_color":
        counts = np.zeros(k, dtype=np.int64)
        counts[0] = k
        return Urn(counts, k)
    if generator == "geometric":
        top = max(1, int(np.ceil(np.log2(k))) + 2)
        mass = 0.5 ** (np.arange(top + 1) + 1.0)
        mass[-1] += 1.0 - mass.sum()
        return quantize_to_urn(mass, k)
    if generator == "two_point":
        m = int(params.get("m", max(2, int(round(np.sqrt(k))))))
        if not 1 <= m <= k:
            raise ValueError(f"two_point size m={m} out of range for k={k}")
        a = float(params.get("mass", 1.0 / m))
        mass = np.zeros(m + 1)
        mass[m] = a
        mass[0] = 1.0 - a
        return quantize_to_urn(mass, k)
    raise ValueError(f"unknown urn generator {generator!r}")


def urn_to_json(urn: Urn) -> dict:
    return {"k": urn.k, "counts": [int(c) for c in urn.counts]}


def urn_from_json(obj) -> Urn:
    """Parse an urn from {"k", "counts"} or {"k", "generator", ...} JSON."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    k = int(obj["k"])
    if "counts" in obj:
        return Urn(np.asarray(obj["counts"], dtype=np.int64), k)
    if "generator" in obj:
        return make_urn(obj["generator"], k, **obj.get("params", {}))
    raise ValueError("urn JSON needs either 'counts' or 'generator'")


def profile_to_json(profile: Profile) -> dict:
    # decimal strings round-trip float64 exactly
    return {
        "mass": [repr(float(v)) for v in profile.mass],
        "mean_constrained": profile.mean_constrained,
    }


def profile_from_json(obj) -> Profile:
    if isinstance(obj, str):
        obj = json.loads(obj)
    mass = np.array([float(v) for v in obj["mass"]], dtype=np.float64)
    return Profile(mass, mean_constrained=bool(obj.get("mean_constrained", True)))
