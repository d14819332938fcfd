"""Analytic lower-bound witnesses built from scaled Laguerre coefficients.

The witness is the Taylor coefficient sequence of exp(-b*(1+a*z)/(1-a*z))
with a = 1 - tau: its m-th coefficient is exp(-b) * a**m * L_m^{(-1)}(2b),
where L_m^{(-1)} is the generalized Laguerre polynomial of order -1.  A
scaled copy of this sequence is feasible for the signed-sequence modulus
program, so its l1 norm is a *certified* lower bound on that program's
value; feasibility is established by direct evaluation of the weighted
norm and of the image norm under the binomial thinning kernel (the image
has a closed coefficient form, see ``_image_log_l1``), never by the
looser analytic estimates.

Everything is carried pre-scaled by exp(-b): the raw polynomial values
reach exp(b) and overflow near b = 350, while the scaled values stay
bounded (|exp(-b) L_m^{(-1)}(2b)| <= 2b, via |L_m^{(-1)}(x)| =
(x/m)|L_{m-1}^{(1)}(x)| <= x e^{x/2}).  Scaling commutes with the linear
three-term recurrence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "scaled_laguerre",
    "WitnessCoefficients",
    "build_witness",
    "witness_image_budget",
    "invert_image_budget",
    "certified_l1_modulus_lower",
    "CertifiedLowerBound",
    "consecutive_coefficient_check",
    "ConsecutivePairReport",
    "hinf_witness_check",
    "HinfWitnessReport",
    "coefficient_norm_check",
    "NormConversionReport",
    "boundary_max_modulus",
    "verify_generating_identity",
]

BETA_MAX = 300.0

# witness truncation rule: extend until this many consecutive coefficients
# fall below 1e-16 of the running maximum
_TAIL_RUN = 50
_TAIL_REL = 1e-16


def scaled_laguerre(beta: float, m_max: int) -> np.ndarray:
    """Values exp(-beta) * L_m^{(-1)}(2*beta) for m = 0..m_max.

    Uses the three-term recurrence
    (n+1) L_{n+1}^{(-1)} = (2n - x) L_n^{(-1)} - (n-1) L_{n-1}^{(-1)}
    at x = 2*beta, applied directly to the pre-scaled values.  beta is
    capped at 300 (double-precision regime) and m_max at 10*beta + 1000.
    """
    if not 0.0 < beta <= BETA_MAX:
        raise ValueError(f"beta must lie in (0, {BETA_MAX}], got {beta!r}")
    if not 0 <= m_max <= int(10 * beta + 1000):
        raise ValueError(f"m_max {m_max} outside supported range for beta={beta}")
    s = _scaled_laguerre_unchecked(beta, m_max)
    if not np.all(np.isfinite(s)):
        raise FloatingPointError("scaled Laguerre recurrence overflowed")
    return s


def _scaled_laguerre_unchecked(beta: float, m_max: int) -> np.ndarray:
    x = 2.0 * beta
    s = np.empty(m_max + 1)
    s[0] = math.exp(-beta)
    if m_max >= 1:
        s[1] = -x * s[0]
    for n in range(1, m_max):
        s[n + 1] = ((2.0 * n - x) * s[n] - (n - 1.0) * s[n - 1]) / (n + 1.0)
    return s


def _witness_coefficients(beta: float, alpha: float) -> np.ndarray:
    """Coefficients alpha^m * exp(-beta) * L_m^{(-1)}(2*beta).

    Truncated once 50 consecutive terms drop below 1e-16 of the running
    maximum *and* the geometric envelope bound on the cut tail is below
    1e-13 of the accumulated l1 mass, so the certified-tail invariant
    (tail at most 1e-12 of the norm) holds with margin.
    """
    x = 2.0 * beta
    out = [math.exp(-beta)]
    s_prev = 0.0
    s_cur = out[0]
    a_pow = 1.0
    peak = abs(out[0])
    l1 = abs(out[0])
    run = 0
    n = 0
    cap = int(400 * beta + 40000)  # generous; the stop rule fires at ~60*beta
    log_env = math.log(2.0 * beta / (1.0 - alpha))
    log_alpha = math.log(alpha)
    while n < cap:
        if n == 0:
            s_next = -x * s_cur
        else:
            s_next = ((2.0 * n - x) * s_cur - (n - 1.0) * s_prev) / (n + 1.0)
        s_prev, s_cur = s_cur, s_next
        n += 1
        a_pow *= alpha
        d = a_pow * s_cur
        out.append(d)
        peak = max(peak, abs(d))
        l1 += abs(d)
        if abs(d) < _TAIL_REL * peak:
            run += 1
            if run >= _TAIL_RUN and log_env + (n + 1) * log_alpha < math.log(1e-13 * l1):
                break
        else:
            run = 0
    arr = np.array(out)
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError("witness coefficient recurrence overflowed")
    return arr


def _geometric_tail_l1(beta: float, alpha: float, after: int) -> float:
    # sum_{m > after} alpha^m * 2*beta, from the coefficient envelope
    return 2.0 * beta * alpha ** (after + 1) / (1.0 - alpha)


def _geometric_tail_weighted(beta: float, alpha: float, after: int) -> float:
    # sum_{m > after} m * alpha^m * 2*beta
    tau = 1.0 - alpha
    return 2.0 * beta * alpha ** (after + 1) * ((after + 1) * tau + alpha) / tau**2


def _image_log_l1(beta: float, alpha: float, p: float) -> tuple[float, float]:
    """log of the l1 norm of the witness image under Binomial(., p) thinning.

    The substitution z -> p z + (1-p) maps the witness to the same family:
    with c = alpha*(1-p) the image coefficients are
    exp(-beta(1+c)/(1-c)) * a'^n * L_n^{(-1)}(2 beta')
    for beta' = beta/(1-c) and a' = alpha*p/(1-c).  The series is summed
    with dynamic renormalization (values can transit exp(+-thousands)).
    The first returned value includes the envelope bound on the cut tail,
    so it is a certified upper bound; the second is the plain partial sum
    for diagnostics.
    """
    if p == 1.0:
        c = 0.0
    else:
        c = alpha * (1.0 - p)
    bprime = beta / (1.0 - c)
    aprime = alpha * p / (1.0 - c)
    log_pref = -beta * (1.0 + c) / (1.0 - c)
    if aprime == 0.0:
        return log_pref, log_pref  # only the n=0 term, L_0 = 1
    xp = 2.0 * bprime
    log_ratio = math.log(aprime)
    # recurrence on w_n = a'^n L_n^{(-1)}(x'), rescaled when large
    w_prev, w_cur = 0.0, 1.0
    acc = 1.0  # running sum of |w_n| in the current scale
    shift = 0.0  # true value = stored * exp(shift)
    peak = 1.0
    n = 0
    cap = int(40 * bprime + 50000)
    while n < cap:
        if n == 0:
            w_next = aprime * (-xp) * w_cur
        else:
            w_next = (aprime * (2.0 * n - xp) * w_cur
                      - aprime * aprime * (n - 1.0) * w_prev) / (n + 1.0)
        w_prev, w_cur = w_cur, w_next
        n += 1
        acc += abs(w_cur)
        mag = max(abs(w_cur), abs(w_prev))
        if mag > 1e250:
            w_prev *= 1e-250
            w_cur *= 1e-250
            acc *= 1e-250
            peak *= 1e-250
            shift += 250.0 * math.log(10.0)
        peak = max(peak, abs(w_cur))
        # envelope tail: sum_{k>n} a'^k |L_k| <= 2 b' e^{b'} a'^{n+1}/(1-a')
        log_tail = (math.log(2.0 * bprime) + bprime + (n + 1) * log_ratio
                    - math.log1p(-aprime))
        log_acc_true = math.log(acc) + shift
        if log_tail < log_acc_true - 37.0 and n > 1.1 * bprime:
            break
    log_sum = math.log(acc) + shift
    log_with_tail = np.logaddexp(log_sum, log_tail)
    return log_pref + float(log_with_tail), log_pref + log_sum


@dataclass(frozen=True)
class WitnessCoefficients:
    """A witness sequence with its certified norm data.

    ``delta`` holds the raw coefficients; ``feasible_scale`` multiplies
    them into the sequence that satisfies the signed-modulus constraints
    (weighted norm at most one).  All *_ub fields include envelope bounds
    on the truncated tail, so they are honest upper bounds; the image
    norm is carried in log domain because it underflows for large beta.
    """

    beta: float
    tau: float
    alpha: float
    p: float
    delta: np.ndarray
    norm_a: float
    weighted_norm: float
    weighted_norm_ub: float
    image_norm: float
    log_image_norm_ub: float
    feasible_scale: float
    tail_l1_ub: float

    @property
    def m_top(self) -> int:
        return self.delta.shape[0] - 1

    @property
    def feasible_value(self) -> float:
        """l1 norm of the scaled feasible sequence."""
        return self.feasible_scale * self.norm_a

    def feasible_sequence(self) -> np.ndarray:
        return self.feasible_scale * self.delta

    def feasible_image_log_ub(self) -> float:
        return math.log(self.feasible_scale) + self.log_image_norm_ub


def build_witness(beta: float, p: float, tau: float | None = None) -> WitnessCoefficients:
    """Construct the witness at (beta, tau) and evaluate its norms under p.

    tau defaults to 1/beta.  The scaled sequence (tau^{3/2}/2) * delta has
    weighted norm at most one whenever the direct evaluation confirms it;
    construction fails loudly otherwise rather than adjusting anything.
    """
    if not 2.0 <= beta <= BETA_MAX:
        raise ValueError(f"beta must lie in [2, {BETA_MAX}], got {beta!r}")
    if tau is None:
        tau = 1.0 / beta
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau!r}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p!r}")
    alpha = 1.0 - tau
    delta = _witness_coefficients(beta, alpha)
    m_top = delta.shape[0] - 1
    norm_a = float(np.abs(delta).sum())
    tail_l1 = _geometric_tail_l1(beta, alpha, m_top)
    if tail_l1 > 1e-12 * norm_a:
        raise FloatingPointError("witness truncation left a non-negligible tail")
    weighted = float(np.arange(m_top + 1) @ np.abs(delta))
    weighted_ub = weighted + _geometric_tail_weighted(beta, alpha, m_top)
    log_image_ub, _ = _image_log_l1(beta, alpha, p)
    image = math.exp(log_image_ub) if log_image_ub > -700.0 else 0.0
    scale = 0.5 * tau**1.5
    if scale * weighted_ub > 1.0 + 1e-10:
        raise FloatingPointError(
            f"scaled witness violates the weighted-norm budget: {scale * weighted_ub!r}"
        )
    return WitnessCoefficients(
        beta=float(beta),
        tau=float(tau),
        alpha=alpha,
        p=float(p),
        delta=delta,
        norm_a=norm_a,
        weighted_norm=weighted,
        weighted_norm_ub=weighted_ub,
        image_norm=image,
        log_image_norm_ub=log_image_ub,
        feasible_scale=scale,
        tail_l1_ub=tail_l1,
    )


def witness_image_budget(beta: float, p: float) -> float:
    """Analytic budget (tau/2) exp(-beta*E) consumed by the scaled witness,
    with tau = 1/beta and E = (1-tau)(1-p)/(p + (1-p)tau)."""
    tau = 1.0 / beta
    E = (1.0 - tau) * (1.0 - p) / (p + (1.0 - p) * tau)
    return 0.5 * tau * math.exp(-beta * E)


def invert_image_budget(t: float, p: float) -> float:
    """Smallest beta in [2, 300] whose analytic budget is at most t.

    Monotone bisection; raises when t is too large (no beta needed) or too
    small (beta beyond the double-precision cap).
    """
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t!r}")
    lo, hi = 2.0, BETA_MAX
    if witness_image_budget(lo, p) <= t:
        raise ValueError(
            f"budget t={t!r} at p={p!r} is out of regime for the witness family "
            f"(already met at the smallest supported beta)"
        )
    if witness_image_budget(hi, p) > t:
        raise ValueError(
            f"budget t={t!r} at p={p!r} needs beta > {BETA_MAX}; out of supported range"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if witness_image_budget(mid, p) > t:
            lo = mid
        else:
            hi = mid
    return hi


def closed_form_beta(t: float, p: float) -> float:
    """The sufficient (not tight) parameter choice max(mu*p, sqrt(mu)) with
    mu = (4/(1-p)) log(1/t)."""
    mu = 4.0 / (1.0 - p) * math.log(1.0 / t)
    return max(mu * p, math.sqrt(mu))


@dataclass(frozen=True)
class CertifiedLowerBound:
    """A numerically certified lower bound on the signed-modulus value."""

    value: float
    t: float
    p: float
    beta: float
    tau: float
    m_top: int
    weighted_norm: float
    log_image_norm: float
    closed_form_beta: float

    def __float__(self) -> float:
        return self.value


def certified_l1_modulus_lower(t: float, p: float, *, details: bool = False):
    """Certified lower bound on the signed-sequence modulus at budget t.

    Inverts the analytic budget by bisection to pick beta (the paper-style
    closed form is computed for reference; bisection is never larger), then
    checks the scaled witness feasible by direct evaluation: weighted norm
    at most one and image norm at most t, both including truncation-tail
    envelopes.  Returns the witness l1 value, a true lower bound up to
    evaluation roundoff.  Raises if the feasibility check fails or beta
    leaves the supported range; nothing is silently repaired.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    beta = invert_image_budget(t, p)
    w = build_witness(beta, p)
    log_budget = math.log(t)
    log_image = w.feasible_image_log_ub()
    if log_image > log_budget + 1e-9:
        raise FloatingPointError(
            f"constructed witness infeasible: log image {log_image!r} > log t {log_budget!r}"
        )
    if w.feasible_scale * w.weighted_norm_ub > 1.0 + 1e-10:
        raise FloatingPointError("constructed witness violates the weighted budget")
    bound = CertifiedLowerBound(
        value=w.feasible_value,
        t=float(t),
        p=float(p),
        beta=w.beta,
        tau=w.tau,
        m_top=w.m_top,
        weighted_norm=w.feasible_scale * w.weighted_norm_ub,
        log_image_norm=log_image,
        closed_form_beta=closed_form_beta(t, p),
    )
    return bound if details else bound.value


@dataclass(frozen=True)
class ConsecutivePairReport:
    """Outcome of the consecutive-coefficient lower-bound check."""

    beta: float
    tau: float
    pairs_checked: int
    min_ratio: float
    passed: bool
    band_sum: float
    band_bound: float
    band_ok: bool


def consecutive_coefficient_check(beta: float, tau: float | None = None) -> ConsecutivePairReport:
    """Check |delta_m| + |delta_{m+1}| >= alpha^{3b/2} b^{-1/2} sqrt(2)/6
    for consecutive indices inside (beta, 3*beta/2).

    The bound is asymptotic in beta; the report carries the minimal
    LHS/RHS ratio so callers can locate the empirical onset.  Also checks
    the implied band mass: sum of |delta_m| over the band is at least
    alpha^{3b/2} sqrt(2 beta)/24.
    """
    if not 0.0 < beta <= BETA_MAX:
        raise ValueError(f"beta must lie in (0, {BETA_MAX}], got {beta!r}")
    if tau is None:
        tau = 1.0 / beta
    alpha = 1.0 - tau
    top = int(math.ceil(1.5 * beta)) + 1
    s = scaled_laguerre(beta, top)
    delta = alpha ** np.arange(top + 1) * s
    ms = [m for m in range(int(beta) + 1, top) if m > beta and (m + 1) < 1.5 * beta]
    rhs = alpha ** (1.5 * beta) / math.sqrt(beta) * math.sqrt(2.0) / 6.0
    ratios = [(abs(delta[m]) + abs(delta[m + 1])) / rhs for m in ms]
    min_ratio = float(min(ratios)) if ratios else math.inf
    band = [m for m in range(top + 1) if beta <= m <= 1.5 * beta]
    band_sum = float(np.abs(delta[band]).sum())
    band_bound = alpha ** (1.5 * beta) * math.sqrt(2.0 * beta) / 24.0
    return ConsecutivePairReport(
        beta=float(beta),
        tau=float(tau),
        pairs_checked=len(ms),
        min_ratio=min_ratio,
        passed=bool(min_ratio >= 1.0),
        band_sum=band_sum,
        band_bound=band_bound,
        band_ok=bool(band_sum >= band_bound),
    )


def boundary_max_modulus(fn, center: complex, radius: float, n_samples: int = 1 << 14,
                         inset: float = 0.0) -> float:
    """Max modulus of fn over sampled points of a circle.

    Samples are offset by half a step so boundary singular points at angle
    zero are avoided; with ``inset`` > 0 the circle is shrunk, keeping the
    sampled max a lower estimate of the true sup.
    """
    theta = (np.arange(n_samples) + 0.5) * (2.0 * math.pi / n_samples)
    z = center + radius * (1.0 - inset) * np.exp(1j * theta)
    return float(np.max(np.abs(fn(z))))


@dataclass(frozen=True)
class HinfWitnessReport:
    """Sampled sup-norm data for the conformal warm-up witness."""

    t: float
    p: float
    coeff: float
    unit_circle_max: float
    horodisk_max: float
    horodisk_bound: float
    value_at_minus_one: float
    horodisk_ok: bool


def hinf_witness_check(t: float, p: float, coeff: float = 0.25,
                       n_samples: int = 1 << 14) -> HinfWitnessReport:
    """Evaluate f(z) = (c/log(1/t)) (1-z)^2 t^{(p/(1-p)) (1+z)/(1-z)} on the
    unit circle and on the thinning kernel's horodisk boundary.

    Checks that the horodisk sup stays below 4*c*t/log(1/t) and records
    |f(-1)| = 4*c/log(1/t), the height that certifies the sup-norm gap.
    Sampled maxima use a 1e-6 radial inset, so they are lower estimates of
    the true sups; the horodisk bound check is therefore meaningful while
    the unit-circle value is diagnostic.
    """
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t!r}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    L = math.log(1.0 / t)

    def f(z):
        w = (1.0 + z) / (1.0 - z)
        return coeff / L * (1.0 - z) ** 2 * np.exp(-L * (p / (1.0 - p)) * w)

    unit_max = boundary_max_modulus(f, 0.0, 1.0, n_samples, inset=1e-6)
    horo_max = boundary_max_modulus(f, 1.0 - p, p, n_samples, inset=1e-6)
    horo_bound = 4.0 * coeff * t / L
    val_minus1 = abs(f(np.array([-1.0 + 0j]))[0])
    return HinfWitnessReport(
        t=float(t),
        p=float(p),
        coeff=float(coeff),
        unit_circle_max=unit_max,
        horodisk_max=horo_max,
        horodisk_bound=horo_bound,
        value_at_minus_one=float(val_minus1),
        horodisk_ok=bool(horo_max <= horo_bound * (1.0 + 1e-3)),
    )


@dataclass(frozen=True)
class NormConversionReport:
    """Coefficient-norm versus boundary-max comparison on radius r."""

    r: float
    a_norm: float
    boundary_max: float
    conversion_bound: float
    conversion_ok: bool
    unit_max: float
    domination_ok: bool


def coefficient_norm_check(coeffs: np.ndarray, r: float, *, evaluator=None,
                           n_samples: int = 4096) -> NormConversionReport:
    """Check sum|a_n| <= (1 - r^{-2})^{-1/2} * max_{|z|=r} |f(z)| and that the
    unit-circle sampled max never exceeds the coefficient-sum norm.

    ``evaluator`` overrides the polynomial evaluation (needed when the
    coefficients truncate a function whose series is delicate on |z|=r).
    Raises on series divergence at radius r.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if r <= 1.0:
        raise ValueError(f"radius must exceed 1, got {r!r}")
    scaled = np.abs(coeffs) * r ** np.arange(coeffs.shape[0])
    if not np.all(np.isfinite(scaled)):
        raise FloatingPointError("coefficient series diverges at the given radius")

    if evaluator is None:
        def evaluator(z):
            return np.polynomial.polynomial.polyval(z, coeffs)

    a_norm = float(np.abs(coeffs).sum())
    bmax = boundary_max_modulus(evaluator, 0.0, r, n_samples)
    bound = bmax / math.sqrt(1.0 - r**-2)
    umax = boundary_max_modulus(evaluator, 0.0, 1.0, n_samples)
    return NormConversionReport(
        r=float(r),
        a_norm=a_norm,
        boundary_max=bmax,
        conversion_bound=bound,
        conversion_ok=bool(a_norm <= bound * (1.0 + 1e-9)),
        unit_max=umax,
        domination_ok=bool(umax <= a_norm * (1.0 + 1e-9)),
    )


def verify_generating_identity(x: float, v: float, n_terms: int = 2000,
                               dps: int | None = None) -> float:
    """Relative residual of the Laguerre generating identity at (x, v).

    Compares the partial sum over n <= n_terms of v^n L_n^{(-1)}(x) with
    exp(-x v / (1 - v)).  The partial-sum terms can exceed the limit by a
    hundred orders of magnitude, so the comparison runs in mpmath with a
    precision chosen from that gap; double arithmetic cannot certify a
    relative residual at this scale.
    """
    import mpmath as mp

    if not 0.0 < v < 1.0:
        raise ValueError(f"v must lie in (0, 1), got {v!r}")
    if dps is None:
        gap = x * math.log10(math.e) * (0.5 + v / (1.0 - v))
        dps = int(gap) + 40
    with mp.workdps(dps):
        xm = mp.mpf(x)
        vm = mp.mpf(v)
        target = mp.e ** (-xm * vm / (1 - vm))
        prev = mp.mpf(0)
        cur = mp.mpf(1)  # L_0^{(-1)}
        total = mp.mpf(1)
        vpow = mp.mpf(1)
        for n in range(n_terms):
            nxt = ((2 * n - xm) * cur - (n - 1) * prev) / (n + 1)
            prev, cur = cur, nxt
            vpow *= vm
            total += vpow * cur
        residual = abs(total - target) / abs(target)
        return float(residual)
