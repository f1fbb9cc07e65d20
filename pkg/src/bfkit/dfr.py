"""Closed-form counter distributions and decoding-failure-rate prediction.

For a uniformly random weight-u error on a (v, w)-regular code of length n,
the counter of a position behaves (under the usual independence heuristic)
as a Binomial(v, rho) variable, where rho is the probability that one
parity check containing the position is unsatisfied; rho differs between
error positions (rho1) and error-free positions (rho0). A single-flip
iteration picks a wrong position whenever the maximum counter over the
n - u error-free positions reaches the maximum over the u error positions,
which gives a per-iteration failure probability q_u. With the iteration
budget equal to the error weight t, decoding succeeds only if every
iteration flips an error position, so the failure rate is
1 - prod_{u=1..t} (1 - q_u). Ties between the two maxima are counted as
failures, making the prediction a slight overestimate by construction.

Everything is evaluated in the log domain (log-gamma binomials, powers via
log1p of tail masses, assembly via expm1) so predictions remain accurate
far below the 2**-128 regime where direct evaluation underflows. An
arbitrary-precision cross-check mode evaluates the same formulas naively
under mpmath with a configurable number of digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np
from scipy.special import gammaln, logsumexp

_NEG_INF = float("-inf")

# Below this log-probability the product over iterations is, to double
# precision, identical to the plain sum of the q_u, so the total is
# assembled by logsumexp instead (stays finite long after linear underflow).
_LOG_TINY_SWITCH = math.log(1e-15)


def _log_comb(a: int, b: int) -> float:
    if b < 0 or b > a or a < 0:
        return _NEG_INF
    return float(gammaln(a + 1) - gammaln(b + 1) - gammaln(a - b + 1))


def rho(n: int, w: int, u: int, *, exact: bool = False):
    """Per-check unsatisfied probabilities (rho1, rho0) at residual weight u.

    rho1 applies to a position carrying an error, rho0 to one that does
    not. For u = 0 there are no error positions, so rho1 is None and
    rho0 = 0. With ``exact`` the values are returned as Fractions.
    """
    if not 1 <= w <= n:
        raise ValueError(f"row weight {w} out of range for length {n}")
    if not 0 <= u <= n:
        raise ValueError(f"residual weight {u} out of range for length {n}")

    if exact:
        denom = math.comb(n - 1, w - 1)
        rho1 = None
        if u >= 1:
            num1 = sum(
                math.comb(u - 1, l) * math.comb(n - u, w - 1 - l)
                for l in range(0, min(w - 1, u - 1) + 1, 2)
            )
            rho1 = Fraction(num1, denom)
        num0 = sum(
            math.comb(u, l) * math.comb(n - 1 - u, w - 1 - l)
            for l in range(1, min(w - 1, u) + 1, 2)
        )
        return rho1, Fraction(num0, denom)

    log_denom = _log_comb(n - 1, w - 1)
    rho1 = None
    if u >= 1:
        terms = [
            _log_comb(u - 1, l) + _log_comb(n - u, w - 1 - l) - log_denom
            for l in range(0, min(w - 1, u - 1) + 1, 2)
        ]
        terms = [t for t in terms if t != _NEG_INF]
        rho1 = float(min(1.0, math.exp(logsumexp(terms)))) if terms else 0.0
    terms = [
        _log_comb(u, l) + _log_comb(n - 1 - u, w - 1 - l) - log_denom
        for l in range(1, min(w - 1, u) + 1, 2)
    ]
    terms = [t for t in terms if t != _NEG_INF]
    rho0 = float(min(1.0, math.exp(logsumexp(terms)))) if terms else 0.0
    return rho1, rho0


def _log_binom_pmf(v: int, p: float) -> np.ndarray:
    """log Binomial(v, p) pmf over x in [0, v], endpoints special-cased."""
    out = np.full(v + 1, _NEG_INF)
    if p <= 0.0:
        out[0] = 0.0
    elif p >= 1.0:
        out[v] = 0.0
    else:
        x = np.arange(v + 1)
        lc = gammaln(v + 1) - gammaln(x + 1) - gammaln(v - x + 1)
        out = lc + x * math.log(p) + (v - x) * math.log1p(-p)
    return out


@dataclass(frozen=True)
class CounterDistribution:
    """Counter pmfs g1/g0 (error / error-free positions) at residual weight u.

    Carries both linear arrays for inspection and the log/tail pair used by
    the failure computation: ``tail*[x]`` is the mass strictly above x
    (accurate where the cdf is near 1), ``log_cum*[x]`` the log cdf built
    from below (accurate where the cdf is near 0).
    """

    v: int
    u: int | None
    rho1: float | None
    rho0: float
    g1: np.ndarray | None
    g0: np.ndarray
    cum_g1: np.ndarray | None
    cum_g0: np.ndarray
    log_g1: np.ndarray | None
    log_g0: np.ndarray
    tail1: np.ndarray | None
    tail0: np.ndarray
    log_cum1: np.ndarray | None
    log_cum0: np.ndarray

    def log_cdf0_pow(self, x: int, power: int) -> float:
        return _log_cdf_pow(self.tail0, self.log_cum0, x, power)

    def log_cdf1_pow(self, x: int, power: int) -> float:
        if self.tail1 is None:
            raise ValueError("distribution built without rho1 (u = 0)")
        return _log_cdf_pow(self.tail1, self.log_cum1, x, power)


def _log_cdf_pow(tail: np.ndarray, log_cum: np.ndarray, x: int, power: int) -> float:
    t = float(tail[x])
    if t < 0.5:
        return power * math.log1p(-t)
    lc = float(log_cum[x])
    if lc == _NEG_INF:
        return _NEG_INF
    return power * lc


def _cdf_pieces(log_g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    g = np.exp(log_g)
    cum = np.cumsum(g)
    tail = np.concatenate([np.cumsum(g[::-1])[::-1][1:], [0.0]])
    log_cum = np.array([logsumexp(log_g[: x + 1]) for x in range(log_g.size)])
    return g, cum, tail, log_cum


def counter_pmfs(v: int, rho1: float | None, rho0: float, u: int | None = None) -> CounterDistribution:
    """Binomial counter pmfs over [0, v] for the two position classes."""
    for name, p in (("rho1", rho1), ("rho0", rho0)):
        if p is not None and not 0.0 <= p <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {p}")
    log_g0 = _log_binom_pmf(v, rho0)
    g0, cum0, tail0, log_cum0 = _cdf_pieces(log_g0)
    if rho1 is None:
        g1 = cum1 = log_g1 = tail1 = log_cum1 = None
    else:
        log_g1 = _log_binom_pmf(v, rho1)
        g1, cum1, tail1, log_cum1 = _cdf_pieces(log_g1)
    return CounterDistribution(
        v=v, u=u, rho1=rho1, rho0=rho0,
        g1=g1, g0=g0, cum_g1=cum1, cum_g0=cum0,
        log_g1=log_g1, log_g0=log_g0,
        tail1=tail1, tail0=tail0,
        log_cum1=log_cum1, log_cum0=log_cum0,
    )


@dataclass(frozen=True)
class ExactCounterPmfs:
    """Fraction-valued counter pmfs, for oracle tests at small v."""

    v: int
    g1: list[Fraction] | None
    g0: list[Fraction]


def counter_pmfs_exact(v: int, rho1: Fraction | None, rho0: Fraction) -> ExactCounterPmfs:
    def pmf(p: Fraction) -> list[Fraction]:
        q = 1 - p
        return [Fraction(math.comb(v, x)) * p**x * q ** (v - x) for x in range(v + 1)]

    return ExactCounterPmfs(v, None if rho1 is None else pmf(rho1), pmf(rho0))


def log_iteration_failure(n: int, v: int, u: int, dist: CounterDistribution) -> float:
    """log q_u: probability that the error-free maximum reaches the error one.

    q_u = sum_x P(max of n-u error-free counters = x) * P(all u error
    counters <= x). The pmf of the maximum comes from consecutive cdf
    powers, differenced in the log domain to avoid cancellation.
    """
    if u < 1:
        raise ValueError("residual weight must be at least 1")
    m = n - u
    a_prev = _NEG_INF  # log cdf0(x-1)^m
    terms = []
    for x in range(v + 1):
        a_cur = dist.log_cdf0_pow(x, m)
        if a_cur != _NEG_INF:
            if a_prev == _NEG_INF:
                log_f0 = a_cur
            else:
                diff = a_prev - a_cur
                log_f0 = a_cur + math.log(-math.expm1(diff)) if diff < 0.0 else _NEG_INF
            if log_f0 != _NEG_INF:
                log_c1 = dist.log_cdf1_pow(x, u)
                if log_c1 != _NEG_INF:
                    terms.append(log_f0 + log_c1)
        a_prev = a_cur
    if not terms:
        return _NEG_INF
    return float(min(0.0, logsumexp(terms)))


def iteration_failure(n: int, v: int, u: int, dist: CounterDistribution) -> float:
    """q_u in the linear domain (may underflow; see log_iteration_failure)."""
    return math.exp(log_iteration_failure(n, v, u, dist))


def iteration_failure_direct(n: int, v: int, u: int, dist: CounterDistribution) -> float:
    """The algebraically identical complement form 1 - sum f1*f0.

    Direct linear evaluation, useful as a self-check where q_u is large
    enough to survive the cancellation.
    """
    m = n - u
    cum0 = dist.cum_g0
    cum1 = dist.cum_g1
    total = 0.0
    for x in range(v):
        f0 = cum0[x] ** m - (cum0[x - 1] ** m if x > 0 else 0.0)
        f1 = 1.0 - cum1[x] ** u
        total += f0 * f1
    return 1.0 - total


@dataclass(frozen=True)
class DfrPrediction:
    """Predicted failure rate for weight-t errors with iteration budget t."""

    n: int
    r: int
    v: int
    w: int
    t: int
    per_iteration_failure: np.ndarray
    dfr_linear: float
    log_dfr: float
    mode: str

    @property
    def log2_dfr(self) -> float:
        return self.log_dfr / math.log(2.0)

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "r": self.r,
            "v": self.v,
            "w": self.w,
            "t": self.t,
            "q": [float(q) for q in self.per_iteration_failure],
            "dfr": self.dfr_linear,
            "log2_dfr": self.log2_dfr,
        }


def _check_regular_profile(n: int, r: int, v: int, w: int) -> None:
    if n < 1 or r < 1 or v < 1 or w < 1:
        raise ValueError("n, r, v, w must be positive")
    if w > n or v > r:
        raise ValueError("weights exceed dimensions")
    if n * v != r * w:
        raise ValueError(
            f"profile is not (v,w)-regular: n*v = {n * v} but r*w = {r * w}; "
            "the failure model requires constant column and row weights"
        )


def _assemble(log_qs: list[float]) -> tuple[float, float]:
    """Combine per-iteration log failure probabilities into (dfr, log_dfr)."""
    finite = [lq for lq in log_qs if lq != _NEG_INF]
    if not finite:
        return 0.0, _NEG_INF
    if max(finite) < _LOG_TINY_SWITCH:
        log_dfr = float(logsumexp(finite))
        return math.exp(log_dfr), log_dfr
    if any(lq >= 0.0 for lq in finite):
        return 1.0, 0.0
    acc = 0.0
    for lq in finite:
        acc += math.log1p(-math.exp(lq))
    dfr = -math.expm1(acc)
    log_dfr = math.log(dfr) if dfr > 0.0 else _NEG_INF
    return dfr, log_dfr


def predict_dfr(n: int, r: int, v: int, w: int, t: int, *, mode: str = "fast", dps: int = 60) -> DfrPrediction:
    """Failure rate of single-flip decoding with iteration budget t.

    The product runs over residual weights u = 1..t; iteration number and
    residual weight are interchangeable because every successful iteration
    removes exactly one error. ``mode`` selects the log-domain float path
    ("fast") or the mpmath cross-check ("exact") with ``dps`` digits.
    """
    _check_regular_profile(n, r, v, w)
    if not 0 <= t <= n:
        raise ValueError(f"error weight {t} out of range for length {n}")
    if mode == "exact":
        return _predict_dfr_mp(n, r, v, w, t, dps)
    if mode != "fast":
        raise ValueError(f"unknown mode {mode!r}")

    log_qs = []
    for u in range(1, t + 1):
        r1, r0 = rho(n, w, u)
        dist = counter_pmfs(v, r1, r0, u=u)
        log_qs.append(log_iteration_failure(n, v, u, dist))
    dfr, log_dfr = _assemble(log_qs)
    qs = np.exp(log_qs) if log_qs else np.empty(0)
    return DfrPrediction(n, r, v, w, t, qs, dfr, log_dfr, "fast")


def _predict_dfr_mp(n: int, r: int, v: int, w: int, t: int, dps: int) -> DfrPrediction:
    """Same formulas evaluated naively under mpmath with ``dps`` digits.

    Exact-rational evaluation is out of reach (the cdf powers raise
    4000-bit rationals to exponents near n), so the oracle uses
    arbitrary-precision floating point with generous guard digits instead.
    """
    mp = mpmath.mp
    with mp.workdps(dps):
        one = mpmath.mpf(1)
        qs = []
        success = one
        for u in range(1, t + 1):
            r1_frac, r0_frac = rho(n, w, u, exact=True)
            r1 = mpmath.mpf(r1_frac.numerator) / r1_frac.denominator
            r0 = mpmath.mpf(r0_frac.numerator) / r0_frac.denominator
            g1 = [mpmath.binomial(v, x) * r1**x * (one - r1) ** (v - x) for x in range(v + 1)]
            g0 = [mpmath.binomial(v, x) * r0**x * (one - r0) ** (v - x) for x in range(v + 1)]
            cum1 = _mp_cumsum(g1)
            cum0 = _mp_cumsum(g0)
            m = n - u
            q = mpmath.mpf(0)
            prev = mpmath.mpf(0)
            for x in range(v + 1):
                cur = cum0[x] ** m
                f0 = cur - prev
                q += f0 * cum1[x] ** u
                prev = cur
            qs.append(q)
            success *= one - q
        dfr = one - success if t > 0 else mpmath.mpf(0)
        log_dfr = float(mpmath.log(dfr)) if dfr > 0 else _NEG_INF
        qs_f = np.array([float(q) for q in qs]) if qs else np.empty(0)
        return DfrPrediction(n, r, v, w, t, qs_f, float(dfr), log_dfr, "exact")


def _mp_cumsum(values):
    out = []
    acc = mpmath.mpf(0)
    for val in values:
        acc += val
        out.append(acc)
    return out
