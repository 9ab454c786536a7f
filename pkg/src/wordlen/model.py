"""Word-length distribution with a guaranteed first syllable.

The single-rate law puts X - 1 ~ Poisson(rate), so

    P(X = x) = exp(-rate) * rate**(x-1) / (x-1)!      for x = 1, 2, ...

Every word keeps at least one syllable.  The two-parameter variant draws the
rate uniformly from [lambda1, lambda2] and averages the single-rate law over
that interval; its midpoint lambda0 = (lambda1 + lambda2) / 2 makes the mean
word length 1 + lambda0.

The mixture probability is evaluated through the cumulative-Poisson identity

    integral_0^t exp(-u) u**k / k! du = 1 - sum_{j=0}^{k} exp(-t) t**j / j!

with every Poisson term computed in log space, so no factorial ever
overflows.  All functions are pure; sampling is reproducible per seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "DEGENERACY_EPS",
    "MixtureParams",
    "LengthPmf",
    "shifted_poisson_pmf",
    "mixture_pmf",
    "mixture_pmf_table",
    "mean_length",
    "sample_lengths",
]

# Interval widths below this are a single-rate law for all practical purposes.
DEGENERACY_EPS = 1e-9

# Below this width the difference of two Poisson CDF sums cancels badly, so
# the mixture is evaluated at the midpoint with interval-average corrections
# of order width^2 and width^4 (error ~ width^6 / 3e5, under 2e-12 at 0.05).
_NARROW_WIDTH = 0.05

_MAX_TABLE_LEN = 4096


def _check_length(x) -> int:
    try:
        ix = int(x)
    except (TypeError, ValueError, OverflowError):
        raise ValueError(f"word length must be an integer >= 1, got {x!r}") from None
    if ix != x or ix < 1:
        raise ValueError(f"word length must be an integer >= 1, got {x!r}")
    return ix


def _check_rate(rate) -> float:
    rate = float(rate)
    if not math.isfinite(rate) or rate < 0.0:
        raise ValueError(f"rate must be a finite number >= 0, got {rate!r}")
    return rate


@dataclass(frozen=True)
class MixtureParams:
    """Endpoints of the uniform rate interval, 0 <= lambda1 <= lambda2."""

    lambda1: float
    lambda2: float

    def __post_init__(self):
        object.__setattr__(self, "lambda1", _check_rate(self.lambda1))
        object.__setattr__(self, "lambda2", _check_rate(self.lambda2))
        if self.lambda1 > self.lambda2:
            raise ValueError(
                f"lambda1 must not exceed lambda2, got ({self.lambda1}, {self.lambda2})"
            )

    @property
    def lambda0(self) -> float:
        """Interval midpoint; the mean word length is 1 + lambda0."""
        return 0.5 * (self.lambda1 + self.lambda2)

    @property
    def width(self) -> float:
        return self.lambda2 - self.lambda1

    def degenerate(self) -> bool:
        """True when the interval is too narrow to differ from a single rate."""
        return self.width < DEGENERACY_EPS


@dataclass(frozen=True)
class LengthPmf:
    """Explicit probabilities for x = 1..x_max plus the truncated remainder.

    The invariant sum(probs.values()) + truncation_tail == 1 holds exactly by
    construction (the tail is defined as one minus the partial sum).
    """

    probs: dict[int, float]
    truncation_tail: float

    @property
    def x_max(self) -> int:
        return max(self.probs)

    def total(self) -> float:
        return sum(self.probs.values()) + self.truncation_tail


def shifted_poisson_pmf(x: int, rate: float) -> float:
    """P(X = x) for X - 1 ~ Poisson(rate), x >= 1.

    Computed as exp(k*log(rate) - rate - lgamma(k+1)) with k = x - 1, which
    stays finite for arbitrarily large x.
    """
    x = _check_length(x)
    rate = _check_rate(rate)
    k = x - 1
    if rate == 0.0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(rate) - rate - math.lgamma(k + 1))


def _poisson_cdf(k: int, t: float) -> float:
    # sum_{j=0}^{k} exp(-t) t^j / j!, built up from the j = 0 term
    if t == 0.0:
        return 1.0
    term = math.exp(-t)
    total = term
    for j in range(1, k + 1):
        term *= t / j
        total += term
    return total


def _poisson_sf(k: int, t: float) -> float:
    # sum_{j>k} exp(-t) t^j / j!; leading term in log space, then the
    # ratio recurrence.  Only called with k >= t, where terms decrease.
    if t == 0.0:
        return 0.0
    j = k + 1
    term = math.exp(j * math.log(t) - t - math.lgamma(j + 1))
    total = term
    while term > 0.0 and j < k + 10000:
        j += 1
        term *= t / j
        total += term
        if term <= total * 1e-17:
            break
    return total


def _midpoint_with_correction(x: int, mid: float, width: float) -> float:
    # Interval average of g(t) = P(X=x | rate t) over a narrow interval:
    # g(mid) + g''(mid) * width^2 / 24, with g'' from the Poisson ladder
    # g'' = p_{k-2} - 2 p_{k-1} + p_k.
    pk = shifted_poisson_pmf(x, mid)
    pk1 = shifted_poisson_pmf(x - 1, mid) if x >= 2 else 0.0
    pk2 = shifted_poisson_pmf(x - 2, mid) if x >= 3 else 0.0
    val = pk + (pk2 - 2.0 * pk1 + pk) * width * width / 24.0
    return min(max(val, 0.0), 1.0)


def mixture_pmf(x: int, params: MixtureParams) -> float:
    """P(X = x) under a rate uniform on [lambda1, lambda2].

    Equals the interval average of the single-rate pmf.  Narrow intervals
    fall back to a midpoint evaluation (see module notes); the degenerate
    case returns the single-rate pmf at the midpoint exactly.
    """
    x = _check_length(x)
    lo, hi = params.lambda1, params.lambda2
    width = hi - lo
    if width < DEGENERACY_EPS:
        return shifted_poisson_pmf(x, params.lambda0)
    if width < _NARROW_WIDTH:
        return _midpoint_with_correction(x, params.lambda0, width)
    k = x - 1
    if k >= hi:
        val = (_poisson_sf(k, hi) - _poisson_sf(k, lo)) / width
    else:
        val = (_poisson_cdf(k, lo) - _poisson_cdf(k, hi)) / width
    return min(max(val, 0.0), 1.0)


def _poisson_terms(t: float, size: int) -> np.ndarray:
    # p_j(t) for j = 0..size-1, in log space
    if t == 0.0:
        out = np.zeros(size)
        out[0] = 1.0
        return out
    j = np.arange(size, dtype=float)
    return np.exp(j * math.log(t) - t - gammaln(j + 1.0))


def _probs_vector(lambda1: float, lambda2: float, size: int) -> np.ndarray:
    # mixture probabilities for x = 1..size as a flat array
    width = lambda2 - lambda1
    mid = 0.5 * (lambda1 + lambda2)
    if width < DEGENERACY_EPS:
        return _poisson_terms(mid, size)
    if width < _NARROW_WIDTH:
        p = _poisson_terms(mid, size)
        p1 = np.concatenate(([0.0], p[:-1]))
        p2 = np.concatenate(([0.0, 0.0], p[:-2]))
        vals = p + (width * width / 24.0) * (p2 - 2.0 * p1 + p)
        return np.clip(vals, 0.0, 1.0)
    lo_cdf = np.cumsum(_poisson_terms(lambda1, size))
    hi_cdf = np.cumsum(_poisson_terms(lambda2, size))
    return np.clip((lo_cdf - hi_cdf) / width, 0.0, 1.0)


def _initial_size(lambda2: float) -> int:
    return max(8, int(lambda2 + 12.0 * math.sqrt(lambda2 + 1.0)) + 8)


def _mix_probs(
    lambda1: float, lambda2: float, tail_tol: float, max_len: int = _MAX_TABLE_LEN
) -> tuple[np.ndarray, float]:
    """Probabilities for x = 1..x_max plus the exact remainder 1 - partial sum.

    x_max is the smallest length whose remaining tail mass drops below
    tail_tol.  Raises if the tolerance is unreachable within max_len entries
    (tolerances below ~1e-15 can fall under the resolution of float sums).
    """
    if not 0.0 < tail_tol < 1.0:
        raise ValueError(f"tail_tol must lie in (0, 1), got {tail_tol!r}")
    size = _initial_size(lambda2)
    while True:
        size = min(size, max_len)
        probs = _probs_vector(lambda1, lambda2, size)
        partial = np.cumsum(probs)
        below = np.nonzero(1.0 - partial < tail_tol)[0]
        if below.size:
            cut = int(below[0]) + 1
            return probs[:cut].copy(), float(1.0 - partial[cut - 1])
        if size >= max_len:
            raise RuntimeError(
                f"tail tolerance {tail_tol} not reached within {max_len} lengths"
            )
        size *= 2


def mixture_pmf_table(params: MixtureParams, tail_tol: float) -> LengthPmf:
    """Explicit pmf out to the smallest x_max with tail mass below tail_tol."""
    probs, tail = _mix_probs(params.lambda1, params.lambda2, float(tail_tol))
    return LengthPmf({i + 1: float(p) for i, p in enumerate(probs)}, tail)


def mean_length(params: MixtureParams) -> float:
    """Expected word length, 1 + lambda0.

    The midpoint lambda0 itself is available as params.lambda0; the two are
    deliberately kept distinct (length counts the guaranteed first syllable,
    the midpoint does not).
    """
    return 1.0 + params.lambda0


def sample_lengths(params: MixtureParams, n: int, seed: int) -> list[int]:
    """Draw n word lengths: rate ~ Uniform(lambda1, lambda2), X = 1 + Poisson(rate).

    Uses numpy's PCG64 generator seeded explicitly, so a fixed seed gives an
    identical sample on every call.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    rates = rng.uniform(params.lambda1, params.lambda2, size=n)
    return [int(v) for v in 1 + rng.poisson(rates)]
