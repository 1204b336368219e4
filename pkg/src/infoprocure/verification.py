"""Ex post statistical quality tests and finite-sample slack bounds.

Delivered data are tested against the seller's reported inverse quality.
Three rules are supported: the raw sample variance, a one-sided lower
confidence bound built from the fourth central moment, and an exact
oracle that observes the true quality.  The envelope machinery inverts
sub-Gaussian tail bounds to produce the downward/upward reporting slacks
that bound profitable misreporting at a given effective sample size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

__all__ = [
    "ExactOracle",
    "GaussianTailEnvelope",
    "LCB",
    "SampleVariance",
    "TailEnvelope",
    "VerificationRule",
    "fourth_central_moment",
    "gaussian_slack_lower",
    "gaussian_slack_upper",
    "lcb_statistic",
    "normal_quantile",
    "sample_variance",
    "slack_lower",
    "slack_upper",
    "verify",
]

# Rational minimax coefficients for the inverse normal CDF (absolute
# error below 1e-13 on (0, 1); the contract requires 1e-9).
_PPND_A = (
    3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3,
)
_PPND_B = (
    1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
    2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_PPND_C = (
    1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4,
)
_PPND_D = (
    1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
    1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_PPND_E = (
    6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
    2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7,
)
_PPND_F = (
    1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
    7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _poly(c: tuple[float, ...], x: float) -> float:
    r = c[7]
    for i in range(6, -1, -1):
        r = r * x + c[i]
    return r


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF by rational approximation.

    Absolute error is below 1e-13 across (0, 1); in particular the
    1e-9 accuracy contract holds on [1e-6, 1 - 1e-6].
    """
    if not (0.0 < p < 1.0):
        raise ValueError(f"quantile level must lie strictly in (0, 1), got {p}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_PPND_A, r) / _poly(_PPND_B, r)
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        val = _poly(_PPND_C, r) / _poly(_PPND_D, r)
    else:
        r -= 5.0
        val = _poly(_PPND_E, r) / _poly(_PPND_F, r)
    return -val if q < 0.0 else val


def sample_variance(samples: Sequence[float]) -> float:
    """Sample variance with divisor n (not n - 1)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise ValueError(f"need at least 2 samples, got {x.size}")
    d = x - x.mean()
    return float(np.mean(d * d))


def fourth_central_moment(samples: Sequence[float]) -> float:
    """Fourth central moment with divisor n."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise ValueError(f"need at least 2 samples, got {x.size}")
    d = x - x.mean()
    return float(np.mean(d**4))


def lcb_statistic(samples: Sequence[float], alpha: float) -> float:
    """One-sided lower confidence bound for the variance.

    Subtracts a normal-approximation safety margin from the sample
    variance: ``S2 - z_{1-alpha}/sqrt(n) * sqrt(mu4 - S2**2)``.  The
    radicand is clamped at zero: it is nonnegative mathematically (power
    mean inequality) but can go slightly negative in floating point.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise ValueError(f"need at least 2 samples, got {x.size}")
    d = x - x.mean()
    s2 = float(np.mean(d * d))
    mu4 = float(np.mean(d**4))
    z = normal_quantile(1.0 - alpha)
    return s2 - z / math.sqrt(x.size) * math.sqrt(max(mu4 - s2 * s2, 0.0))


@dataclass(frozen=True)
class SampleVariance:
    """Accept iff the realized sample variance does not exceed the report."""


@dataclass(frozen=True)
class LCB:
    """Accept iff the lower confidence bound at level 1 - alpha does not exceed the report."""

    alpha: float

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie strictly in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class ExactOracle:
    """Idealized test that observes the true quality: accept iff V <= reported."""


VerificationRule = SampleVariance | LCB | ExactOracle


def verify(
    rule: VerificationRule,
    samples: Sequence[float],
    reported_inv_fisher: float,
    true_inv_fisher: float | None = None,
) -> bool:
    """Apply a verification rule; True means the contract stands.

    ``true_inv_fisher`` is consulted only by the exact oracle; the
    statistical rules look at the delivered samples alone.
    """
    if isinstance(rule, ExactOracle):
        if true_inv_fisher is None:
            raise ValueError("ExactOracle requires the true inverse Fisher information")
        return true_inv_fisher <= reported_inv_fisher
    if isinstance(rule, SampleVariance):
        return sample_variance(samples) <= reported_inv_fisher
    if isinstance(rule, LCB):
        return lcb_statistic(samples, rule.alpha) <= reported_inv_fisher
    raise TypeError(f"unknown verification rule {rule!r}")


class TailEnvelope(Protocol):
    """Concentration envelope of a verification statistic around the truth.

    ``phi(n, u)`` bounds the density of the statistic at distance u from
    the true quality after n samples; ``zeta(n, u)`` bounds the tail
    integral of phi beyond u.  Both are nonincreasing in u, and the tail
    vanishes as n grows.
    """

    v_hi: float

    def phi(self, n: float, u: float) -> float: ...

    def zeta(self, n: float, u: float) -> float: ...


@dataclass(frozen=True)
class GaussianTailEnvelope:
    """Sub-Gaussian envelope for variance-type statistics.

    ``phi(n, u) = c1 * sqrt(n) * exp(-c2 * n * u^2 / v_hi^2)`` and
    ``zeta(n, u) = c3 * exp(-c4 * n * u^2 / v_hi^2)``.  The constants
    default to 1 and are order-of-magnitude tools, not calibrated
    bounds.
    """

    v_hi: float
    c1: float = 1.0
    c2: float = 1.0
    c3: float = 1.0
    c4: float = 1.0

    def __post_init__(self) -> None:
        if min(self.v_hi, self.c1, self.c2, self.c3, self.c4) <= 0.0:
            raise ValueError("envelope parameters must be positive")

    def phi(self, n: float, u: float) -> float:
        return self.c1 * math.sqrt(n) * math.exp(-self.c2 * n * u * u / (self.v_hi**2))

    def zeta(self, n: float, u: float) -> float:
        return self.c3 * math.exp(-self.c4 * n * u * u / (self.v_hi**2))


_BISECT_LO = 1e-9
_BISECT_TOL = 1e-9


def _invert_nonincreasing(f, level: float, hi_limit: float) -> float:
    """Smallest u in [1e-9, hi_limit] with f(u) <= level, to tolerance 1e-9."""
    lo = _BISECT_LO
    if f(lo) <= level:
        return lo
    hi = hi_limit
    if f(hi) > level:
        raise ValueError(
            f"slack is unbounded: envelope stays above {level} on the whole domain (0, {hi_limit}]"
        )
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if f(mid) <= level:
            hi = mid
        else:
            lo = mid
    return hi


def slack_lower(N: float, bounds, env: TailEnvelope) -> float:
    """Downward reporting slack: smallest u with ``zeta_N(u) <= score_lo / score_hi``.

    Under-reporting quality by more than this is detected often enough
    that it cannot be profitable at effective sample size N.
    """
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    level = bounds.score_lo / bounds.score_hi
    return _invert_nonincreasing(lambda u: env.zeta(N, u), level, 10.0 * env.v_hi)


def slack_upper(N: float, bounds, env: TailEnvelope) -> float:
    """Upward reporting slack: smallest u with ``phi_N(u) <= c_lo / score_hi``.

    Over-reporting beyond this radius buys a negligible further drop in
    failure probability, so larger upward reports are dominated.
    """
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    level = bounds.c_lo / bounds.score_hi
    return _invert_nonincreasing(lambda u: env.phi(N, u), level, 10.0 * env.v_hi)


def gaussian_slack_lower(N: float, bounds, env: GaussianTailEnvelope) -> float:
    """Closed-form inversion of the Gaussian zeta envelope (clamped at 0)."""
    arg = math.log(env.c3 * bounds.score_hi / bounds.score_lo)
    return env.v_hi * math.sqrt(max(arg, 0.0) / (env.c4 * N))


def gaussian_slack_upper(N: float, bounds, env: GaussianTailEnvelope) -> float:
    """Closed-form inversion of the Gaussian phi envelope (clamped at 0)."""
    arg = math.log(env.c1 * math.sqrt(N) * bounds.score_hi / bounds.c_lo)
    return env.v_hi * math.sqrt(max(arg, 0.0) / (env.c2 * N))
