"""Truncated-normal CDF over interval unions and mean-parameter inversion.

The regions produced by selection geometry routinely sit many standard
deviations from the candidate mean during interval inversion, so all
probability mass is computed from standardized endpoints in log space:
same-side intervals use complementary-function differences via
``log(1 - exp(d))``, intervals straddling the mean use a pair of
half-``erf`` terms that cannot cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import erf, log_ndtr

from . import errors
from .intervals import IntervalUnion

_SQRT2 = math.sqrt(2.0)
_LOG_HALF = -math.log(2.0)

# Bisection stops when the CDF residual drops below this; tolerances live in
# CDF space because the CDF is flat in x across gaps of the region.  The
# stopping rule is well inside the 1e-8 accuracy contract so that inverted
# endpoints are also accurate in mean space at moderate densities.
CDF_TOL = 1e-11
MAX_BISECT = 200
MAX_EXPAND = 300


def _log1mexp(d: np.ndarray) -> np.ndarray:
    """log(1 - exp(d)) for d <= 0, stable at both ends."""
    d = np.asarray(d, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        small = d > _LOG_HALF  # exp(d) close to 1
        out = np.where(
            small,
            np.log(-np.expm1(np.where(small, d, -1.0))),
            np.log1p(-np.exp(np.where(small, -1.0, d))),
        )
    return out


def _logsumexp(a: np.ndarray) -> float:
    """log(sum(exp(a))) for a short 1-d array; -inf-safe."""
    m = float(np.max(a)) if a.size else -math.inf
    if m == -math.inf:
        return -math.inf
    return m + math.log(float(np.sum(np.exp(a - m))))


def _logsumexp_list(vals) -> float:
    m = max(vals) if vals else -math.inf
    if m == -math.inf:
        return -math.inf
    return m + math.log(sum(math.exp(v - m) for v in vals))


def _log1mexp_scalar(d: float) -> float:
    if d >= 0.0:
        return -math.inf
    if d > _LOG_HALF:
        return math.log(-math.expm1(d))
    return math.log1p(-math.exp(d))


def _log_measure_std_scalar(a: float, b: float) -> float:
    """Scalar twin of :func:`_log_measure_std`, for hot loops."""
    if a >= 0.0:
        la = float(log_ndtr(-a))
        lb = float(log_ndtr(-b)) if b != math.inf else -math.inf
        return la + _log1mexp_scalar(lb - la)
    if b <= 0.0:
        lb = float(log_ndtr(b))
        la = float(log_ndtr(a)) if a != -math.inf else -math.inf
        return lb + _log1mexp_scalar(la - lb)
    val = 0.5 * (float(erf(b / _SQRT2)) + float(erf(-a / _SQRT2)))
    return math.log(val) if val > 0.0 else -math.inf


def _log_measure_std(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """log P(a < Z < b) for standard normal Z, elementwise; requires b > a."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        a, b = np.broadcast_arrays(a, b)
    out = np.empty(a.shape)

    upper = a >= 0.0
    lower = b <= 0.0
    straddle = ~(upper | lower)

    if upper.any():
        la = log_ndtr(-a[upper])
        lb = log_ndtr(-b[upper])
        out[upper] = la + _log1mexp(lb - la)
    if lower.any():
        la = log_ndtr(a[lower])
        lb = log_ndtr(b[lower])
        out[lower] = lb + _log1mexp(la - lb)
    if straddle.any():
        # P = Phi(b) - Phi(a) = erf(b/sqrt2)/2 + erf(-a/sqrt2)/2; both terms
        # are nonnegative, so no cancellation near zero-width intervals.
        val = 0.5 * (erf(b[straddle] / _SQRT2) + erf(-a[straddle] / _SQRT2))
        with np.errstate(divide="ignore"):
            out[straddle] = np.log(val)
    return out


def log_normal_measure(interval: Tuple[float, float], mu: float, lam: float) -> float:
    """log of the normal(mu, lam^2) mass of the open interval ``(lo, hi)``."""
    lo, hi = interval
    if not hi > lo:
        return -math.inf
    if lam <= 0.0:
        raise errors.InputError("standard deviation must be positive")
    a = (lo - mu) / lam
    b = (hi - mu) / lam
    return float(_log_measure_std(np.array([a]), np.array([b]))[0])


def normal_measure(interval: Tuple[float, float], mu: float, lam: float) -> float:
    """Normal(mu, lam^2) probability of the open interval ``(lo, hi)``."""
    lv = log_normal_measure(interval, mu, lam)
    return math.exp(lv) if lv > -math.inf else 0.0


@dataclass(frozen=True)
class TruncatedNormalSpec:
    """Normal(mu, lambda^2) truncated to ``region``."""

    mu: float
    lam: float
    region: IntervalUnion

    def __post_init__(self):
        if not self.lam > 0.0:
            raise errors.InputError("lambda must be positive")
        if self.region.is_empty:
            raise errors.InputError("truncation region must be nonempty")


class _TruncatedFamily:
    """CDF at a fixed point as a function of the mean, vectorized over pieces.

    The evaluation point splits the region once; afterwards every CDF call is
    a single batched standardized-measure evaluation over the full pieces and
    the clipped pieces together.
    """

    def __init__(self, x: float, lam: float, region: IntervalUnion):
        if not lam > 0.0:
            raise errors.InputError("lambda must be positive")
        if region.is_empty:
            raise errors.InputError("truncation region must be nonempty")
        self.x = float(x)
        self.lam = float(lam)
        self.region = region
        clipped = [(lo, min(hi, x)) for lo, hi in region.intervals if lo < x]
        self.n_full = len(region.intervals)
        self.pairs = [(float(lo), float(hi))
                      for lo, hi in (*region.intervals, *clipped)]

    def log_mass_parts(self, mu: float) -> Tuple[float, float]:
        """(log numerator, log denominator) of the truncated CDF at ``x``."""
        lam = self.lam
        logs = [_log_measure_std_scalar((lo - mu) / lam, (hi - mu) / lam)
                for lo, hi in self.pairs]
        logden = _logsumexp_list(logs[: self.n_full])
        lognum = _logsumexp_list(logs[self.n_full:])
        return lognum, logden

    def cdf(self, mu: float) -> float:
        lognum, logden = self.log_mass_parts(mu)
        if logden == -math.inf or math.isnan(logden):
            raise errors.RegionMassUnderflow(
                f"region carries no representable mass at mu={mu}")
        if lognum == -math.inf:
            return 0.0
        return math.exp(min(lognum - logden, 0.0))


def truncated_cdf(x: float, spec: TruncatedNormalSpec) -> float:
    """CDF of the truncated normal at ``x``: mass of ``(-inf, x] ∩ R`` over mass of R."""
    if x <= spec.region.infimum:
        # still need the denominator check for pathological specs
        fam = _TruncatedFamily(x, spec.lam, spec.region)
        fam.cdf(spec.mu)
        return 0.0
    if x >= spec.region.supremum:
        fam = _TruncatedFamily(spec.region.supremum, spec.lam, spec.region)
        fam.cdf(spec.mu)
        return 1.0
    return _TruncatedFamily(x, spec.lam, spec.region).cdf(spec.mu)


def invert_mean(
    target: float,
    x_obs: float,
    lam: float,
    region: IntervalUnion,
) -> float:
    """Mean ``mu`` at which the truncated CDF of ``x_obs`` equals ``target``.

    The CDF is strictly decreasing in the mean, so a geometric bracket
    expansion from ``x_obs ± lam`` followed by bisection converges; the
    stopping rule lives in CDF space (``CDF_TOL``).
    """
    if not 0.0 < target < 1.0:
        raise errors.InputError(f"target must be in (0,1), got {target}")
    if not region.contains(x_obs):
        raise errors.ObservationOutsideRegion(
            f"x={x_obs} is not interior to the region {region}")
    fam = _TruncatedFamily(x_obs, lam, region)

    mu_lo = x_obs - lam
    mu_hi = x_obs + lam
    f_lo = fam.cdf(mu_lo)
    f_hi = fam.cdf(mu_hi)
    step = lam
    for _ in range(MAX_EXPAND):
        if f_lo >= target:
            break
        mu_lo -= step
        step *= 2.0
        f_lo = fam.cdf(mu_lo)
    else:
        raise errors.BracketFailure(
            f"could not bracket target {target} from below (CDF pinned near {f_lo})")
    step = lam
    for _ in range(MAX_EXPAND):
        if f_hi <= target:
            break
        mu_hi += step
        step *= 2.0
        f_hi = fam.cdf(mu_hi)
    else:
        raise errors.BracketFailure(
            f"could not bracket target {target} from above (CDF pinned near {f_hi})")

    for _ in range(MAX_BISECT):
        mid = 0.5 * (mu_lo + mu_hi)
        f_mid = fam.cdf(mid)
        if abs(f_mid - target) <= CDF_TOL:
            return mid
        if f_mid > target:
            mu_lo = mid
        else:
            mu_hi = mid
    raise errors.BracketFailure(
        "bisection failed to reach the CDF tolerance; the region may be corrupted")
