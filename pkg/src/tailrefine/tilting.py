"""Maximum likelihood tilt, divergence and tilted variance at a target mean.

The divergence is the convex conjugate of the log partition function,
``D(mu) = sup_beta (beta*mu - ln Z(beta))``, attained at the tilt whose mean
is ``mu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .distributions import (
    Bernoulli,
    DistributionModel,
    Exponential,
    FinitePMF,
    Gaussian,
    Poisson,
    log_partition,
    tilted_mean,
    tilted_variance,
)
from .errors import ConvergenceError, RangeError

NEAR_BASE_MEAN_TILT = 1e-4
MAX_ITER = 200
_MEAN_RTOL = 1e-12
_STEP_RTOL = 1e-14
_MAX_EXPANSIONS = 2000


@dataclass(frozen=True)
class TiltedSummary:
    beta_hat: float
    divergence: float
    variance: float
    log_partition_at_tilt: float
    target_mean: float
    near_base_mean: bool = False


def _summary(beta, divergence, variance, log_z, mu) -> TiltedSummary:
    return TiltedSummary(
        beta_hat=beta,
        divergence=max(divergence, 0.0),
        variance=variance,
        log_partition_at_tilt=log_z,
        target_mean=mu,
        near_base_mean=abs(beta) < NEAR_BASE_MEAN_TILT,
    )


def tilt_at(model: DistributionModel, beta: float) -> TiltedSummary:
    """Summary of the tilted law P_beta, taking its own mean as the target."""
    log_z = log_partition(model, beta)
    mu = tilted_mean(model, beta)
    return _summary(beta, beta * mu - log_z, tilted_variance(model, beta), log_z, mu)


def _closed_form(model, mu: float) -> TiltedSummary:
    if isinstance(model, Bernoulli):
        p = model.p
        # e^beta = mu(1-p) / (p(1-mu))
        log_q = math.log1p(-mu) - math.log1p(-p)
        beta = (math.log(mu) - math.log(p)) - log_q
        d = mu * (math.log(mu) - math.log(p)) + (1.0 - mu) * log_q
        return _summary(beta, d, mu * (1.0 - mu), -log_q, mu)
    if isinstance(model, Poisson):
        lam = model.lam
        beta = math.log(mu / lam)
        return _summary(beta, mu * beta - mu + lam, mu, mu - lam, mu)
    if isinstance(model, Exponential):
        x = model.rate * mu - 1.0
        beta = model.rate - 1.0 / mu
        return _summary(beta, x - math.log1p(x), mu * mu, math.log1p(x), mu)
    if isinstance(model, Gaussian):
        beta = (mu - model.mean) / model.variance
        d = 0.5 * (mu - model.mean) ** 2 / model.variance
        return _summary(beta, d, model.variance, model.log_partition(beta), mu)
    raise TypeError(f"no closed form for {type(model).__name__}")


def _solve_numeric(model: DistributionModel, mu: float) -> float:
    """Root of tilted_mean(beta) = mu by Newton steps kept inside a bracket."""
    base = model.base_mean
    if mu == base:
        return 0.0
    rng = model.mean_range()
    spread = rng.supremum - rng.infimum
    scale = spread if math.isfinite(spread) else 1.0
    tol = _MEAN_RTOL * max(scale, abs(mu))

    def f(beta):
        return tilted_mean(model, beta) - mu

    # Grow a bracket [lo, hi] geometrically away from beta = 0.
    lo_dom, hi_dom = model.natural_domain
    direction = 1.0 if mu > base else -1.0
    step = 1.0 / math.sqrt(tilted_variance(model, 0.0))
    inner, outer = 0.0, direction * step
    for _ in range(_MAX_EXPANSIONS):
        cap = hi_dom if direction > 0 else lo_dom
        if math.isfinite(cap) and direction * (outer - cap) >= 0:
            outer = inner + (cap - inner) * (1.0 - 1e-12)
        if direction * f(outer) >= 0:
            break
        inner = outer
        step *= 2.0
        outer = inner + direction * step
    else:
        raise ConvergenceError(f"could not bracket the tilt for mu={mu!r}")
    lo, hi = (inner, outer) if direction > 0 else (outer, inner)

    beta = inner
    fb = f(beta)
    for _ in range(MAX_ITER):
        slope = tilted_variance(model, beta)
        new = beta - fb / slope if slope > 0 else math.nan
        if not (lo < new < hi):
            new = 0.5 * (lo + hi)
        delta = new - beta
        beta = new
        fb = f(beta)
        if fb > 0:
            hi = beta
        else:
            lo = beta
        if abs(fb) <= tol or abs(delta) <= _STEP_RTOL * max(1.0, abs(beta)):
            # One polishing step: the bracket already guarantees the root,
            # and quadratic convergence makes this nearly free.
            slope = tilted_variance(model, beta)
            if slope > 0:
                polished = beta - fb / slope
                if lo <= polished <= hi:
                    beta = polished
            return beta
    raise ConvergenceError(f"tilt solver did not converge in {MAX_ITER} iterations (mu={mu!r})")


def solve_tilt(model: DistributionModel, mu: float) -> TiltedSummary:
    """Solve for the tilt whose mean equals ``mu`` and summarise it.

    Raises ``RangeError`` if ``mu`` is not strictly inside the mean value
    range, where the divergence would be infinite.
    """
    rng = model.mean_range()
    if not rng.contains(mu):
        raise RangeError(
            f"mu={mu!r} outside the open mean value range ({rng.infimum}, {rng.supremum})"
        )
    if isinstance(model, FinitePMF):
        beta = _solve_numeric(model, mu)
        log_z = log_partition(model, beta)
        return _summary(beta, beta * mu - log_z, tilted_variance(model, beta), log_z, mu)
    return _closed_form(model, mu)


def divergence_derivative(model: DistributionModel, mu: float) -> float:
    """dD/dmu, which equals the tilt itself."""
    return solve_tilt(model, mu).beta_hat
