"""Tail estimates for P{(X_1 + ... + X_n)/n >= mu}.

Three estimators, all returned in log domain:

* ``sanov``: exp(-n D(mu)).
* ``bahadur_rao``: the Sanov rate times 1/(sqrt(2 pi n V) * b), with
  b = beta_hat for non-lattice laws and b = (1 - exp(-d beta_hat))/d on a
  lattice of span d.
* ``refined_gaussian``: Phi(-sqrt(2 n D(mu - c/n))), where the constant c
  makes the Gaussian tail match the Bahadur-Rao prefactor to first order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .distributions import DistributionModel, LatticeInfo, lattice_of
from .errors import (
    DegenerateTiltError,
    LatticeAlignmentError,
    RangeError,
    ShiftError,
    UnsupportedModelError,
)
from .numerics import log_std_normal_cdf
from .tilting import TiltedSummary, solve_tilt

LATTICE_TOL = 1e-9
UNDERFLOW_LOG = -700.0
FI0_TOL = 1e-10

SANOV = "sanov"
BAHADUR_RAO = "bahadur_rao"
REFINED_GAUSSIAN = "refined_gaussian"
METHODS = (SANOV, BAHADUR_RAO, REFINED_GAUSSIAN)


@dataclass(frozen=True)
class TailQuery:
    n: int
    mu: float
    mu_rounded: Optional[float] = None

    @property
    def threshold(self) -> float:
        return self.mu if self.mu_rounded is None else self.mu_rounded


@dataclass(frozen=True)
class ApproxResult:
    log_prob: float
    method: str
    summary: TiltedSummary
    c_mu: Optional[float] = None

    @property
    def prob(self) -> float:
        # Bahadur-Rao can exceed 1 far from the asymptotic regime; that is
        # reported as is rather than clipped.
        return math.exp(self.log_prob) if self.log_prob >= UNDERFLOW_LOG else 0.0


def _lattice_index(lat: LatticeInfo, n: int, mu: float) -> float:
    return (n * mu - n * lat.offset) / lat.span


def on_sum_lattice(lat: LatticeInfo, n: int, mu: float) -> bool:
    k = _lattice_index(lat, n, mu)
    return abs(k - round(k)) <= LATTICE_TOL


def round_up_to_grid(model: DistributionModel, n: int, mu: float) -> float:
    """Smallest mu_n >= mu with n * mu_n on the lattice of attainable sums."""
    lat = lattice_of(model)
    if lat is None:
        raise UnsupportedModelError(f"{model.to_spec()} is not lattice valued")
    _check_n(n)
    k = math.ceil(_lattice_index(lat, n, mu) - LATTICE_TOL)
    return (k * lat.span + n * lat.offset) / n


def make_query(model: DistributionModel, n: int, mu: float) -> TailQuery:
    _check_n(n)
    _check_upper_tail(model, mu)
    if lattice_of(model) is None:
        return TailQuery(n, mu)
    rounded = round_up_to_grid(model, n, mu)
    _check_upper_tail(model, rounded)
    return TailQuery(n, mu, rounded)


def _check_n(n: int) -> None:
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")


def _check_upper_tail(model: DistributionModel, mu: float) -> None:
    rng = model.mean_range()
    if not rng.contains(mu):
        raise RangeError(
            f"mu={mu!r} outside the open mean value range ({rng.infimum}, {rng.supremum})"
        )
    if not mu > rng.base_mean:
        raise RangeError(f"mu={mu!r} is not above the base mean {rng.base_mean!r}")


def _check_tilt(summary: TiltedSummary) -> None:
    if summary.near_base_mean:
        raise DegenerateTiltError(
            f"tilt {summary.beta_hat!r} at mu={summary.target_mean!r} is too close to zero"
        )
    if not summary.beta_hat > 0:
        raise RangeError(f"mu={summary.target_mean!r} is a lower-tail threshold")


def sanov_log(summary: TiltedSummary, n: int) -> float:
    return -n * summary.divergence


def beta_factor(model: DistributionModel, summary: TiltedSummary) -> float:
    """(1 - exp(-d beta_hat))/d on a lattice of span d, beta_hat otherwise."""
    _check_tilt(summary)
    lat = lattice_of(model)
    if lat is None:
        return summary.beta_hat
    return -math.expm1(-lat.span * summary.beta_hat) / lat.span


def bahadur_rao_log(model: DistributionModel, summary: TiltedSummary, n: int) -> ApproxResult:
    _check_n(n)
    factor = beta_factor(model, summary)
    lat = lattice_of(model)
    if lat is not None and not on_sum_lattice(lat, n, summary.target_mean):
        raise LatticeAlignmentError(
            f"n*mu = {n * summary.target_mean!r} is not an attainable sum "
            f"(span {lat.span}, offset {lat.offset})"
        )
    log_prob = (
        -n * summary.divergence
        - 0.5 * math.log(2.0 * math.pi * n * summary.variance)
        - math.log(factor)
    )
    return ApproxResult(log_prob=log_prob, method=BAHADUR_RAO, summary=summary)


def correction_constant(summary: TiltedSummary, factor: float) -> float:
    """ln(sqrt(2D) / (sqrt(V) * factor)) / beta_hat for a given prefactor term.

    Passing ``factor = beta_hat`` gives the non-lattice constant.  The result
    is checked against its defining identity
    sqrt(2D/V) / (factor * exp(c * beta_hat)) = 1.
    """
    _check_tilt(summary)
    beta = summary.beta_hat
    ratio = math.sqrt(2.0 * summary.divergence / summary.variance)
    c = (math.log(ratio) - math.log(factor)) / beta
    residual = abs(ratio / (factor * math.exp(c * beta)) - 1.0)
    if not (math.isfinite(c) and residual <= FI0_TOL):
        raise ArithmeticError(f"correction constant failed its identity check (residual {residual!r})")
    return c


def c_mu(model: DistributionModel, summary: TiltedSummary) -> float:
    """The mean shift c_mu for the model (lattice form when applicable)."""
    return correction_constant(summary, beta_factor(model, summary))


def binomial_c_mu(p: float, mu: float) -> float:
    """Closed form of c_mu for Bernoulli(p) sums, valid for p < mu < 1."""
    if not (0.0 < p < 1.0):
        raise RangeError(f"p={p!r} must lie in (0, 1)")
    if not (p < mu < 1.0):
        raise RangeError(f"mu={mu!r} must lie in (p, 1) = ({p!r}, 1)")
    log_mu_p = math.log(mu) - math.log(p)
    log_q = math.log1p(-mu) - math.log1p(-p)
    d = mu * log_mu_p + (1.0 - mu) * log_q
    log_odds = log_mu_p - log_q
    inner = math.log(2.0 * d) - 2.0 * math.log(mu - p) + math.log(p) + math.log1p(-p)
    return 0.5 + inner / (2.0 * log_odds)


def refined_gaussian_log(
    model: DistributionModel, mu: float, n: int, c: Optional[float] = None
) -> ApproxResult:
    """log Phi(-sqrt(2 n D(mu - c/n))).

    On a lattice the threshold is first rounded up to the sum grid and c is
    evaluated there.  ``c`` overrides the correction constant (c = 0 gives
    the uncorrected Gaussian-divergence estimate).
    """
    query = make_query(model, n, mu)
    summary = solve_tilt(model, query.threshold)
    c_value = c_mu(model, summary)
    shift = c_value if c is None else c
    shifted = query.threshold - shift / n
    base = model.base_mean
    if not shifted > base:
        raise ShiftError(
            f"shifted mean {shifted!r} is not above the base mean {base!r}; n={n} is too small"
        )
    d_shifted = solve_tilt(model, shifted).divergence
    log_prob = log_std_normal_cdf(-math.sqrt(2.0 * n * d_shifted))
    return ApproxResult(log_prob=log_prob, method=REFINED_GAUSSIAN, summary=summary, c_mu=shift)


def constant_sensitivity(model: DistributionModel, summary: TiltedSummary, c_alt: float) -> float:
    """Limiting ratio of the refined estimate using c_mu to one using ``c_alt``."""
    return math.exp(summary.beta_hat * (c_mu(model, summary) - c_alt))


def estimate(model: DistributionModel, mu: float, n: int, method: str) -> ApproxResult:
    """Dispatch one estimator by label, for callers that work with names."""
    if method == REFINED_GAUSSIAN:
        return refined_gaussian_log(model, mu, n)
    query = make_query(model, n, mu)
    if method == SANOV:
        summary = solve_tilt(model, mu)
        return ApproxResult(log_prob=sanov_log(summary, n), method=SANOV, summary=summary)
    if method == BAHADUR_RAO:
        summary = solve_tilt(model, query.mu)
        return bahadur_rao_log(model, summary, n)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
