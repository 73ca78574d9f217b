"""Special functions evaluated in the log domain.

Only what the tail computations need: the standard normal CDF, the Feller
bounds on its tail, log binomial coefficients, the regularized incomplete
gamma function and a compensated log-sum-exp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

from scipy.special import erfcx

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT_HALF = math.sqrt(0.5)

# math.comb is exact; above this size fall back to lgamma.
_EXACT_COMB_LIMIT = 20000

_GAMMA_MAX_ITER = 10000
_GAMMA_EPS = 1e-16
_TINY = 1e-300


def std_normal_logpdf(z: float) -> float:
    return -0.5 * z * z - LOG_SQRT_2PI


def log_std_normal_cdf(z: float) -> float:
    """Natural log of the standard normal CDF, accurate far into the lower tail.

    For z < -1 the scaled complementary error function is used,
    ``Phi(z) = erfcx(-z/sqrt2) * exp(-z^2/2) / 2``, so the Gaussian factor
    stays in log form and nothing underflows.
    """
    if not math.isfinite(z):
        if math.isnan(z):
            raise ValueError("z must be finite")
        return 0.0 if z > 0 else -math.inf
    if z < -1.0:
        return math.log(0.5 * float(erfcx(-z * _SQRT_HALF))) - 0.5 * z * z
    if z > 3.0:
        # Phi(z) close to 1: log1p of the (small) upper tail.
        return math.log1p(-0.5 * math.erfc(z * _SQRT_HALF))
    return math.log(0.5 * math.erfc(-z * _SQRT_HALF))


def log_std_normal_sf(z: float) -> float:
    """ln(1 - Phi(z)) = ln Phi(-z)."""
    return log_std_normal_cdf(-z)


@dataclass(frozen=True)
class FellerBounds:
    lower: float
    upper: float


def feller_bounds(z: float) -> FellerBounds:
    """Bounds phi(z)/z * (1 - 1/z^2) <= Phi(-z) <= phi(z)/z for z > 0.

    The lower bound is clamped to 0 where it would be negative (z <= 1).
    """
    if not z > 0:
        raise ValueError(f"feller_bounds needs z > 0, got {z!r}")
    upper = math.exp(std_normal_logpdf(z)) / z
    lower = upper * (1.0 - 1.0 / (z * z)) if z > 1.0 else 0.0
    return FellerBounds(lower=lower, upper=upper)


def log_binomial_coefficient(n: int, k: int) -> Optional[float]:
    """ln C(n, k), or ``None`` when the coefficient is zero (k < 0 or k > n)."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if k < 0 or k > n:
        return None
    if k == 0 or k == n:
        return 0.0
    if n <= _EXACT_COMB_LIMIT:
        return math.log(math.comb(n, k))
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def log_sum(terms: Iterable[float]) -> float:
    """log(sum(exp(t))) with a max shift and exactly rounded accumulation.

    Terms are accumulated smallest first via ``math.fsum``.
    """
    values = list(terms)
    if not values:
        raise ValueError("log_sum needs at least one term")
    top = max(values)
    if top == -math.inf:
        return -math.inf
    if top == math.inf:
        return math.inf
    scaled = sorted(math.exp(t - top) for t in values)
    return top + math.log(math.fsum(scaled))


def log1mexp(x: float) -> float:
    """ln(1 - e^x) for x <= 0, switching branches at -ln 2 (Maechler 2012)."""
    if x > 0:
        raise ValueError("log1mexp needs x <= 0")
    if x == 0:
        return -math.inf
    if x > -math.log(2.0):
        return math.log(-math.expm1(x))
    return math.log1p(-math.exp(x))


def _log_gamma_prefactor(a: float, x: float) -> float:
    # ln(x^a e^-x / Gamma(a))
    return a * math.log(x) - x - math.lgamma(a)


def _log_gamma_series(a: float, x: float) -> float:
    # ln P(a, x) by the power series, good for x < a + 1.
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_GAMMA_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            return _log_gamma_prefactor(a, x) + math.log(total)
    raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _log_gamma_cfrac(a: float, x: float) -> float:
    # ln Q(a, x) by the Legendre continued fraction (modified Lentz), x >= a + 1.
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            return _log_gamma_prefactor(a, x) + math.log(h)
    raise ArithmeticError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def _check_gamma_args(a: float, x: float) -> None:
    if not a > 0:
        raise ValueError(f"a must be positive, got {a!r}")
    if not x >= 0:
        raise ValueError(f"x must be non-negative, got {x!r}")


def log_reg_gamma_upper(a: float, x: float) -> float:
    """ln Q(a, x), the upper regularized incomplete gamma function."""
    _check_gamma_args(a, x)
    if x == 0:
        return 0.0
    if x < a + 1.0:
        return log1mexp(_log_gamma_series(a, x))
    return _log_gamma_cfrac(a, x)


def log_reg_gamma_lower(a: float, x: float) -> float:
    """ln P(a, x) = ln(1 - Q(a, x))."""
    _check_gamma_args(a, x)
    if x == 0:
        return -math.inf
    if x < a + 1.0:
        return _log_gamma_series(a, x)
    return log1mexp(_log_gamma_cfrac(a, x))
