"""Ground truth for tail probabilities of sample means.

Exact routes exist for every catalogue family (binomial, gamma, Gaussian and
Poisson sums) and for lattice ``FinitePMF`` laws of moderate size (log-domain
convolution).  Everything else goes through a seeded Monte Carlo estimate.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .distributions import (
    Bernoulli,
    DistributionModel,
    Exponential,
    FinitePMF,
    Gaussian,
    Poisson,
    lattice_of,
)
from .errors import UnsupportedModelError
from .numerics import (
    log_binomial_coefficient,
    log_reg_gamma_lower,
    log_reg_gamma_upper,
    log_std_normal_cdf,
    log_sum,
)

LATTICE_TOL = 1e-9
CONVOLUTION_LIMIT = 10**6
Z95 = NormalDist().inv_cdf(0.975)
# Total draws per Monte Carlo chunk.  Chunks, not workers, own the random
# substreams, so results do not depend on the thread count.
_CHUNK_DRAWS = 1 << 21


def _first_index(n: int, mu: float) -> int:
    return math.ceil(n * mu - LATTICE_TOL)


def binomial_tail(n: int, p: float, mu: float) -> float:
    """ln P{Bin(n, p) >= n*mu}, summed term by term in log domain."""
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    k0 = _first_index(n, mu)
    if k0 <= 0:
        return 0.0
    if k0 > n:
        return -math.inf
    lp, lq = math.log(p), math.log1p(-p)
    terms = [log_binomial_coefficient(n, k) + k * lp + (n - k) * lq for k in range(k0, n + 1)]
    return log_sum(terms)


def gamma_tail(n: int, rate: float, mu: float) -> float:
    """ln P{mean of n Exponential(rate) >= mu} = ln Q(n, rate*n*mu)."""
    if not rate > 0:
        raise ValueError(f"rate must be positive, got {rate!r}")
    if mu <= 0:
        return 0.0
    return log_reg_gamma_upper(n, rate * n * mu)


def gaussian_tail(n: int, m: float, variance: float, mu: float) -> float:
    if not variance > 0:
        raise ValueError(f"variance must be positive, got {variance!r}")
    return log_std_normal_cdf(-math.sqrt(n) * (mu - m) / math.sqrt(variance))


def poisson_sum_tail(n: int, lam: float, mu: float) -> float:
    """ln P{Poisson(n*lam) >= ceil(n*mu)} via the lower incomplete gamma."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    k0 = _first_index(n, mu)
    if k0 <= 0:
        return 0.0
    return log_reg_gamma_lower(k0, n * lam)


def pmf_sum_tail(model: FinitePMF, n: int, mu: float) -> float:
    """Exact tail of a lattice FinitePMF sample mean by n-fold log convolution."""
    lat = lattice_of(model)
    if lat is None:
        raise UnsupportedModelError(f"{model.to_spec()} is not lattice valued")
    idx = np.rint((np.array(model.support) - lat.offset) / lat.span).astype(np.int64)
    width = int(idx[-1])
    if n * (width + 1) > CONVOLUTION_LIMIT:
        raise UnsupportedModelError(
            f"convolution size {n * (width + 1)} exceeds {CONVOLUTION_LIMIT}; use Monte Carlo"
        )
    logp = np.log(np.array(model.probabilities))
    dist = np.full(width + 1, -np.inf)
    dist[idx] = logp
    for _ in range(n - 1):
        out = np.full(dist.size + width, -np.inf)
        for i, lq in zip(idx, logp):
            seg = out[i : i + dist.size]
            np.logaddexp(seg, dist + lq, out=seg)
        dist = out
    # sum index j corresponds to the value j*span + n*offset
    k0 = math.ceil((n * mu - n * lat.offset) / lat.span - LATTICE_TOL)
    if k0 <= 0:
        return 0.0
    if k0 >= dist.size:
        return -math.inf
    return float(min(logsumexp(dist[k0:]), 0.0))


def exact_tail(model: DistributionModel, n: int, mu: float) -> float:
    """Route to the exact oracle for the model's family."""
    if isinstance(model, Bernoulli):
        return binomial_tail(n, model.p, mu)
    if isinstance(model, Exponential):
        return gamma_tail(n, model.rate, mu)
    if isinstance(model, Gaussian):
        return gaussian_tail(n, model.mean, model.variance, mu)
    if isinstance(model, Poisson):
        return poisson_sum_tail(n, model.lam, mu)
    if isinstance(model, FinitePMF):
        return pmf_sum_tail(model, n, mu)
    raise UnsupportedModelError(f"no exact oracle for {type(model).__name__}")


@dataclass(frozen=True)
class MCEstimate:
    point: float
    ci_low: float
    ci_high: float
    samples: int
    seed: int
    hits: int = 0

    @property
    def log_prob(self) -> float:
        return math.log(self.point) if self.point > 0 else -math.inf


def wilson_interval(hits: int, samples: int, z: float = Z95):
    """Wilson score interval for a binomial proportion."""
    phat = hits / samples
    denom = 1.0 + z * z / samples
    center = (phat + z * z / (2 * samples)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / samples + z * z / (4 * samples * samples)) / denom
    low = 0.0 if hits == 0 else max(0.0, center - half)
    high = 1.0 if hits == samples else min(1.0, center + half)
    return low, high


def mc_tail(
    model: DistributionModel,
    n: int,
    mu: float,
    samples: int,
    seed: int,
    workers: Optional[int] = None,
) -> MCEstimate:
    """Monte Carlo frequency of {sample mean >= mu} with a 95% Wilson interval.

    The output is a function of (model, n, mu, samples, seed) only.
    """
    if samples < 1000:
        raise ValueError(f"need at least 1000 samples, got {samples}")
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    per_chunk = max(1, _CHUNK_DRAWS // n)
    sizes = [per_chunk] * (samples // per_chunk)
    if samples % per_chunk:
        sizes.append(samples % per_chunk)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    lattice = lattice_of(model)
    threshold = n * mu
    if lattice is not None:
        threshold -= LATTICE_TOL * max(1.0, abs(threshold))

    def run(task):
        size, stream = task
        rng = np.random.Generator(np.random.PCG64(stream))
        sums = model.sample(rng, (size, n)).sum(axis=1)
        return int(np.count_nonzero(sums >= threshold))

    tasks = list(zip(sizes, streams))
    if workers == 1 or len(tasks) == 1:
        hits = sum(map(run, tasks))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(run, tasks))
    low, high = wilson_interval(hits, samples)
    point = hits / samples
    return MCEstimate(
        point=point,
        ci_low=min(low, point),
        ci_high=max(high, point),
        samples=samples,
        seed=seed,
        hits=hits,
    )
