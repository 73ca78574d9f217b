"""Base laws and their exponential families.

Each model exposes the cumulant generating function ``ln Z(beta)`` and its
first two derivatives (tilted mean and variance) on the open natural
parameter domain.  ``FinitePMF`` is the generic path; the four named families
have closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError, ModelSpecError

LATTICE_TOL = 1e-9
# Reject "lattices" whose index range is this large: floats are all rational,
# so rational reduction of a continuous-looking support always finds some grid.
_MAX_LATTICE_INDEX = 10**7
_MAX_DENOMINATOR = 10**9


@dataclass(frozen=True)
class LatticeInfo:
    span: float
    offset: float


@dataclass(frozen=True)
class MeanRange:
    infimum: float
    base_mean: float
    supremum: float

    def contains(self, mu: float) -> bool:
        return self.infimum < mu < self.supremum


def _expit(t: float) -> float:
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def _log1pexp(t: float) -> float:
    if t > 0:
        return t + math.log1p(math.exp(-t))
    return math.log1p(math.exp(t))


@dataclass(frozen=True)
class Bernoulli:
    p: float

    def __post_init__(self):
        _require(0.0 < self.p < 1.0, "p", self.p, "must lie in (0, 1)")

    natural_domain = (-math.inf, math.inf)

    @property
    def base_mean(self) -> float:
        return self.p

    @property
    def logit_p(self) -> float:
        return math.log(self.p) - math.log1p(-self.p)

    def log_partition(self, beta):
        # ln(1 - p + p e^beta) = ln(1-p) + ln(1 + e^(beta + logit p))
        return math.log1p(-self.p) + _log1pexp(beta + self.logit_p)

    def tilted_mean(self, beta):
        return _expit(beta + self.logit_p)

    def tilted_variance(self, beta):
        t = beta + self.logit_p
        return _expit(t) * _expit(-t)

    def mean_range(self) -> MeanRange:
        return MeanRange(0.0, self.p, 1.0)

    def lattice(self) -> Optional[LatticeInfo]:
        return LatticeInfo(1.0, 0.0)

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        return (rng.random(shape) < self.p).astype(np.float64)

    def to_spec(self) -> str:
        return f"bernoulli:p={self.p!r}"


@dataclass(frozen=True)
class Poisson:
    lam: float

    def __post_init__(self):
        _require(self.lam > 0 and math.isfinite(self.lam), "lambda", self.lam, "must be positive")

    natural_domain = (-math.inf, math.inf)

    @property
    def base_mean(self) -> float:
        return self.lam

    def log_partition(self, beta):
        return self.lam * math.expm1(beta)

    def tilted_mean(self, beta):
        return self.lam * math.exp(beta)

    def tilted_variance(self, beta):
        return self.lam * math.exp(beta)

    def mean_range(self) -> MeanRange:
        return MeanRange(0.0, self.lam, math.inf)

    def lattice(self) -> Optional[LatticeInfo]:
        return LatticeInfo(1.0, 0.0)

    def sample(self, rng, shape):
        return rng.poisson(self.lam, shape).astype(np.float64)

    def to_spec(self) -> str:
        return f"poisson:lambda={self.lam!r}"


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        _require(self.rate > 0 and math.isfinite(self.rate), "rate", self.rate, "must be positive")

    @property
    def natural_domain(self) -> Tuple[float, float]:
        return (-math.inf, self.rate)

    @property
    def base_mean(self) -> float:
        return 1.0 / self.rate

    def log_partition(self, beta):
        return -math.log1p(-beta / self.rate)

    def tilted_mean(self, beta):
        return 1.0 / (self.rate - beta)

    def tilted_variance(self, beta):
        return 1.0 / (self.rate - beta) ** 2

    def mean_range(self) -> MeanRange:
        return MeanRange(0.0, 1.0 / self.rate, math.inf)

    def lattice(self) -> Optional[LatticeInfo]:
        return None

    def sample(self, rng, shape):
        return rng.exponential(1.0 / self.rate, shape)

    def to_spec(self) -> str:
        return f"exponential:rate={self.rate!r}"


@dataclass(frozen=True)
class Gaussian:
    mean: float
    variance: float

    def __post_init__(self):
        _require(math.isfinite(self.mean), "mean", self.mean, "must be finite")
        _require(
            self.variance > 0 and math.isfinite(self.variance), "var", self.variance, "must be positive"
        )

    natural_domain = (-math.inf, math.inf)

    @property
    def base_mean(self) -> float:
        return self.mean

    def log_partition(self, beta):
        return self.mean * beta + 0.5 * self.variance * beta * beta

    def tilted_mean(self, beta):
        return self.mean + self.variance * beta

    def tilted_variance(self, beta):
        return self.variance

    def mean_range(self) -> MeanRange:
        return MeanRange(-math.inf, self.mean, math.inf)

    def lattice(self) -> Optional[LatticeInfo]:
        return None

    def sample(self, rng, shape):
        return rng.normal(self.mean, math.sqrt(self.variance), shape)

    def to_spec(self) -> str:
        return f"gaussian:mean={self.mean!r},var={self.variance!r}"


@dataclass(frozen=True)
class FinitePMF:
    """A law on finitely many points, given as ascending support and masses."""

    support: Tuple[float, ...]
    probabilities: Tuple[float, ...]
    _x: np.ndarray = field(init=False, repr=False, compare=False)
    _logp: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        support = tuple(float(x) for x in self.support)
        probs = tuple(float(q) for q in self.probabilities)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probabilities", probs)
        if len(support) != len(probs):
            raise ModelSpecError(
                f"probs: length {len(probs)} does not match support length {len(support)}"
            )
        if len(support) < 2:
            raise ModelSpecError("support: need at least two points")
        if not all(math.isfinite(x) for x in support):
            raise ModelSpecError("support: values must be finite")
        if any(b <= a for a, b in zip(support, support[1:])):
            raise ModelSpecError("support: values must be strictly increasing")
        if any(not (q > 0) for q in probs):
            raise ModelSpecError("probs: every probability must be positive")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ModelSpecError(f"probs: sum to {math.fsum(probs)!r}, not 1")
        object.__setattr__(self, "_x", np.array(support))
        object.__setattr__(self, "_logp", np.log(np.array(probs)))

    natural_domain = (-math.inf, math.inf)

    @property
    def base_mean(self) -> float:
        return math.fsum(x * q for x, q in zip(self.support, self.probabilities))

    def _weights(self, beta):
        a = beta * self._x + self._logp
        top = a.max()
        w = np.exp(a - top)
        s = w.sum()
        return w / s, top + math.log(s)

    def log_partition(self, beta):
        return float(self._weights(beta)[1])

    def tilted_mean(self, beta):
        w, _ = self._weights(beta)
        return float(np.dot(w, self._x))

    def tilted_variance(self, beta):
        w, _ = self._weights(beta)
        m = np.dot(w, self._x)
        return float(np.dot(w, (self._x - m) ** 2))

    def mean_range(self) -> MeanRange:
        return MeanRange(self.support[0], self.base_mean, self.support[-1])

    def lattice(self) -> Optional[LatticeInfo]:
        return _detect_lattice(self.support)

    def sample(self, rng, shape):
        return rng.choice(self._x, size=shape, p=np.array(self.probabilities))

    def to_spec(self) -> str:
        sup = ",".join(repr(x) for x in self.support)
        prb = ",".join(repr(q) for q in self.probabilities)
        return f"pmf:support={sup};probs={prb}"


DistributionModel = Union[Bernoulli, Poisson, Exponential, Gaussian, FinitePMF]


def _require(ok: bool, key: str, value, why: str) -> None:
    if not ok:
        raise ModelSpecError(f"{key}={value!r} {why}")


def _detect_lattice(support: Sequence[float]) -> Optional[LatticeInfo]:
    x0 = support[0]
    fracs = [Fraction(x - x0).limit_denominator(_MAX_DENOMINATOR) for x in support[1:]]
    den = 1
    for f in fracs:
        den = den * f.denominator // math.gcd(den, f.denominator)
    num = 0
    for f in fracs:
        num = math.gcd(num, f.numerator * (den // f.denominator))
    span = Fraction(num, den)
    if (support[-1] - x0) / float(span) > _MAX_LATTICE_INDEX:
        return None
    span_f = float(span)
    for x in support:
        k = (x - x0) / span_f
        if abs(k - round(k)) > LATTICE_TOL:
            return None
    return LatticeInfo(span=span_f, offset=x0)


def _check_domain(model: DistributionModel, beta: float) -> None:
    lo, hi = model.natural_domain
    if not (lo < beta < hi) or math.isnan(beta):
        raise DomainError(
            f"beta={beta!r} outside natural parameter domain ({lo}, {hi}) of {model.to_spec()}"
        )


def log_partition(model: DistributionModel, beta: float) -> float:
    """ln Z(beta) = ln E[exp(beta X)]."""
    _check_domain(model, beta)
    return model.log_partition(beta)


def tilted_mean(model: DistributionModel, beta: float) -> float:
    """Mean of the tilted law P_beta, i.e. Z'(beta)/Z(beta)."""
    _check_domain(model, beta)
    return model.tilted_mean(beta)


def tilted_variance(model: DistributionModel, beta: float) -> float:
    _check_domain(model, beta)
    return model.tilted_variance(beta)


def mean_range(model: DistributionModel) -> MeanRange:
    return model.mean_range()


def lattice_of(model: DistributionModel) -> Optional[LatticeInfo]:
    """Maximal span and an offset of the lattice carrying the model, if any."""
    return model.lattice()


# --- model spec grammar -----------------------------------------------------

_FAMILY_KEYS = {
    "bernoulli": ("p",),
    "poisson": ("lambda",),
    "exponential": ("rate",),
    "gaussian": ("mean", "var"),
    "pmf": ("support", "probs"),
}


def _parse_float(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ModelSpecError(f"{key}: cannot parse {text!r} as a number") from None


def parse_model(spec: str) -> DistributionModel:
    """Parse ``family:key=value,...`` (``pmf`` uses ``;`` between keys)."""
    kind, sep, rest = spec.strip().partition(":")
    kind = kind.strip().lower()
    if kind not in _FAMILY_KEYS:
        raise ModelSpecError(f"unknown model family {kind!r} in {spec!r}")
    if not sep:
        raise ModelSpecError(f"{kind}: missing ':' and parameters")
    items = rest.split(";") if kind == "pmf" else rest.split(",")
    params = {}
    for item in items:
        item = item.strip()
        if not item:
            continue
        key, eq, value = item.partition("=")
        key = key.strip()
        if not eq:
            raise ModelSpecError(f"{key}: expected key=value")
        if key not in _FAMILY_KEYS[kind]:
            raise ModelSpecError(f"{key}: not a parameter of {kind}")
        if key in params:
            raise ModelSpecError(f"{key}: given twice")
        params[key] = value.strip()
    for key in _FAMILY_KEYS[kind]:
        if key not in params:
            raise ModelSpecError(f"{key}: missing for {kind}")

    if kind == "pmf":
        support = [_parse_float("support", v) for v in params["support"].split(",")]
        probs = [_parse_float("probs", v) for v in params["probs"].split(",")]
        return FinitePMF(tuple(support), tuple(probs))
    values = {k: _parse_float(k, v) for k, v in params.items()}
    if kind == "bernoulli":
        return Bernoulli(values["p"])
    if kind == "poisson":
        return Poisson(values["lambda"])
    if kind == "exponential":
        return Exponential(values["rate"])
    return Gaussian(values["mean"], values["var"])
