"""Refined large-deviation tail probabilities for sums of i.i.d. variables."""

from .approximations import (
    ApproxResult,
    TailQuery,
    bahadur_rao_log,
    beta_factor,
    binomial_c_mu,
    c_mu,
    constant_sensitivity,
    estimate,
    refined_gaussian_log,
    round_up_to_grid,
    sanov_log,
)
from .distributions import (
    Bernoulli,
    Exponential,
    FinitePMF,
    Gaussian,
    LatticeInfo,
    MeanRange,
    Poisson,
    lattice_of,
    log_partition,
    mean_range,
    parse_model,
    tilted_mean,
    tilted_variance,
)
from .errors import TailError
from .oracles import MCEstimate, exact_tail, mc_tail
from .tilting import TiltedSummary, divergence_derivative, solve_tilt

__version__ = "0.1.0"
