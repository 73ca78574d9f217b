"""Experiment engine: Table 1 of c_mu values and convergence-rate studies."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import approximations as approx
from .approximations import binomial_c_mu, estimate, on_sum_lattice
from .distributions import DistributionModel, lattice_of, parse_model
from .errors import InsufficientDataError, TailError, UnsupportedModelError
from .oracles import exact_tail, mc_tail

NOISE_FLOOR = 1e-12
MIN_FIT_ROWS = 5
DEFAULT_MC_SAMPLES = 10**7

TABLE1_MU = (0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9)
TABLE1_REFERENCE = (0.508, 0.512, 0.516, 0.520, 0.524, 0.528, 0.532)
TABLE1_BOUNDS = (0.5, 0.534)
FINE_GRID = tuple(round(0.505 + 0.005 * i, 3) for i in range(99))


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    log_exact: float
    log_approx: float
    ratio: float
    abs_ratio_error: float
    # Relative width of the Monte Carlo interval, when the exact value was sampled.
    mc_rel_width: Optional[float] = None


@dataclass
class ConvergenceReport:
    model_spec: str
    mu: float
    method: str
    rows: List[ConvergenceRow]
    fitted_slope: float = math.nan
    fitted_intercept: float = math.nan
    filtered_n: Tuple[int, ...] = ()
    failed_n: Tuple[int, ...] = ()


@dataclass
class Table1Report:
    rows: List[Tuple[float, float]]
    max_abs_dev_from_reference: float
    bound_holds: bool
    linear_rule_max_dev: float
    fine_grid: List[Tuple[float, float]] = field(default_factory=list)


_METHOD_ALIASES = {
    "sanov": approx.SANOV,
    "br": approx.BAHADUR_RAO,
    "bahadur_rao": approx.BAHADUR_RAO,
    "refined": approx.REFINED_GAUSSIAN,
    "refined_gaussian": approx.REFINED_GAUSSIAN,
}


def canonical_method(name: str) -> str:
    try:
        return _METHOD_ALIASES[name]
    except KeyError:
        raise ValueError(f"unknown method {name!r}; choose from {sorted(_METHOD_ALIASES)}") from None


def _mc_seed(seed: int, n: int) -> int:
    return int(np.random.SeedSequence([seed, n]).generate_state(1, np.uint64)[0])


def _exact_or_sampled(model, n, mu, seed, mc_samples):
    try:
        return exact_tail(model, n, mu), None
    except UnsupportedModelError:
        est = mc_tail(model, n, mu, mc_samples, _mc_seed(seed, n))
        if est.hits == 0:
            raise InsufficientDataError(f"no Monte Carlo hits at n={n}")
        return est.log_prob, (est.ci_high - est.ci_low) / est.point


def run_convergence(
    model_spec: Union[str, DistributionModel],
    mu: float,
    method: str,
    n_grid: Iterable[int],
    seed: int = 0,
    mc_samples: int = DEFAULT_MC_SAMPLES,
) -> ConvergenceReport:
    """Compare an estimator with the exact tail over a grid of sample sizes.

    On lattice models, n with n*mu off the sum lattice are dropped and listed
    in ``filtered_n``.  Rows whose oracle or estimator fails are dropped and
    listed in ``failed_n``; if every row fails the last error is raised.
    """
    model = parse_model(model_spec) if isinstance(model_spec, str) else model_spec
    method = canonical_method(method)
    grid = sorted(set(int(n) for n in n_grid))
    if not grid:
        raise ValueError("n_grid is empty")
    lat = lattice_of(model)
    kept = [n for n in grid if lat is None or on_sum_lattice(lat, n, mu)]
    filtered = tuple(n for n in grid if n not in set(kept))

    rows, failed, last_error = [], [], None
    for n in kept:
        try:
            log_exact, width = _exact_or_sampled(model, n, mu, seed, mc_samples)
            log_approx = estimate(model, mu, n, method).log_prob
        except TailError as exc:
            failed.append(n)
            last_error = exc
            continue
        diff = log_approx - log_exact
        rows.append(
            ConvergenceRow(
                n=n,
                log_exact=log_exact,
                log_approx=log_approx,
                ratio=math.exp(diff),
                abs_ratio_error=abs(math.expm1(diff)),
                mc_rel_width=width,
            )
        )
    if not rows:
        if last_error is not None:
            raise last_error
        raise InsufficientDataError(f"no n in the grid is lattice aligned for mu={mu!r}")

    report = ConvergenceReport(
        model_spec=model.to_spec(),
        mu=mu,
        method=method,
        rows=rows,
        filtered_n=filtered,
        failed_n=tuple(failed),
    )
    try:
        report.fitted_slope, report.fitted_intercept = fit_error_line(report.rows)
    except InsufficientDataError:
        pass
    return report


def fit_error_line(rows: Sequence[ConvergenceRow]) -> Tuple[float, float]:
    """OLS fit of ln|ratio - 1| on ln n; returns (slope, intercept).

    Rows under the noise floor are skipped, as are sampled rows whose
    interval is wider than half the error being measured.
    """
    usable = [
        r
        for r in rows
        if r.abs_ratio_error > NOISE_FLOOR
        and (r.mc_rel_width is None or r.mc_rel_width <= 0.5 * r.abs_ratio_error)
    ]
    if len(usable) < MIN_FIT_ROWS:
        raise InsufficientDataError(
            f"only {len(usable)} usable rows for the slope fit (need {MIN_FIT_ROWS})"
        )
    x = np.log([r.n for r in usable])
    y = np.log([r.abs_ratio_error for r in usable])
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def fit_error_slope(report: ConvergenceReport) -> float:
    return fit_error_line(report.rows)[0]


def reproduce_table1() -> Table1Report:
    rows = [(mu, binomial_c_mu(0.5, mu)) for mu in TABLE1_MU]
    fine = [(mu, binomial_c_mu(0.5, mu)) for mu in FINE_GRID]
    lo, hi = TABLE1_BOUNDS
    linear = [abs(c - (0.5 + (mu - 0.5) / 12.0)) for mu, c in fine if 0.6 <= mu <= 0.9]
    return Table1Report(
        rows=rows,
        max_abs_dev_from_reference=max(abs(c - t) for (_, c), t in zip(rows, TABLE1_REFERENCE)),
        bound_holds=all(lo < c < hi for _, c in fine),
        linear_rule_max_dev=max(linear),
        fine_grid=fine,
    )


def fmt(x: float) -> str:
    return f"{x:.17g}"


def _csv_table(report) -> Tuple[List[str], List[List[str]]]:
    if isinstance(report, Table1Report):
        return ["mu", "c_mu"], [[fmt(mu), fmt(c)] for mu, c in report.rows]
    if isinstance(report, ConvergenceReport):
        header = ["n", "log_exact", "log_approx", "ratio", "abs_ratio_error"]
        body = [
            [str(r.n), fmt(r.log_exact), fmt(r.log_approx), fmt(r.ratio), fmt(r.abs_ratio_error)]
            for r in report.rows
        ]
        return header, body
    raise TypeError(f"cannot write {type(report).__name__} as CSV")


def render_csv(report) -> str:
    header, body = _csv_table(report)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(body)
    return buf.getvalue()


def emit_csv(report, destination) -> None:
    """Write the report as CSV to a path or an open text stream."""
    text = render_csv(report)
    if hasattr(destination, "write"):
        destination.write(text)
        return
    try:
        with open(os.fspath(destination), "w", newline="", encoding="ascii") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {os.fspath(destination)!r}: {exc.strerror}") from exc
