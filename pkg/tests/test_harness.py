import math

import numpy as np
import pytest

from tailrefine.approximations import constant_sensitivity, refined_gaussian_log
from tailrefine.distributions import Bernoulli
from tailrefine.errors import InsufficientDataError, RangeError
from tailrefine.harness import (
    TABLE1_MU,
    ConvergenceReport,
    ConvergenceRow,
    emit_csv,
    fit_error_slope,
    render_csv,
    reproduce_table1,
    run_convergence,
)
from tailrefine.oracles import binomial_tail
from tailrefine.tilting import solve_tilt


def synthetic(errors, ns):
    rows = [ConvergenceRow(n, -1.0, -1.0 + math.log1p(e), 1 + e, e) for n, e in zip(ns, errors)]
    return ConvergenceReport("bernoulli:p=0.5", 0.7, "refined_gaussian", rows)


class TestFit:
    def test_inverse_n(self):
        ns = list(range(10, 200, 10))
        assert fit_error_slope(synthetic([3.0 / n for n in ns], ns)) == pytest.approx(-1.0, abs=1e-12)

    def test_inverse_sqrt_n(self):
        ns = list(range(10, 200, 10))
        assert fit_error_slope(synthetic([0.7 / math.sqrt(n) for n in ns], ns)) == pytest.approx(-0.5, abs=1e-12)

    def test_noise_floor_and_minimum_rows(self):
        ns = list(range(1, 11))
        errs = [1e-13] * 6 + [1.0 / n for n in ns[6:]]
        with pytest.raises(InsufficientDataError):
            fit_error_slope(synthetic(errs, ns))

    def test_noisy_sampled_rows_are_refused(self):
        rows = [ConvergenceRow(n, -1.0, -1.0, 1.01, 0.01, mc_rel_width=0.1) for n in range(10, 100, 10)]
        with pytest.raises(InsufficientDataError):
            fit_error_slope(ConvergenceReport("x", 0.7, "sanov", rows))


class TestConvergence:
    def test_lattice_filter_is_recorded(self):
        report = run_convergence("bernoulli:p=0.5", 0.7, "br", range(10, 41))
        assert [r.n for r in report.rows] == [10, 20, 30, 40]
        assert len(report.filtered_n) == 27
        assert report.method == "bahadur_rao"

    def test_rows_ascending_and_consistent(self):
        report = run_convergence("exponential:rate=1", 2.0, "refined", [50, 5, 20, 10, 30, 40])
        ns = [r.n for r in report.rows]
        assert ns == sorted(ns)
        for r in report.rows:
            assert r.ratio == pytest.approx(math.exp(r.log_approx - r.log_exact), rel=1e-14)
            assert r.abs_ratio_error == pytest.approx(abs(r.ratio - 1), rel=1e-9, abs=1e-15)
        assert -1.3 <= report.fitted_slope <= -0.7

    def test_failed_rows_are_dropped(self):
        # n = 5 rounds mu up to 0.8, where the shift leaves the mean range
        report = run_convergence("bernoulli:p=0.5", 0.6, "refined", [5, 20, 40, 60, 80, 100, 120])
        assert 5 not in [r.n for r in report.rows]
        assert report.failed_n == (5,)

    def test_all_rows_failing_raises(self):
        with pytest.raises(RangeError):
            run_convergence("bernoulli:p=0.5", 0.3, "refined", [10, 20])

    def test_monte_carlo_fallback(self):
        spec = "pmf:support=0,1,3.141592653589793;probs=0.5,0.3,0.2"
        report = run_convergence(spec, 1.2, "bahadur_rao", [5, 10, 15, 20, 25], mc_samples=20000)
        assert len(report.rows) == 5
        assert all(0 < r.mc_rel_width < 0.1 for r in report.rows)
        assert all(r.abs_ratio_error > 0.5 for r in report.rows)
        assert math.isfinite(report.fitted_slope)

    def test_unresolved_sampling_noise_gives_no_slope(self):
        spec = "pmf:support=0,1,3.141592653589793;probs=0.5,0.3,0.2"
        report = run_convergence(spec, 1.2, "refined", [50, 60, 70, 80, 90], mc_samples=5000)
        assert math.isnan(report.fitted_slope)

    def test_pmf_exact_convolution_route(self):
        report = run_convergence("pmf:support=0,1,2;probs=0.5,0.3,0.2", 1.2, "refined", range(10, 101, 10))
        assert all(r.mc_rel_width is None for r in report.rows)
        assert -1.3 <= report.fitted_slope <= -0.7


class TestProperties:
    def test_sanov_consistency(self):
        d = solve_tilt(Bernoulli(0.5), 0.7).divergence
        assert -binomial_tail(2000, 0.5, 0.7) / 2000 == pytest.approx(d, rel=0.10)

    def test_refined_dominates_bahadur_rao(self):
        grid = range(50, 2001, 10)
        br = run_convergence("bernoulli:p=0.5", 0.7, "br", grid)
        rg = run_convergence("bernoulli:p=0.5", 0.7, "refined", grid)
        wins = [a.abs_ratio_error < b.abs_ratio_error for a, b in zip(rg.rows, br.rows)]
        assert np.mean(wins) >= 0.9

    def test_constant_sensitivity_demonstration(self):
        b = Bernoulli(0.5)
        exact = binomial_tail(2000, 0.5, 0.7)
        uncorrected = refined_gaussian_log(b, 0.7, 2000, c=0.0).log_prob
        expected = constant_sensitivity(b, solve_tilt(b, 0.7), 0.0)
        assert math.exp(exact - uncorrected) == pytest.approx(expected, rel=0.05)


class TestTable1:
    def test_rows(self):
        report = reproduce_table1()
        assert [mu for mu, _ in report.rows] == list(TABLE1_MU)
        assert round(report.rows[0][1], 3) == 0.508
        assert round(report.rows[-1][1], 3) == 0.532
        assert report.bound_holds
        assert report.linear_rule_max_dev <= 2e-3


class TestCsv:
    def test_empty(self):
        report = ConvergenceReport("bernoulli:p=0.5", 0.7, "sanov", [])
        assert render_csv(report) == "n,log_exact,log_approx,ratio,abs_ratio_error\n"

    def test_table1(self):
        lines = render_csv(reproduce_table1()).splitlines()
        assert lines[0] == "mu,c_mu"
        assert len(lines) == 8
        mu, c = lines[3].split(",")
        assert float(mu) == 0.7
        assert len(c.lstrip("0.").rstrip()) >= 15

    def test_seventeen_digits_round_trip(self):
        report = run_convergence("bernoulli:p=0.5", 0.7, "refined", [10, 20])
        lines = render_csv(report).splitlines()
        fields = lines[1].split(",")
        assert fields[0] == "10"
        assert float(fields[2]) == report.rows[0].log_approx
        assert "\r" not in render_csv(report)

    def test_file_output_is_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_csv(run_convergence("exponential:rate=1", 2.0, "br", range(5, 60, 5)), a)
        emit_csv(run_convergence("exponential:rate=1", 2.0, "br", range(5, 60, 5)), b)
        assert a.read_bytes() == b.read_bytes()

    def test_io_error_names_destination(self, tmp_path):
        dest = tmp_path / "missing" / "out.csv"
        with pytest.raises(OSError, match="out.csv"):
            emit_csv(reproduce_table1(), dest)
