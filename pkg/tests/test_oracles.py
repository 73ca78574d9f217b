import itertools
import math
from fractions import Fraction

import mpmath as mp
import pytest

from tailrefine.distributions import Bernoulli, Exponential, FinitePMF, Gaussian, Poisson
from tailrefine.errors import UnsupportedModelError
from tailrefine.oracles import (
    binomial_tail,
    exact_tail,
    gamma_tail,
    gaussian_tail,
    mc_tail,
    pmf_sum_tail,
    poisson_sum_tail,
    wilson_interval,
)

mp.mp.dps = 40


def exact_binomial_tail(n, p, k0):
    p = Fraction(p)
    return sum(math.comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(k0, n + 1))


def rel_close(log_value, exact_fraction, rel):
    exact = mp.mpf(exact_fraction.numerator) / exact_fraction.denominator
    return abs(mp.exp(log_value) / exact - 1) <= rel


class TestBinomial:
    def test_ten(self):
        assert binomial_tail(10, 0.5, 0.7) == pytest.approx(math.log(176 / 1024), rel=1e-14)

    def test_whole_support(self):
        assert binomial_tail(10, 0.5, 0.0) == 0.0
        assert binomial_tail(10, 0.5, -1.0) == 0.0
        assert binomial_tail(10, 0.5, 1.01) == -math.inf

    def test_hundred(self):
        exact = exact_binomial_tail(100, 0.5, 70)
        assert rel_close(binomial_tail(100, 0.5, 0.7), exact, 1e-13)
        assert float(exact) == pytest.approx(3.9251e-5, rel=1e-4)

    @pytest.mark.parametrize("p", [0.5, 0.1, 0.37, 0.9])
    def test_small_n_exact_rational(self, p):
        for n in range(1, 31):
            for k0 in range(1, n + 1):
                exact = exact_binomial_tail(n, p, k0)
                assert rel_close(binomial_tail(n, p, k0 / n), exact, 1e-13), (n, k0)

    def test_large_n_against_big_integers(self):
        exact = exact_binomial_tail(2000, 0.5, 1400)
        assert rel_close(binomial_tail(2000, 0.5, 0.7), exact, 1e-11)

    def test_monotone(self):
        vals = [binomial_tail(50, 0.3, mu) for mu in (0.31, 0.4, 0.5, 0.6, 0.8)]
        assert vals == sorted(vals, reverse=True)
        vals = [binomial_tail(n, 0.3, 0.5) for n in range(10, 200, 10)]
        assert vals == sorted(vals, reverse=True)


class TestGamma:
    def test_single(self):
        assert gamma_tail(1, 1.0, 2.0) == pytest.approx(-2.0, rel=1e-14)

    def test_non_positive_threshold(self):
        assert gamma_tail(7, 1.0, 0.0) == 0.0

    def test_ten(self):
        assert math.exp(gamma_tail(10, 1.0, 2.0)) == pytest.approx(4.9953e-3, rel=1e-4)

    @pytest.mark.parametrize("n", range(1, 31))
    def test_poisson_identity(self, n):
        for mu in (0.3, 1.0, 1.7, 3.0):
            x = mp.mpf(n * mu)
            ref = mp.log(mp.exp(-x) * mp.fsum(x**k / mp.factorial(k) for k in range(n)))
            assert gamma_tail(n, 1.0, mu) == pytest.approx(float(ref), rel=1e-11)

    def test_rate_scaling(self):
        assert gamma_tail(5, 2.0, 1.0) == pytest.approx(gamma_tail(5, 1.0, 2.0), rel=1e-14)

    def test_monotone(self):
        vals = [gamma_tail(20, 1.0, mu) for mu in (1.1, 1.5, 2.0, 3.0)]
        assert vals == sorted(vals, reverse=True)
        vals = [gamma_tail(n, 1.0, 1.5) for n in range(2, 100, 7)]
        assert vals == sorted(vals, reverse=True)


class TestGaussian:
    def test_median(self):
        assert gaussian_tail(9, 1.5, 2.0, 1.5) == pytest.approx(math.log(0.5), rel=1e-15)

    def test_examples(self):
        assert math.exp(gaussian_tail(4, 0.0, 1.0, 1.0)) == pytest.approx(float(mp.ncdf(-2)), rel=1e-13)
        assert math.exp(gaussian_tail(4, 0.0, 1.0, 1.0)) == pytest.approx(0.0227501, abs=1e-7)
        assert math.exp(gaussian_tail(1, 0.0, 1.0, 1.0)) == pytest.approx(0.1586553, abs=1e-7)


class TestPoisson:
    def test_trivial(self):
        assert poisson_sum_tail(5, 2.0, 0.0) == 0.0

    def test_ten(self):
        ref = 1 - mp.fsum(mp.exp(-10) * mp.mpf(10) ** k / mp.factorial(k) for k in range(20))
        assert poisson_sum_tail(10, 1.0, 2.0) == pytest.approx(float(mp.log(ref)), rel=1e-12)
        assert math.exp(poisson_sum_tail(10, 1.0, 2.0)) == pytest.approx(3.45e-3, rel=2e-3)

    def test_one(self):
        assert poisson_sum_tail(1, 1.0, 1.0) == pytest.approx(math.log(1 - math.exp(-1)), rel=1e-14)

    def test_rounds_threshold_up(self):
        assert poisson_sum_tail(4, 1.0, 1.1) == poisson_sum_tail(4, 1.0, 1.25)


class TestPmfConvolution:
    def test_matches_binomial(self):
        m = FinitePMF((0.0, 1.0), (0.7, 0.3))
        for n in (1, 5, 40, 300):
            for mu in (0.35, 0.5, 0.9):
                assert pmf_sum_tail(m, n, mu) == pytest.approx(binomial_tail(n, 0.3, mu), rel=1e-11)

    def test_brute_force_enumeration(self):
        support, probs = (-1.0, 0.5, 2.0), (0.5, 0.3, 0.2)
        m = FinitePMF(support, probs)
        n = 6
        for mu in (-0.2, 0.3, 0.75, 1.5):
            total = Fraction(0)
            for combo in itertools.product(range(3), repeat=n):
                if sum(support[i] for i in combo) >= n * mu - 1e-9:
                    term = Fraction(1)
                    for i in combo:
                        term *= Fraction(probs[i])
                    total += term
            assert rel_close(pmf_sum_tail(m, n, mu), total, 1e-12)

    def test_size_limit(self):
        m = FinitePMF((0.0, 0.001, 1.0), (0.3, 0.3, 0.4))
        with pytest.raises(UnsupportedModelError):
            pmf_sum_tail(m, 2000, 0.8)

    def test_non_lattice(self):
        with pytest.raises(UnsupportedModelError):
            pmf_sum_tail(FinitePMF((0.0, 1.0, math.pi), (0.3, 0.3, 0.4)), 5, 1.0)


def test_exact_tail_routing():
    assert exact_tail(Bernoulli(0.5), 10, 0.7) == binomial_tail(10, 0.5, 0.7)
    assert exact_tail(Exponential(1.0), 10, 2.0) == gamma_tail(10, 1.0, 2.0)
    assert exact_tail(Gaussian(0.0, 1.0), 4, 1.0) == gaussian_tail(4, 0.0, 1.0, 1.0)
    assert exact_tail(Poisson(1.0), 10, 2.0) == poisson_sum_tail(10, 1.0, 2.0)


class TestMonteCarlo:
    def test_deterministic(self):
        a = mc_tail(Bernoulli(0.5), 10, 0.7, 20000, seed=3)
        b = mc_tail(Bernoulli(0.5), 10, 0.7, 20000, seed=3)
        assert a == b
        assert mc_tail(Bernoulli(0.5), 10, 0.7, 20000, seed=4) != a

    def test_thread_count_does_not_matter(self):
        m = Exponential(1.0)
        runs = [mc_tail(m, 50, 1.2, 400_000, seed=11, workers=w) for w in (1, 2, 8)]
        assert runs[0] == runs[1] == runs[2]

    def test_bernoulli(self):
        est = mc_tail(Bernoulli(0.5), 10, 0.7, 10**6, seed=42)
        assert est.point == pytest.approx(0.1719, abs=2e-3)
        assert est.ci_low <= 0.171875 <= est.ci_high
        assert est.samples == 10**6 and est.seed == 42

    def test_exponential(self):
        est = mc_tail(Exponential(1.0), 10, 2.0, 10**6, seed=7)
        assert est.ci_low <= math.exp(gamma_tail(10, 1.0, 2.0)) <= est.ci_high

    def test_lattice_threshold_is_inclusive(self):
        # mean >= 0.7 must count sums equal to 7
        est = mc_tail(FinitePMF((0.0, 1.0), (0.5, 0.5)), 10, 0.7, 200_000, seed=1)
        assert est.ci_low <= 0.171875 <= est.ci_high

    def test_needs_samples(self):
        with pytest.raises(ValueError):
            mc_tail(Bernoulli(0.5), 10, 0.7, 999, seed=1)


class TestWilson:
    def test_zero_hits(self):
        lo, hi = wilson_interval(0, 1000)
        assert lo == 0.0
        assert 0 < hi < 0.005

    def test_contains_point(self):
        lo, hi = wilson_interval(171875, 10**6)
        assert lo < 0.171875 < hi
        assert hi - lo == pytest.approx(2 * 1.959964 * math.sqrt(0.171875 * 0.828125 / 1e6), rel=1e-3)
