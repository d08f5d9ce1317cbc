"""Tests for the deformed exponential/logarithm pair and the survival model."""

import math

import numpy as np
import pytest

from kappa_income import (
    DomainError,
    ModelParams,
    kappa_exp,
    kappa_log,
    power_law_coefficient,
    quantile,
    survival_modified,
    survival_standard,
    threshold_xm,
)
from kappa_income.rng import SplitMix64


def random_params(gen):
    """Draw a plausible parameter vector; beta set so the median is ~3e4."""
    delta = 1.05 + 0.4 * gen.next_uniform()
    kappa = 0.55 + 0.4 * gen.next_uniform()
    alpha = 1.5 + 0.6 * gen.next_uniform()
    x50 = 20000.0 + 30000.0 * gen.next_uniform()
    beta = -kappa_log(0.5 / delta, kappa) / x50 ** alpha
    return ModelParams(delta=delta, kappa=kappa, alpha=alpha, beta=beta)


class TestDeformedPair:
    def test_exp_alternative_form(self):
        """exp_k(x) equals exp(asinh(k*x)/k), an independent closed form."""
        gen = SplitMix64(11)
        for _ in range(200):
            x = 20.0 * (gen.next_uniform() - 0.5)
            k = 0.05 + 0.9 * gen.next_uniform()
            expected = math.exp(math.asinh(k * x) / k)
            assert abs(kappa_exp(x, k) - expected) <= 1e-12 * expected

    def test_log_explicit_form(self):
        """log_k(x) equals (x^k - x^-k) / (2k)."""
        gen = SplitMix64(12)
        for _ in range(200):
            x = 10.0 ** (4.0 * (gen.next_uniform() - 0.5))
            k = 0.05 + 0.9 * gen.next_uniform()
            expected = (x ** k - x ** -k) / (2.0 * k)
            assert abs(kappa_log(x, k) - expected) <= 1e-12 * max(1.0, abs(expected))

    def test_mutual_inverses(self):
        gen = SplitMix64(13)
        for _ in range(200):
            x = 30.0 * (gen.next_uniform() - 0.5)
            k = 0.05 + 0.9 * gen.next_uniform()
            assert abs(kappa_log(kappa_exp(x, k), k) - x) <= 1e-9 * max(1.0, abs(x))

    def test_small_kappa_approaches_exp(self):
        for x in (-2.0, -0.5, 0.0, 0.5, 2.0):
            assert abs(kappa_exp(x, 1e-6) - math.exp(x)) <= 1e-9 * math.exp(abs(x))

    def test_vectorised_matches_scalar(self):
        x = np.linspace(-3.0, 3.0, 7)
        vec = kappa_exp(x, 0.7)
        for xi, vi in zip(x, vec):
            assert vi == kappa_exp(float(xi), 0.7)

    def test_kappa_domain_checked(self):
        for bad in (0.0, 1.0, -0.3, 1.5):
            with pytest.raises(DomainError):
                kappa_exp(1.0, bad)


class TestModelParams:
    def test_threshold_closed_form(self):
        """x_m solves delta * exp_k(-beta x^alpha) = 1."""
        gen = SplitMix64(21)
        for _ in range(50):
            p = random_params(gen)
            xm = threshold_xm(p)
            assert abs(p.delta * kappa_exp(-p.beta * xm ** p.alpha, p.kappa) - 1.0) <= 1e-10

    def test_validation(self):
        with pytest.raises(DomainError):
            ModelParams(delta=1.0, kappa=0.8, alpha=1.8, beta=1e-8)
        with pytest.raises(DomainError):
            ModelParams(delta=1.2, kappa=1.0, alpha=1.8, beta=1e-8)
        with pytest.raises(DomainError):
            ModelParams(delta=1.2, kappa=0.8, alpha=0.0, beta=1e-8)
        with pytest.raises(DomainError):
            ModelParams(delta=1.2, kappa=0.8, alpha=1.8, beta=0.0)

    def test_json_round_trip(self):
        p = ModelParams(delta=1.25, kappa=0.8, alpha=1.8, beta=1e-8)
        q = ModelParams.from_json(p.to_json())
        assert q == p

    def test_power_law_coefficient(self):
        p = ModelParams(delta=1.25, kappa=0.8, alpha=1.8, beta=1e-8)
        assert abs(power_law_coefficient(p) - 1.8 / 0.8) <= 1e-15


class TestSurvival:
    def test_standard_tends_to_one_at_small_income(self):
        assert abs(survival_standard(1.0, 0.8, 1.8, 1e-8) - 1.0) <= 1e-6
        with pytest.raises(DomainError):
            survival_standard(0.0, 0.8, 1.8, 1e-8)

    def test_modified_at_or_below_threshold_raises(self):
        p = ModelParams(delta=1.25, kappa=0.8, alpha=1.8, beta=1e-8)
        for x in (0.9 * p.x_m, p.x_m):
            with pytest.raises(DomainError):
                survival_modified(x, p)

    def test_modified_tends_to_one_at_threshold(self):
        gen = SplitMix64(31)
        for _ in range(20):
            p = random_params(gen)
            assert abs(survival_modified(p.x_m * (1.0 + 1e-12), p) - 1.0) <= 1e-9

    def test_monotone_decreasing(self):
        p = ModelParams(delta=1.25, kappa=0.8, alpha=1.8, beta=1e-8)
        x = np.geomspace(p.x_m * 1.001, p.x_m * 100.0, 200)
        s = survival_modified(x, p)
        assert np.all(np.diff(s) < 0.0)

    def test_tail_power_law_slope(self):
        """log-survival vs log-income slope tends to -alpha/kappa far in the tail."""
        p = ModelParams(delta=1.25, kappa=0.8, alpha=1.8, beta=1e-8)
        x = np.geomspace(1e8, 1e10, 50)
        s = survival_modified(x, p)
        slope = np.polyfit(np.log(x), np.log(s), 1)[0]
        assert abs(slope + power_law_coefficient(p)) <= 1e-3


class TestQuantile:
    def test_inverse_of_survival(self):
        gen = SplitMix64(41)
        for _ in range(30):
            p = random_params(gen)
            u = np.array([0.9, 0.5, 0.1, 0.01, 1e-4])
            x = quantile(u, p)
            back = survival_modified(x, p)
            assert np.max(np.abs(back - u)) <= 1e-10

    def test_rejects_unit_interval_boundary(self):
        p = ModelParams(delta=1.25, kappa=0.8, alpha=1.8, beta=1e-8)
        for bad in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(DomainError):
                quantile(bad, p)

    def test_decreasing_in_probability(self):
        p = ModelParams(delta=1.25, kappa=0.8, alpha=1.8, beta=1e-8)
        u = np.linspace(0.999, 0.001, 500)
        x = quantile(u, p)
        assert np.all(np.diff(x) > 0.0)
