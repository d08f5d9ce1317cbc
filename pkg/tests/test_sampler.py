"""Tests for population sampling, dumps and the inverse-transform identity."""

import numpy as np
import pytest

from kappa_income import (
    ModelParams,
    Population,
    ValidationError,
    load_population,
    quantile,
    sample_population,
    save_population,
)
from kappa_income.rng import SplitMix64
from kappa_income.sampler import RETAINED_DRAWS

PARAMS = ModelParams(delta=1.27, kappa=0.82, alpha=1.80, beta=1.02e-8)


def random_params(gen):
    """Draw a plausible parameter vector from a seeded generator."""
    u = [gen.next_uniform() for _ in range(4)]
    return ModelParams(
        delta=1.05 + 0.6 * u[0],
        kappa=0.35 + 0.6 * u[1],
        alpha=1.2 + 1.3 * u[2],
        beta=10.0 ** (-9.5 + 2.5 * u[3]),
    )


class TestSampling:
    def test_sorted_and_above_threshold(self):
        pop = sample_population(PARAMS, 5000, seed=3)
        assert np.all(np.diff(pop.incomes) >= 0)
        assert pop.incomes[0] > PARAMS.x_m
        assert len(pop) == 5000

    def test_deterministic(self):
        a = sample_population(PARAMS, 2000, seed=9)
        b = sample_population(PARAMS, 2000, seed=9)
        assert np.array_equal(a.incomes, b.incomes)
        assert np.array_equal(a.draw_uniforms, b.draw_uniforms)

    def test_seeds_differ(self):
        a = sample_population(PARAMS, 2000, seed=1)
        b = sample_population(PARAMS, 2000, seed=2)
        assert not np.array_equal(a.incomes, b.incomes)

    def test_inverse_transform_identity(self):
        # Each retained income must be the quantile of its retained uniform.
        for seed in range(5):
            pop = sample_population(PARAMS, 4000, seed=seed)
            expected = quantile(pop.draw_uniforms, PARAMS)
            assert np.allclose(pop.draw_incomes, expected, rtol=1e-10, atol=0)

    def test_identity_random_params(self):
        gen = SplitMix64(606)
        for _ in range(10):
            p = random_params(gen)
            pop = sample_population(p, 500, seed=11)
            expected = quantile(pop.draw_uniforms, p)
            assert np.allclose(pop.draw_incomes, expected, rtol=1e-10, atol=0)

    def test_retained_draw_count(self):
        assert len(sample_population(PARAMS, 50, seed=0).draw_uniforms) == 50
        big = sample_population(PARAMS, RETAINED_DRAWS + 500, seed=0)
        assert len(big.draw_uniforms) == RETAINED_DRAWS
        assert len(big.draw_incomes) == RETAINED_DRAWS

    def test_retained_draws_prefix_of_stream(self):
        # Retained uniforms are the start of the stream, pre-sort.
        small = sample_population(PARAMS, 300, seed=17)
        big = sample_population(PARAMS, 4000, seed=17)
        assert np.array_equal(small.draw_uniforms, big.draw_uniforms[:300])

    def test_empirical_survival_tracks_model(self):
        # With n = 2e5 the empirical exceedance frequency at the model
        # quantile of s should sit within a few tenths of a percent of s.
        pop = sample_population(PARAMS, 200_000, seed=21)
        for s in (0.9, 0.5, 0.25, 0.1, 0.05, 0.01):
            cutoff = quantile(s, PARAMS)
            observed = np.mean(pop.incomes > cutoff)
            assert abs(observed - s) < 0.005

    def test_size_one(self):
        pop = sample_population(PARAMS, 1, seed=4)
        assert pop.incomes.shape == (1,)
        assert pop.incomes[0] > PARAMS.x_m

    def test_rejects_nonpositive_n(self):
        with pytest.raises(ValidationError):
            sample_population(PARAMS, 0, seed=1)
        with pytest.raises(ValidationError):
            sample_population(PARAMS, -5, seed=1)


class TestPopulationValidation:
    def test_rejects_unsorted(self):
        values = np.array([20000.0, 15000.0, 30000.0])
        with pytest.raises(ValidationError):
            Population(incomes=values, params=PARAMS, seed=0, n=3)

    def test_rejects_below_threshold(self):
        values = np.array([PARAMS.x_m - 1.0, 20000.0, 30000.0])
        with pytest.raises(ValidationError):
            Population(incomes=values, params=PARAMS, seed=0, n=3)

    def test_rejects_threshold_itself(self):
        values = np.array([PARAMS.x_m, 20000.0])
        with pytest.raises(ValidationError):
            Population(incomes=values, params=PARAMS, seed=0, n=2)

    def test_rejects_length_mismatch(self):
        values = np.array([20000.0, 30000.0])
        with pytest.raises(ValidationError):
            Population(incomes=values, params=PARAMS, seed=0, n=3)


class TestDumps:
    def test_round_trip(self, tmp_path):
        pop = sample_population(PARAMS, 1500, seed=8)
        path = str(tmp_path / "pop.csv")
        save_population(pop, path)
        loaded = load_population(path)
        assert loaded.n == pop.n
        assert loaded.seed == pop.seed
        assert loaded.params == pop.params
        # Values are stored at 9 significant digits.
        assert np.allclose(loaded.incomes, pop.incomes, rtol=1e-8, atol=0)
        assert loaded.draw_uniforms is None

    def test_dump_bytes_deterministic(self, tmp_path):
        first = str(tmp_path / "a.csv")
        second = str(tmp_path / "b.csv")
        save_population(sample_population(PARAMS, 800, seed=5), first)
        save_population(sample_population(PARAMS, 800, seed=5), second)
        for suffix in ("", ".json"):
            with open(first + suffix, "rb") as fh:
                blob_a = fh.read()
            with open(second + suffix, "rb") as fh:
                blob_b = fh.read()
            assert blob_a == blob_b

    def test_csv_header(self, tmp_path):
        path = str(tmp_path / "pop.csv")
        save_population(sample_population(PARAMS, 10, seed=2), path)
        with open(path) as fh:
            lines = fh.read().splitlines()
        assert lines[0] == "income"
        assert len(lines) == 11

    def test_no_leftover_temp_files(self, tmp_path):
        path = str(tmp_path / "pop.csv")
        save_population(sample_population(PARAMS, 10, seed=2), path)
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["pop.csv", "pop.csv.json"]
