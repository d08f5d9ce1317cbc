"""Tests for the counter-based seeded generator."""

import numpy as np

from kappa_income.rng import SplitMix64, uniform_open01

# First outputs of the published algorithm for seed 0, checked against an
# independent scalar reimplementation of the mixing constants.
SEED0_OUTPUTS = (
    0xE220A8397B1DCDAF,
    0x6E789E6AA1B965F4,
    0x06C45D188009454F,
    0xF88BB8A8724C81EC,
    0x1B39896A51A8749B,
)


class TestScalarStream:
    def test_known_outputs_seed_zero(self):
        gen = SplitMix64(0)
        for expected in SEED0_OUTPUTS:
            assert gen.next_uint64() == expected

    def test_matches_inline_reference(self):
        """Step the textbook add-constant-then-mix recurrence by hand."""
        mask = (1 << 64) - 1
        state = 0xDEADBEEF
        gen = SplitMix64(0xDEADBEEF)
        for _ in range(100):
            state = (state + 0x9E3779B97F4A7C15) & mask
            z = state
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
            assert gen.next_uint64() == z ^ (z >> 31)

    def test_distinct_seeds_distinct_streams(self):
        a = SplitMix64(1)
        b = SplitMix64(2)
        assert [a.next_uint64() for _ in range(5)] != [b.next_uint64() for _ in range(5)]

    def test_uniform_in_open_interval(self):
        gen = SplitMix64(7)
        for _ in range(1000):
            u = gen.next_uniform()
            assert 0.0 < u < 1.0


class TestVectorisedUniforms:
    def test_matches_scalar_stream(self):
        gen = SplitMix64(42)
        scalar = np.array([gen.next_uniform() for _ in range(500)])
        assert np.array_equal(uniform_open01(42, 500), scalar)

    def test_prefix_property(self):
        """Counter-based stream: a shorter request is a prefix of a longer one."""
        long = uniform_open01(99, 1000)
        short = uniform_open01(99, 400)
        assert np.array_equal(long[:400], short)

    def test_deterministic(self):
        assert np.array_equal(uniform_open01(5, 10000), uniform_open01(5, 10000))

    def test_count_and_interval(self):
        u = uniform_open01(3, 100000)
        assert u.size == 100000
        assert u.min() > 0.0 and u.max() < 1.0

    def test_moments_near_uniform(self):
        # mean 1/2 and variance 1/12; 5-sigma bands at n=1e5
        u = uniform_open01(12345, 100000)
        assert abs(u.mean() - 0.5) < 5.0 / np.sqrt(12.0 * 100000)
        assert abs(u.var() - 1.0 / 12.0) < 0.002

    def test_zero_count(self):
        assert uniform_open01(1, 0).size == 0
