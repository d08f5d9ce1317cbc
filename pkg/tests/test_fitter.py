"""Tests for the weighted nonlinear least-squares fitter."""

import numpy as np
import pytest

from kappa_income import (
    Basis,
    DegenerateInput,
    FitConfig,
    FitResult,
    ModelParams,
    ParseError,
    PercentileSeries,
    fit,
    initial_params,
    objective,
    quantile,
    read_fit_table,
    survival_modified,
    weights,
    write_fit_table,
)
from kappa_income.rng import SplitMix64

PROBS = (100.0 - np.arange(1, 100)) / 100.0


def synthetic_series(params, year=2020, basis=Basis.PRE):
    """Noiseless percentiles generated straight from the model."""
    return PercentileSeries(year, basis, tuple(np.atleast_1d(quantile(PROBS, params))))


class TestWeights:
    def test_formula(self):
        w = weights(1.3)
        assert w.shape == (99,)
        assert abs(w[0] - 0.99 ** -1.3) <= 1e-15
        assert abs(w[98] - 0.01 ** -1.3) <= 1e-12

    def test_gamma_zero_is_flat(self):
        assert np.all(weights(0.0) == 1.0)

    def test_negative_gamma_rejected(self):
        with pytest.raises(DegenerateInput):
            weights(-0.5)


class TestObjective:
    def test_zero_at_generating_params(self):
        p = ModelParams(delta=1.25, kappa=0.8, alpha=1.8, beta=1e-8)
        assert objective(p, synthetic_series(p), 1.3) <= 1e-18

    def test_matches_hand_sum(self):
        p = ModelParams(delta=1.25, kappa=0.8, alpha=1.8, beta=1e-8)
        q = ModelParams(delta=1.3, kappa=0.75, alpha=1.85, beta=1.2e-8)
        series = synthetic_series(p)
        # model survival clamped to 1 at and below the candidate threshold
        model = np.array([1.0 if v <= q.x_m else min(1.0, survival_modified(v, q))
                          for v in series.values])
        expected = float(np.sum(weights(1.3) * (PROBS - model) ** 2))
        assert abs(objective(q, series, 1.3) - expected) <= 1e-15


class TestRoundTrip:
    def test_standard_start_recovers_parameters(self):
        p0 = ModelParams(delta=1.25, kappa=0.8, alpha=1.8, beta=1e-8)
        result = fit(synthetic_series(p0), FitConfig(gamma=1.3))
        got = result.params
        for name in ("delta", "kappa", "alpha", "beta"):
            rel = abs(getattr(got, name) / getattr(p0, name) - 1.0)
            assert rel <= 1e-3, f"{name} off by {rel:.2e}"
        assert result.converged

    def test_random_parameter_vectors(self):
        gen = SplitMix64(77)
        for _ in range(5):
            delta = 1.08 + 0.3 * gen.next_uniform()
            kappa = 0.6 + 0.3 * gen.next_uniform()
            alpha = 1.6 + 0.4 * gen.next_uniform()
            beta = 10.0 ** (-8.5 + gen.next_uniform())
            p0 = ModelParams(delta=delta, kappa=kappa, alpha=alpha, beta=beta)
            result = fit(synthetic_series(p0), FitConfig(gamma=1.3))
            for name in ("delta", "kappa", "alpha", "beta"):
                rel = abs(getattr(result.params, name) / getattr(p0, name) - 1.0)
                assert rel <= 5e-3, f"{name} off by {rel:.2e}"

    def test_residual_sign_convention(self):
        """FitResult.residuals is observed minus fitted survival."""
        p0 = ModelParams(delta=1.25, kappa=0.8, alpha=1.8, beta=1e-8)
        series = synthetic_series(p0)
        result = fit(series, FitConfig())
        fitted = np.array([
            min(1.0, survival_modified(v, result.params))
            if v > result.params.x_m else 1.0
            for v in series.values])
        assert np.max(np.abs((PROBS - fitted) - result.residuals)) <= 1e-12


class TestConfig:
    def test_initial_params_anchor_median(self):
        p0 = ModelParams(delta=1.25, kappa=0.8, alpha=1.8, beta=1e-8)
        series = synthetic_series(p0)
        start = initial_params(series)
        assert abs(survival_modified(series.values[49], start) - 0.5) <= 1e-9

    def test_iteration_budget_flag(self):
        p0 = ModelParams(delta=1.25, kappa=0.8, alpha=1.8, beta=1e-8)
        start = ModelParams(delta=1.6, kappa=0.6, alpha=1.4, beta=1e-7)
        result = fit(synthetic_series(p0), FitConfig(initial=start, max_iterations=2))
        assert not result.converged

    def test_multistart_reproducible(self):
        p0 = ModelParams(delta=1.25, kappa=0.8, alpha=1.8, beta=1e-8)
        series = synthetic_series(p0)
        a = fit(series, FitConfig(multistart=4))
        b = fit(series, FitConfig(multistart=4))
        assert a.params == b.params and a.weighted_sse == b.weighted_sse

    def test_bad_config_rejected(self):
        with pytest.raises(DegenerateInput):
            FitConfig(gamma=-1.0)
        with pytest.raises(DegenerateInput):
            FitConfig(max_iterations=0)
        with pytest.raises(DegenerateInput):
            FitConfig(multistart=0)

    def test_fit_requires_series(self):
        with pytest.raises(DegenerateInput):
            fit([1.0, 2.0, 3.0])


class TestRealData:
    def test_2023_pre_close_to_reference(self, bundled_dataset, reference_2023_pre):
        result = fit(bundled_dataset.get(2023, Basis.PRE), FitConfig(gamma=1.3))
        ref = reference_2023_pre["params"]
        for name in ("delta", "kappa", "alpha", "beta"):
            rel = abs(getattr(result.params, name) / getattr(ref, name) - 1.0)
            assert rel <= 0.05, f"{name} off by {rel:.2%}"
        assert abs(result.params.x_m / reference_2023_pre["x_m"] - 1.0) <= 0.05

    def test_2023_pre_residual_bands(self, bundled_dataset):
        """Fitted-minus-observed: over at the bottom, under through the
        middle, over again near the top."""
        result = fit(bundled_dataset.get(2023, Basis.PRE), FitConfig(gamma=1.3))
        fitted_minus_observed = -result.residuals
        assert np.all(fitted_minus_observed[0:3] > 0.0)
        assert np.all(fitted_minus_observed[39:85] < 0.0)
        assert np.all(fitted_minus_observed[89:98] > 0.0)

    def test_all_series_converge(self, bundled_dataset):
        for series in bundled_dataset:
            result = fit(series, FitConfig(gamma=1.3))
            assert result.converged, f"{series.year}/{series.basis} did not converge"
            assert result.weighted_sse < 0.05


class TestFitTable:
    def entries(self):
        p = ModelParams(delta=1.25, kappa=0.8, alpha=1.8, beta=1e-8)
        result = fit(synthetic_series(p), FitConfig())
        return [(2020, Basis.PRE, result)]

    def test_round_trip(self, tmp_path):
        path = tmp_path / "fits.csv"
        entries = self.entries()
        write_fit_table(path, entries)
        rows = read_fit_table(path)
        assert len(rows) == 1
        row = rows[0]
        assert row["year"] == 2020 and row["basis"] is Basis.PRE
        assert row["converged"] is True
        for name in ("delta", "kappa", "alpha", "beta"):
            rel = abs(getattr(row["params"], name) /
                      getattr(entries[0][2].params, name) - 1.0)
            assert rel <= 1e-8  # 9 significant digits stored

    def test_malformed_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("nope\n")
        with pytest.raises(ParseError):
            read_fit_table(path)
        path.write_text(
            "year,basis,x_m,delta,kappa,alpha,beta,weighted_sse,converged\n"
            "2020,pre,1,1.2,0.8,1.8,1e-8,0.1,maybe\n")
        with pytest.raises(ParseError):
            read_fit_table(path)
