"""Tests for percentile-series ingestion, validation and the bundled data."""

import numpy as np
import pytest

from kappa_income import (
    Basis,
    Dataset,
    ParseError,
    PercentileSeries,
    ValidationError,
    load_dataset,
    save_dataset,
)
from kappa_income.percentiles import survival_points

from conftest import PERCENTILES_CSV


def series_fixture(year=2020, basis=Basis.PRE):
    return PercentileSeries(year, basis, tuple(1000.0 * i for i in range(1, 100)))


class TestBasis:
    def test_parse_accepts_case_and_spacing(self):
        assert Basis.parse(" PRE ") is Basis.PRE
        assert Basis.parse("post") is Basis.POST

    def test_parse_rejects_unknown(self):
        with pytest.raises(ParseError):
            Basis.parse("gross")


class TestPercentileSeries:
    def test_requires_99_values(self):
        with pytest.raises(ValidationError):
            PercentileSeries(2020, Basis.PRE, (1.0, 2.0, 3.0))

    def test_requires_positive(self):
        values = [1000.0 * i for i in range(1, 100)]
        values[0] = 0.0
        with pytest.raises(ValidationError):
            PercentileSeries(2020, Basis.PRE, tuple(values))

    def test_requires_strictly_increasing(self):
        values = [1000.0 * i for i in range(1, 100)]
        values[50] = values[49]
        with pytest.raises(ValidationError):
            PercentileSeries(2020, Basis.PRE, tuple(values))

    def test_survival_points(self):
        pts = survival_points(series_fixture())
        assert len(pts) == 99
        assert pts[0] == (1000.0, 0.99)
        assert pts[-1] == (99000.0, 0.01)


class TestDataset:
    def test_duplicate_rejected(self):
        ds = Dataset([series_fixture()])
        with pytest.raises(ValidationError):
            ds.add(series_fixture())

    def test_years_and_gaps(self):
        ds = Dataset([series_fixture(2018), series_fixture(2020)])
        assert ds.years() == [2018, 2020]
        assert ds.missing_years() == [2019]

    def test_iteration_sorted(self):
        ds = Dataset([series_fixture(2021), series_fixture(2019),
                      series_fixture(2019, Basis.POST)])
        keys = [(s.year, s.basis.value) for s in ds]
        assert keys == sorted(keys)


class TestLoadSave:
    def test_round_trip(self, tmp_path):
        ds = Dataset([series_fixture(), series_fixture(2021, Basis.POST)])
        path = tmp_path / "data.csv"
        save_dataset(ds, path)
        assert load_dataset(path) == ds

    def test_save_is_deterministic(self, tmp_path):
        ds = Dataset([series_fixture()])
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        save_dataset(ds, a)
        save_dataset(ds, b)
        assert a.read_bytes() == b.read_bytes()

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c,d\n")
        with pytest.raises(ParseError):
            load_dataset(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ParseError):
            load_dataset(path)

    def test_bad_cells(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("year,basis,percentile,income\nnineteen,pre,1,100\n")
        with pytest.raises(ParseError):
            load_dataset(path)
        path.write_text("year,basis,percentile,income\n2020,pre,0,100\n")
        with pytest.raises(ParseError):
            load_dataset(path)

    def test_incomplete_series(self, tmp_path):
        path = tmp_path / "partial.csv"
        rows = ["year,basis,percentile,income"]
        rows += [f"2020,pre,{p},{1000 * p}" for p in range(1, 99)]  # 98 of 99
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(ValidationError):
            load_dataset(path)

    def test_duplicate_percentile(self, tmp_path):
        path = tmp_path / "dup.csv"
        rows = ["year,basis,percentile,income"]
        rows += [f"2020,pre,{p},{1000 * p}" for p in range(1, 100)]
        rows.append("2020,pre,50,123")
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(ValidationError):
            load_dataset(path)


class TestBundledData:
    def test_shape(self, bundled_dataset):
        assert len(bundled_dataset) == 46
        years = bundled_dataset.years()
        assert years[0] == 2000 and years[-1] == 2023
        assert bundled_dataset.missing_years() == [2009]

    def test_both_bases_every_year(self, bundled_dataset):
        for year in bundled_dataset.years():
            assert (year, Basis.PRE) in bundled_dataset
            assert (year, Basis.POST) in bundled_dataset

    def test_2023_bracket_cutoff_percentiles(self, bundled_dataset):
        s = bundled_dataset.get(2023, Basis.PRE)
        assert s.values[0] == 12800.0
        assert s.values[84] == 53700.0
        assert s.values[94] == 90500.0

    def test_values_on_hundreds_grid(self, bundled_dataset):
        for s in bundled_dataset:
            v = np.array(s.values)
            assert np.all(v % 100.0 == 0.0)

    def test_loader_matches_disk_exactly(self, bundled_dataset, tmp_path):
        out = tmp_path / "rewritten.csv"
        save_dataset(bundled_dataset, out)
        assert load_dataset(out) == bundled_dataset
