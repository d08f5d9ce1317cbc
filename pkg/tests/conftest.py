"""Shared fixtures: bundled data paths and the standard 2023 simulation."""

import csv
from pathlib import Path

import pytest

from kappa_income import Basis, ModelParams, load_dataset, sample_population

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "kappa_income" / "data"
PERCENTILES_CSV = DATA_DIR / "uk_income_percentiles.csv"
REFERENCE_CSV = DATA_DIR / "uk_reference_fits.csv"


@pytest.fixture(scope="session")
def bundled_dataset():
    return load_dataset(PERCENTILES_CSV)


@pytest.fixture(scope="session")
def reference_rows():
    """Published annual parameter estimates bundled with the package."""
    with REFERENCE_CSV.open(newline="") as fh:
        rows = []
        for row in csv.DictReader(fh):
            rows.append({
                "year": int(row["year"]),
                "basis": Basis.parse(row["basis"]),
                "x_m": float(row["x_m"]),
                "params": ModelParams(
                    delta=float(row["delta"]), kappa=float(row["kappa"]),
                    alpha=float(row["alpha"]), beta=float(row["beta"])),
            })
    return rows


@pytest.fixture(scope="session")
def reference_2023_pre(reference_rows):
    for row in reference_rows:
        if row["year"] == 2023 and row["basis"] is Basis.PRE:
            return row
    raise AssertionError("2023 pre-tax reference row missing")


@pytest.fixture(scope="session")
def population_2023(reference_2023_pre):
    """The standard simulation: 2023 pre-tax reference params, n=1e6, seed 42."""
    return sample_population(reference_2023_pre["params"], 1_000_000, 42)
