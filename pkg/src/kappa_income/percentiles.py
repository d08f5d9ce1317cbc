"""Ingestion and validation of annual income-percentile series.

Canonical input is a long-format CSV with header
``year,basis,percentile,income``: basis is ``pre`` or ``post``,
percentile an integer 1..99 and income a positive decimal in GBP.
Each (year, basis) pair must supply all 99 percentiles.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
from dataclasses import dataclass
from pathlib import Path

from ._util import atomic_write_text, format_float
from .errors import ParseError, ValidationError

logger = logging.getLogger(__name__)

__all__ = ["Basis", "PercentileSeries", "Dataset", "load_dataset", "save_dataset", "survival_points"]

_HEADER = ["year", "basis", "percentile", "income"]


class Basis(enum.Enum):
    PRE = "pre"
    POST = "post"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "Basis":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ParseError(f"basis must be 'pre' or 'post', got {text!r}") from None


@dataclass(frozen=True)
class PercentileSeries:
    """One year's 99 ordered income percentiles for one income basis.

    values[i] is the (i+1)-th percentile, so the probability of an
    income exceeding values[i] is 1 - (i+1)/100.
    """

    year: int
    basis: Basis
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        tag = f"year {self.year} basis {self.basis}"
        if len(self.values) != 99:
            raise ValidationError(f"{tag}: expected 99 percentiles, got {len(self.values)}")
        for i, v in enumerate(self.values):
            if not v > 0.0:
                raise ValidationError(f"{tag}: percentile {i + 1} is not positive ({v})")
        for i in range(98):
            if not self.values[i] < self.values[i + 1]:
                raise ValidationError(
                    f"{tag}: percentile {i + 1} ({self.values[i]}) is not below "
                    f"percentile {i + 2} ({self.values[i + 1]})"
                )


def survival_points(series: PercentileSeries) -> list:
    """(income, survival probability) pairs in ascending income order."""
    return [(x, (100 - i) / 100.0) for i, x in zip(range(1, 100), series.values)]


class Dataset:
    """Collection of percentile series keyed by (year, basis)."""

    def __init__(self, series=()):
        self._series = {}
        for s in series:
            self.add(s)

    def add(self, series: PercentileSeries):
        key = (series.year, series.basis)
        if key in self._series:
            raise ValidationError(f"duplicate series for year {series.year} basis {series.basis}")
        self._series[key] = series

    def get(self, year: int, basis: Basis) -> PercentileSeries:
        return self._series[(year, basis)]

    def __contains__(self, key) -> bool:
        return key in self._series

    def __len__(self) -> int:
        return len(self._series)

    def __iter__(self):
        return iter(sorted(self._series.values(), key=lambda s: (s.year, s.basis.value)))

    def __eq__(self, other) -> bool:
        return isinstance(other, Dataset) and self._series == other._series

    def years(self, basis: Basis | None = None) -> list:
        ys = {y for (y, b) in self._series if basis is None or b is basis}
        return sorted(ys)

    def missing_years(self) -> list:
        """Gaps in the year coverage between the first and last year seen."""
        ys = self.years()
        if not ys:
            return []
        return [y for y in range(ys[0], ys[-1] + 1) if y not in ys]


def load_dataset(path) -> Dataset:
    """Read a canonical percentile CSV and validate every series.

    Missing years inside the covered range are tolerated and logged as a
    warning, never interpolated.
    """
    path = Path(path)
    rows = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty") from None
        if [h.strip().lower() for h in header] != _HEADER:
            raise ParseError(f"{path}: expected header {','.join(_HEADER)}, got {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise ParseError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
            try:
                year = int(row[0])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad year {row[0]!r}") from None
            basis = Basis.parse(row[1])
            try:
                pct = int(row[2])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad percentile {row[2]!r}") from None
            if not 1 <= pct <= 99:
                raise ParseError(f"{path}:{lineno}: percentile must be 1..99, got {pct}")
            try:
                income = float(row[3])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad income {row[3]!r}") from None
            cell = rows.setdefault((year, basis), {})
            if pct in cell:
                raise ValidationError(
                    f"{path}: duplicate percentile {pct} for year {year} basis {basis}"
                )
            cell[pct] = income

    dataset = Dataset()
    for (year, basis), cell in rows.items():
        missing = [p for p in range(1, 100) if p not in cell]
        if missing:
            raise ValidationError(
                f"year {year} basis {basis}: missing percentiles {missing[:5]}"
                f"{'...' if len(missing) > 5 else ''}"
            )
        dataset.add(PercentileSeries(year, basis, tuple(cell[p] for p in range(1, 100))))

    gaps = dataset.missing_years()
    if gaps:
        logger.warning("no percentile data for year(s) %s; skipping, not interpolating", gaps)
    return dataset


def save_dataset(dataset: Dataset, path):
    """Write a Dataset back to the canonical CSV format atomically.

    Incomes are rendered with 9 significant digits, enough for an exact
    round trip of any realistic income value.
    """
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(_HEADER)
    for series in dataset:
        for pct, income in enumerate(series.values, start=1):
            writer.writerow([series.year, series.basis.value, pct, format_float(income)])
    atomic_write_text(path, buf.getvalue())
