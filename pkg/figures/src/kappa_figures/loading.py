"""Manifest and dataset ingestion with validation up front.

Everything a render run needs is loaded and checked before any drawing
happens, so a broken input can never leave a partial image set behind.
Dataset paths are resolved relative to the manifest's directory; when the
manifest records a sha256 for a dataset, the file on disk must still match
it.
"""

import csv
import hashlib
import json
from pathlib import Path

import numpy as np


class FigureInputError(Exception):
    """A manifest or dataset is missing, corrupt, or inconsistent."""


# Dataset name prefix -> expected CSV header.
_HEADERS = {
    "percentiles": ["year", "basis", "percentile", "income"],
    "fits": ["year", "basis", "x_m", "delta", "kappa", "alpha", "beta",
             "weighted_sse", "converged"],
    "fit_curves": ["year", "basis", "income", "survival"],
    "metrics": ["year", "basis", "metric", "value"],
    "tax_sweeps": ["sweep", "rate", "share"],
}


def _read_rows(path, kind):
    """Rows of a CSV after checking its header against the schema."""
    expected = _HEADERS[kind]
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip().lower() for h in header] != expected:
                raise FigureInputError(
                    f"{path}: expected header {','.join(expected)}, "
                    f"got {','.join(header) if header else 'empty file'}")
            rows = [row for row in reader if row]
    except OSError as exc:
        raise FigureInputError(f"{path}: {exc}") from exc
    for row in rows:
        if len(row) != len(expected):
            raise FigureInputError(
                f"{path}: row has {len(row)} fields, expected {len(expected)}: {row}")
    return rows


def _float(path, text):
    try:
        return float(text)
    except ValueError:
        raise FigureInputError(f"{path}: not a number: {text!r}") from None


def _int(path, text):
    try:
        return int(text)
    except ValueError:
        raise FigureInputError(f"{path}: not an integer: {text!r}") from None


def _load_percentiles(path):
    """{(year, basis): (percentile array, income array)} sorted by percentile."""
    series = {}
    for year, basis, pct, income in _read_rows(path, "percentiles"):
        key = (_int(path, year), basis)
        series.setdefault(key, []).append((_int(path, pct), _float(path, income)))
    if not series:
        raise FigureInputError(f"{path}: no data rows")
    out = {}
    for key, pairs in series.items():
        pairs.sort()
        pcts, incomes = zip(*pairs)
        out[key] = (np.array(pcts, dtype=float), np.array(incomes))
    return out


def _load_fits(path):
    """{(year, basis): field dict} for every fitted series."""
    out = {}
    for row in _read_rows(path, "fits"):
        year, basis = _int(path, row[0]), row[1]
        out[(year, basis)] = {
            name: _float(path, value)
            for name, value in zip(_HEADERS["fits"][2:8], row[2:8])
        }
        out[(year, basis)]["converged"] = row[8].strip().lower() == "true"
    if not out:
        raise FigureInputError(f"{path}: no data rows")
    return out


def _load_fit_curves(path):
    """{(year, basis): (income array, survival array)} in emitted order."""
    series = {}
    for year, basis, income, survival in _read_rows(path, "fit_curves"):
        key = (_int(path, year), basis)
        series.setdefault(key, []).append((_float(path, income), _float(path, survival)))
    if not series:
        raise FigureInputError(f"{path}: no data rows")
    return {key: tuple(np.array(col) for col in zip(*pairs))
            for key, pairs in series.items()}


def _load_metrics(path):
    """{metric: {basis: (year array, value array)}} with years ascending."""
    groups = {}
    for year, basis, metric, value in _read_rows(path, "metrics"):
        groups.setdefault(metric, {}).setdefault(basis, []).append(
            (_int(path, year), _float(path, value)))
    if not groups:
        raise FigureInputError(f"{path}: no data rows")
    out = {}
    for metric, per_basis in groups.items():
        out[metric] = {}
        for basis, pairs in per_basis.items():
            pairs.sort()
            years, values = zip(*pairs)
            out[metric][basis] = (np.array(years, dtype=int), np.array(values))
    return out


def _load_tax_sweeps(path):
    """{sweep label: (rate array, share array)} in emitted order."""
    groups = {}
    for sweep, rate, share in _read_rows(path, "tax_sweeps"):
        groups.setdefault(sweep, []).append((_float(path, rate), _float(path, share)))
    if not groups:
        raise FigureInputError(f"{path}: no data rows")
    return {label: tuple(np.array(col) for col in zip(*pairs))
            for label, pairs in groups.items()}


def _load_tax_scenario(path):
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise FigureInputError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FigureInputError(f"{path}: not valid JSON ({exc})") from exc
    for key in ("schedule", "k_coefficients", "baseline", "case1", "case2"):
        if key not in payload:
            raise FigureInputError(f"{path}: scenario is missing {key!r}")
    return payload


def _loader_for(name):
    if name.startswith("metrics_"):
        return _load_metrics
    if name == "tax_scenario":
        return _load_tax_scenario
    loaders = {
        "percentiles": _load_percentiles,
        "fits": _load_fits,
        "fit_curves": _load_fit_curves,
        "tax_sweeps": _load_tax_sweeps,
    }
    if name not in loaders:
        raise FigureInputError(f"no loader for dataset {name!r}")
    return loaders[name]


def load_manifest(manifest_path):
    path = Path(manifest_path)
    try:
        with open(path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise FigureInputError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FigureInputError(f"{path}: not valid JSON ({exc})") from exc
    for key in ("datasets", "figures"):
        if not isinstance(manifest.get(key), dict):
            raise FigureInputError(f"{path}: manifest is missing the {key!r} mapping")
    return manifest


def load_bundle(manifest_path, families=None):
    """Load a manifest and every dataset its figure families need.

    Returns (manifest, data) where data maps dataset name to its loaded
    form. Validates existence and recorded sha256 of every needed file
    before parsing anything, and parses everything before returning, so
    callers see either a fully usable bundle or an exception.
    """
    path = Path(manifest_path)
    manifest = load_manifest(path)
    base = path.parent

    figures = manifest["figures"]
    if families is not None:
        missing = sorted(set(families) - set(figures))
        if missing:
            raise FigureInputError(
                "figure families not in manifest: " + ", ".join(missing))
        figures = {name: figures[name] for name in families}

    needed = []
    for family, spec in figures.items():
        names = spec.get("datasets") if isinstance(spec, dict) else None
        if not names:
            raise FigureInputError(
                f"manifest figure {family!r} lists no datasets")
        for name in names:
            if name not in needed:
                needed.append(name)

    absent, mismatched = [], []
    for name in needed:
        entry = manifest["datasets"].get(name)
        if not isinstance(entry, dict) or "path" not in entry:
            absent.append(f"{name} (no manifest entry)")
            continue
        file_path = base / entry["path"]
        if not file_path.is_file():
            absent.append(str(file_path))
            continue
        recorded = entry.get("sha256")
        if recorded:
            actual = hashlib.sha256(file_path.read_bytes()).hexdigest()
            if actual != recorded:
                mismatched.append(str(file_path))
    if absent:
        raise FigureInputError("missing dataset file(s): " + ", ".join(absent))
    if mismatched:
        raise FigureInputError(
            "dataset file(s) do not match their manifest sha256 (corrupt or "
            "stale): " + ", ".join(mismatched))

    data = {}
    for name in needed:
        file_path = base / manifest["datasets"][name]["path"]
        data[name] = _loader_for(name)(file_path)
    return manifest, data
