"""Command-line orchestration: batch fits, population dumps, inequality
metric time series, bracket-tax analyses and the full report bundle.

The pipeline is file-mediated: ``fit`` turns a percentile dataset into a
parameter table, ``sample`` turns parameters into population dumps,
``inequality`` and ``tax`` turn parameters into analysis datasets, and
``report`` runs everything and writes a manifest with content hashes.
Every artifact is written atomically and floats are rendered with 9
significant digits, so identical inputs and flags give byte-identical
outputs.
"""

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from ._util import atomic_write_text, format_float
from .errors import KappaIncomeError, ParseError, ValidationError
from .fitter import FIT_TABLE_HEADER, FitConfig, fit, read_fit_table, write_fit_table
from .inequality import METRIC_GROUPS, metric_rows
from .inequality import report as inequality_report
from .kappa import ModelParams, quantile
from .percentiles import _HEADER as _DATASET_HEADER
from .percentiles import Basis, Dataset, load_dataset, save_dataset
from .sampler import sample_population, save_population
from .tax import (
    equivalent_rate_case1,
    equivalent_rate_case2,
    k_coefficients,
    schedule_2023,
    schedule_from_percentiles,
    schedule_from_scenario,
    tax_share_direct,
    tax_share_sweep,
)

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_EMPTY_SELECTION = 3
EXIT_NUMERICAL_FAILURE = 4

BUNDLED_PERCENTILES = Path(__file__).resolve().parent / "data" / "uk_income_percentiles.csv"

# Default sweep grids; each range brackets the rate at which the swept
# schedule crosses the reference tax share.
SWEEP_STEPS = 121
SWEEP_RANGES = {"p1": (0.10, 0.40), "p3": (0.30, 0.90), "p2_coupled": (0.30, 0.70)}

# Figure family -> dataset names it is rendered from.
FIGURE_FAMILIES = {
    "percentiles": ("percentiles",),
    "fit_overlay": ("percentiles", "fits", "fit_curves"),
    "fit_intervals": ("percentiles", "fits", "fit_curves"),
    "indices": ("metrics_indices",),
    "decile_shares_combined": ("metrics_decile_shares",),
    "decile_shares_panels": ("metrics_decile_shares",),
    "top_shares_combined": ("metrics_top_shares",),
    "top_shares_panels": ("metrics_top_shares",),
    "power_law": ("metrics_power_law",),
    "tax_comparison": ("tax_sweeps", "tax_scenario"),
}


class _EmptySelection(Exception):
    """Filters matched nothing; message lists what is available."""


class _StrictFailure(Exception):
    """A numerical failure that --strict escalates to exit code 4."""


def _max_workers():
    raw = os.environ.get("KAPPA_INCOME_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValidationError(f"KAPPA_INCOME_THREADS must be an integer, got {raw!r}") from None
    return min(8, os.cpu_count() or 1)


def _parallel_map(fn, items):
    """Order-preserving map across (year, basis) units."""
    items = list(items)
    workers = min(_max_workers(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def _round_floats(obj):
    if isinstance(obj, float):
        return float(format_float(obj))
    if isinstance(obj, dict):
        return {key: _round_floats(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(value) for value in obj]
    return obj


def _write_json(path, payload):
    atomic_write_text(path, json.dumps(_round_floats(payload), indent=2, sort_keys=True) + "\n")


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_json_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from None


def _selected_series(dataset, years, basis):
    available = dataset.years()
    if years:
        absent = sorted(set(years) - set(available))
        if absent:
            print(f"warning: no data for year(s) {', '.join(map(str, absent))}", file=sys.stderr)
    chosen = [s for s in dataset
              if (not years or s.year in years) and (basis is None or s.basis is basis)]
    if not chosen:
        raise _EmptySelection(
            "selection matched no series; available years: " + ", ".join(map(str, available)))
    return chosen


def _filter_fit_rows(rows, years, basis):
    available = sorted({row["year"] for row in rows})
    if years:
        absent = sorted(set(years) - set(available))
        if absent:
            print(f"warning: no data for year(s) {', '.join(map(str, absent))}", file=sys.stderr)
    chosen = [row for row in rows
              if (not years or row["year"] in years)
              and (basis is None or row["basis"] is basis)]
    if not chosen:
        raise _EmptySelection(
            "selection matched no series; available years: " + ", ".join(map(str, available)))
    return chosen


def _fit_batch(series_list, gamma):
    config = FitConfig(gamma=gamma)
    results = _parallel_map(lambda s: fit(s, config), series_list)
    return list(zip(series_list, results))


def _convergence_summary(fitted, strict):
    bad = [(s.year, s.basis.value) for s, r in fitted if not r.converged]
    if bad:
        message = "fit did not converge for: " + ", ".join(f"{y}/{b}" for y, b in bad)
        if strict:
            raise _StrictFailure(message)
        print(f"warning: {message}", file=sys.stderr)
    return len(bad)


def _sniff_csv(path):
    """Classify a CSV as a percentile dataset or a parameter table."""
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline()
    cols = [c.strip().lower() for c in first.strip().split(",")]
    if cols == _DATASET_HEADER:
        return "dataset"
    if cols == FIT_TABLE_HEADER:
        return "fits"
    raise ParseError(
        f"{path}: unrecognised CSV header; expected a percentile dataset "
        f"({','.join(_DATASET_HEADER)}) or a parameter table ({','.join(FIT_TABLE_HEADER)})")


def cmd_fit(args):
    dataset = load_dataset(args.input or BUNDLED_PERCENTILES)
    chosen = _selected_series(dataset, args.year, args.basis)
    fitted = _fit_batch(chosen, args.gamma)
    bad = _convergence_summary(fitted, args.strict)
    path = Path(args.out) / "fits.csv"
    write_fit_table(path, [(s.year, s.basis, r) for s, r in fitted])
    print(f"wrote {path} ({len(fitted)} series, {bad} not converged)")
    return EXIT_OK


def cmd_sample(args):
    if not args.input:
        raise ValidationError(
            "sample needs --input: a parameter table CSV from `fit` or a params JSON file")
    out = Path(args.out)
    targets = []
    if str(args.input).endswith(".json"):
        params = ModelParams.from_dict(_load_json_file(args.input))
        targets.append(("population.csv", params))
    else:
        rows = _filter_fit_rows(read_fit_table(args.input), args.year, args.basis)
        for row in rows:
            name = f"population_{row['year']}_{row['basis'].value}.csv"
            targets.append((name, row["params"]))
    for name, params in targets:
        pop = sample_population(params, args.n, args.seed)
        path = str(out / name)
        save_population(pop, path)
        print(f"wrote {path} (n={args.n}, seed={args.seed})")
    return EXIT_OK


def _metrics_for(fit_rows, n, seed):
    """Metric rows for every (year, basis) entry; one simulated population each."""
    def one(row):
        pop = sample_population(row["params"], n, seed)
        return metric_rows(inequality_report(pop, row["year"], row["basis"]))
    return [row for group in _parallel_map(one, fit_rows) for row in group]


def _write_metric_files(out, rows):
    paths = []
    for family in METRIC_GROUPS:
        family_rows = [(year, basis, metric, format_float(value))
                       for (year, basis, group, metric, value) in rows if group == family]
        path = Path(out) / f"metrics_{family}.csv"
        _write_csv(path, ["year", "basis", "metric", "value"], family_rows)
        paths.append(path)
    return paths


def cmd_inequality(args):
    if not args.input:
        raise ValidationError("inequality needs --input: a parameter table CSV from `fit`")
    rows = _filter_fit_rows(read_fit_table(args.input), args.year, args.basis)
    metric_data = _metrics_for(rows, args.n, args.seed)
    for path in _write_metric_files(args.out, metric_data):
        print(f"wrote {path}")
    return EXIT_OK


def _tax_inputs(args):
    """Resolve the population parameters and baseline schedule for tax analysis.

    Accepts a percentile dataset (fits the selected series and anchors the
    cut-offs at its 1st/85th/95th percentiles), a parameter table, or a
    params JSON; defaults to the bundled dataset's latest pre-tax year.
    """
    if args.year and len(args.year) > 1:
        raise ValidationError("tax analyses a single series; pass at most one --year")
    basis = args.basis or Basis.PRE
    source = Path(args.input) if args.input else BUNDLED_PERCENTILES
    sched = None
    if source.suffix == ".json":
        params = ModelParams.from_dict(_load_json_file(source))
        year = args.year[0] if args.year else 2023
    elif _sniff_csv(source) == "dataset":
        dataset = load_dataset(source)
        years = dataset.years(basis)
        if not years:
            raise _EmptySelection(f"no {basis} series in {source}")
        year = args.year[0] if args.year else max(years)
        if (year, basis) not in dataset:
            raise _EmptySelection(
                f"no {basis} series for year {year}; available years: "
                + ", ".join(map(str, years)))
        series = dataset.get(year, basis)
        result = fit(series, FitConfig(gamma=args.gamma))
        _convergence_summary([(series, result)], args.strict)
        params = result.params
        sched = schedule_from_percentiles(series)
    else:
        rows = read_fit_table(source)
        year = args.year[0] if args.year else max(row["year"] for row in rows)
        row = _filter_fit_rows(rows, [year], basis)[0]
        params = row["params"]
    if sched is None:
        sched = schedule_2023()
    if args.scenario:
        sched = schedule_from_scenario(_load_json_file(args.scenario))
    return params, sched, year, basis


def _tax_scenario_payload(pop, sched, k, year, basis, args):
    base = (sched.p1, sched.p2, sched.p3)
    x1, x2, y2 = args.case1_x, args.case2_x, args.case2_y
    p3_eq = equivalent_rate_case1(k, sched, x1, j=3, kband=1)
    p2_eq = equivalent_rate_case2(k, sched, x2, y2)
    return {
        "population": {
            "year": year,
            "basis": basis.value,
            "n": pop.n,
            "seed": pop.seed,
            "params": pop.params.to_dict(),
        },
        "schedule": {
            "cutoffs": {"a1": sched.a1, "a2": sched.a2, "a3": sched.a3},
            "rates": {"p1": sched.p1, "p2": sched.p2, "p3": sched.p3},
        },
        "k_coefficients": {
            "k1": k.k1, "k2": k.k2, "k3": k.k3,
            "n1": k.n1, "n2": k.n2, "n3": k.n3,
            "total_income": k.total_income,
            "k1_over_k3": k.k1 / k.k3,
        },
        "baseline": {
            "share_direct": tax_share_direct(pop, sched),
            "share_linear": k.share(base),
        },
        "case1": {
            "band1_raise": x1,
            "reference_rates": [base[0] + x1, base[1], base[2]],
            "reference_share": k.share((base[0] + x1, base[1], base[2])),
            "equivalent_band3_rate": p3_eq,
            "equivalent_rates": [base[0], base[1], p3_eq],
            "share": k.share((base[0], base[1], p3_eq)),
        },
        "case2": {
            "band1_raise": x2,
            "band3_minus_band2": y2,
            "reference_rates": [base[0] + x2, base[1], base[2]],
            "reference_share": k.share((base[0] + x2, base[1], base[2])),
            "equivalent_band2_rate": p2_eq,
            "equivalent_rates": [base[0], p2_eq, min(1.0, p2_eq + y2)],
            "share": k.share((base[0], p2_eq, min(1.0, p2_eq + y2))),
        },
    }


def _tax_sweep_rows(pop, sched, args):
    rows = []
    if args.sweep_band is not None:
        lo, hi, steps = args.sweep_range or (0.0, 0.9, SWEEP_STEPS)
        pairs = tax_share_sweep(pop, sched, args.sweep_band, (lo, hi), steps)
        rows += [(f"p{args.sweep_band}", format_float(r), format_float(s)) for r, s in pairs]
        return rows
    for label in ("p1", "p3", "p2_coupled"):
        lo, hi = SWEEP_RANGES[label]
        if label == "p2_coupled":
            pairs = tax_share_sweep(pop, sched, 2, (lo, hi), SWEEP_STEPS,
                                    coupled_gap=args.case2_y)
        else:
            pairs = tax_share_sweep(pop, sched, int(label[1]), (lo, hi), SWEEP_STEPS)
        rows += [(label, format_float(r), format_float(s)) for r, s in pairs]
    return rows


def cmd_tax(args):
    params, sched, year, basis = _tax_inputs(args)
    pop = sample_population(params, args.n, args.seed)
    k = k_coefficients(pop, sched.cutoffs())
    out = Path(args.out)
    _write_json(out / "tax_scenario.json", _tax_scenario_payload(pop, sched, k, year, basis, args))
    _write_csv(out / "tax_sweeps.csv", ["sweep", "rate", "share"], _tax_sweep_rows(pop, sched, args))
    print(f"wrote {out / 'tax_scenario.json'}")
    print(f"wrote {out / 'tax_sweeps.csv'}")
    return EXIT_OK


def _fit_curve_rows(series, params, points=400):
    """Model curve samples for overlay plots: log grid of survival values
    spanning just above the 1st percentile to a decade past the 99th."""
    u = np.exp(np.linspace(np.log(0.9995), np.log(1e-3), points))
    x = np.atleast_1d(quantile(u, params))
    return [(series.year, series.basis.value, format_float(xi), format_float(ui))
            for xi, ui in zip(x, u)]


def cmd_report(args):
    out = Path(args.out)
    input_path = Path(args.input) if args.input else BUNDLED_PERCENTILES
    dataset = load_dataset(input_path)
    chosen = _selected_series(dataset, args.year, args.basis)
    datasets = {}

    def record(name, path):
        datasets[name] = path
        print(f"wrote {path}")

    save_dataset(Dataset(chosen), out / "percentiles.csv")
    record("percentiles", out / "percentiles.csv")

    fitted = _fit_batch(chosen, args.gamma)
    bad = _convergence_summary(fitted, args.strict)
    write_fit_table(out / "fits.csv", [(s.year, s.basis, r) for s, r in fitted])
    record("fits", out / "fits.csv")

    curve_year = max(s.year for s in chosen)
    curve_rows = []
    for series, result in fitted:
        if series.year == curve_year:
            curve_rows += _fit_curve_rows(series, result.params)
    _write_csv(out / "fit_curves.csv", ["year", "basis", "income", "survival"], curve_rows)
    record("fit_curves", out / "fit_curves.csv")

    fit_rows = [{"year": s.year, "basis": s.basis, "params": r.params} for s, r in fitted]
    for path in _write_metric_files(out, _metrics_for(fit_rows, args.n, args.seed)):
        record(path.stem, path)

    tax_candidates = [(s, r) for s, r in fitted if s.basis is Basis.PRE]
    if tax_candidates:
        series, result = max(tax_candidates, key=lambda pair: pair[0].year)
        sched = schedule_from_percentiles(series)
        if args.scenario:
            sched = schedule_from_scenario(_load_json_file(args.scenario))
        pop = sample_population(result.params, args.n, args.seed)
        k = k_coefficients(pop, sched.cutoffs())
        payload = _tax_scenario_payload(pop, sched, k, series.year, series.basis, args)
        _write_json(out / "tax_scenario.json", payload)
        record("tax_scenario", out / "tax_scenario.json")
        _write_csv(out / "tax_sweeps.csv", ["sweep", "rate", "share"],
                   _tax_sweep_rows(pop, sched, args))
        record("tax_sweeps", out / "tax_sweeps.csv")
    else:
        print("warning: no pre-tax series selected; skipping tax analysis", file=sys.stderr)

    manifest = {
        "version": 1,
        "tool": {"name": "kappa-income", "version": __version__},
        "config": {
            "input": input_path.name,
            "gamma": args.gamma,
            "n": args.n,
            "seed": args.seed,
        },
        "datasets": {name: {"path": path.name, "sha256": _sha256(path)}
                     for name, path in datasets.items()},
        "figures": {family: {"datasets": list(needs)}
                    for family, needs in FIGURE_FAMILIES.items()
                    if all(name in datasets for name in needs)},
    }
    _write_json(out / "manifest.json", manifest)
    print(f"wrote {out / 'manifest.json'} ({len(datasets)} datasets, {bad} fits not converged)")
    return EXIT_OK


def _parse_sweep_range(text):
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError("expected LO:HI or LO:HI:STEPS")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        steps = int(parts[2]) if len(parts) == 3 else SWEEP_STEPS
    except ValueError:
        raise argparse.ArgumentTypeError("expected numeric LO:HI or LO:HI:STEPS") from None
    return lo, hi, steps


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kappa-income",
        description="Fit, simulate and analyse annual income-percentile data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input file; commands fall back to the bundled "
                                        "percentile data where that makes sense")
    common.add_argument("--out", default="out", help="output directory (default: %(default)s)")
    common.add_argument("--gamma", type=float, default=1.3,
                        help="fit weight exponent (default: %(default)s)")
    common.add_argument("--n", type=int, default=1_000_000,
                        help="simulated population size (default: %(default)s)")
    common.add_argument("--seed", type=int, default=42,
                        help="random seed (default: %(default)s)")
    common.add_argument("--year", type=int, action="append",
                        help="restrict to a year (repeatable)")
    common.add_argument("--basis", type=Basis.parse,
                        help="restrict to one income basis: pre or post")
    common.add_argument("--strict", action="store_true",
                        help="exit 4 if any fit fails to converge")

    taxflags = argparse.ArgumentParser(add_help=False)
    taxflags.add_argument("--scenario", help="JSON file overriding the baseline tax schedule")
    taxflags.add_argument("--case1-x", type=float, default=0.05,
                          help="band-1 raise matched by a band-3 raise (default: %(default)s)")
    taxflags.add_argument("--case2-x", type=float, default=0.05,
                          help="band-1 raise matched by coupled band-2/3 raises "
                               "(default: %(default)s)")
    taxflags.add_argument("--case2-y", type=float, default=0.1,
                          help="band-3 minus band-2 rate gap in the coupled case "
                               "(default: %(default)s)")
    taxflags.add_argument("--sweep-band", type=int, choices=(1, 2, 3),
                          help="emit a single custom sweep of this band instead of the "
                               "standard sweep set")
    taxflags.add_argument("--sweep-range", type=_parse_sweep_range, metavar="LO:HI[:STEPS]",
                          help="rate grid for --sweep-band (default: 0:0.9:121)")

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("fit", parents=[common],
                       help="fit every selected (year, basis) series to a parameter table")
    p.set_defaults(func=cmd_fit)
    p = sub.add_parser("sample", parents=[common],
                       help="simulate populations from a parameter table or params JSON")
    p.set_defaults(func=cmd_sample)
    p = sub.add_parser("inequality", parents=[common],
                       help="simulate populations and emit metric time-series datasets")
    p.set_defaults(func=cmd_inequality)
    p = sub.add_parser("tax", parents=[common, taxflags],
                       help="bracket-tax share analysis on one simulated population")
    p.set_defaults(func=cmd_tax)
    p = sub.add_parser("report", parents=[common, taxflags],
                       help="run the full pipeline and write a hashed artifact manifest")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        return args.func(args)
    except _EmptySelection as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_SELECTION
    except _StrictFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL_FAILURE
    except (KappaIncomeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
