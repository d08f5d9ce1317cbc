"""Figure builders and the atomic render-all driver.

Each builder turns already-loaded datasets into one matplotlib Figure;
``render_all`` validates and loads everything first, then writes one image
per figure family via temp-file-plus-rename so an interrupted run never
leaves a partial image.
"""

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import Normalize

from .loading import FigureInputError, load_bundle, load_manifest

# Fixed salt so SVG element ids do not change between runs.
plt.rcParams["svg.hashsalt"] = "kappa-figures"

BASIS_STYLE = {"pre": "-", "post": "--"}
BASIS_LABEL = {"pre": "pre-tax", "post": "post-tax"}

# Percentile bands highlighted in the interval view: low body, middle
# body, upper body short of the extreme point.
INTERVAL_BANDS = ((1, 10), (40, 85), (90, 99))

TOP_SHARE_LABELS = {"top5": "top 5%", "top1": "top 1%",
                    "top01": "top 0.1%", "top001": "top 0.01%"}


def gapped_series(years, values):
    """Expand a year-indexed series onto its full consecutive year range.

    Absent years become NaN, which matplotlib draws as a line gap rather
    than interpolating across them.
    """
    years = np.asarray(years, dtype=int)
    lo = int(years.min())
    full = np.arange(lo, int(years.max()) + 1)
    out = np.full(full.size, np.nan)
    out[years - lo] = values
    return full, out


def _style(basis):
    return BASIS_STYLE.get(basis, "-")


def _label(basis):
    return BASIS_LABEL.get(basis, basis)


def _year_norm(years):
    lo, hi = min(years), max(years)
    if lo == hi:
        lo, hi = lo - 1, hi + 1
    return Normalize(lo, hi)


def _plot_metric_series(ax, per_basis, **kwargs):
    for basis in sorted(per_basis, reverse=True):
        yrs, vals = per_basis[basis]
        fy, fv = gapped_series(yrs, vals)
        ax.plot(fy, fv, _style(basis), marker="o", markersize=2.5,
                label=_label(basis), **kwargs)


def build_percentiles(data):
    series = data["percentiles"]
    cmap = plt.get_cmap("viridis")
    norm = _year_norm([year for year, _ in series])
    fig, ax = plt.subplots(figsize=(8, 5))
    for year, basis in sorted(series):
        pcts, incomes = series[(year, basis)]
        ax.plot(pcts, incomes, _style(basis), color=cmap(norm(year)), linewidth=0.9)
    ax.set_yscale("log")
    ax.set_xlabel("percentile")
    ax.set_ylabel("annual income (GBP)")
    ax.set_title("Income percentiles by year (solid pre-tax, dashed post-tax)")
    fig.colorbar(plt.cm.ScalarMappable(norm=norm, cmap=cmap), ax=ax, label="year")
    return fig


def build_fit_overlay(data):
    curves = data["fit_curves"]
    percentiles = data["percentiles"]
    fits = data["fits"]
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    fig, ax = plt.subplots(figsize=(7, 5))
    for i, key in enumerate(sorted(curves)):
        year, basis = key
        color = colors[i % len(colors)]
        xs, survs = curves[key]
        ax.plot(xs, survs, "-", color=color, label=f"{year} {_label(basis)} model")
        if key in percentiles:
            pcts, incomes = percentiles[key]
            ax.plot(incomes, 1.0 - pcts / 100.0, "o", markersize=3.5,
                    markerfacecolor="none", linestyle="none", color=color,
                    label=f"{year} {_label(basis)} data")
        if key in fits:
            ax.axvline(fits[key]["x_m"], color=color, linestyle=":", linewidth=0.8)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("annual income (GBP)")
    ax.set_ylabel("survival probability P(X > x)")
    ax.set_title("Fitted survival curves over percentile data\n"
                 "(dotted verticals: model validity thresholds)")
    ax.legend(fontsize=8)
    return fig


def build_fit_intervals(data):
    curves = data["fit_curves"]
    percentiles = data["percentiles"]
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    fig, axes = plt.subplots(1, len(INTERVAL_BANDS), figsize=(12, 4))
    for ax, (lo, hi) in zip(axes, INTERVAL_BANDS):
        for i, key in enumerate(sorted(curves)):
            year, basis = key
            color = colors[i % len(colors)]
            if key in percentiles:
                pcts, incomes = percentiles[key]
                mask = (pcts >= lo) & (pcts <= hi)
                ax.plot(incomes[mask], 1.0 - pcts[mask] / 100.0, "o",
                        markersize=3.5, markerfacecolor="none", linestyle="none",
                        color=color, label=f"{year} {_label(basis)} data")
                span = incomes[mask]
                xs, survs = curves[key]
                window = (xs >= span.min() * 0.97) & (xs <= span.max() * 1.03)
                ax.plot(xs[window], survs[window], "-", color=color,
                        label=f"{year} {_label(basis)} model")
        ax.set_yscale("log")
        ax.set_xlabel("annual income (GBP)")
        ax.set_title(f"percentiles {lo}-{hi}")
    axes[0].set_ylabel("survival probability")
    axes[0].legend(fontsize=7)
    fig.suptitle("Fit against data across percentile bands")
    fig.tight_layout()
    return fig


def build_indices(data):
    metrics = data["metrics_indices"]
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for ax, name in zip(axes, ("gini", "theil")):
        if name in metrics:
            _plot_metric_series(ax, metrics[name])
        ax.set_ylabel(f"{name.capitalize()} index")
        ax.legend(fontsize=8)
    axes[-1].set_xlabel("year")
    axes[0].set_title("Inequality indices of the simulated populations")
    fig.tight_layout()
    return fig


def _decile_metrics(metrics):
    names = [f"decile{d}" for d in range(1, 11)]
    return [name for name in names if name in metrics]


def build_decile_shares_combined(data):
    metrics = data["metrics_decile_shares"]
    cmap = plt.get_cmap("viridis")
    fig, ax = plt.subplots(figsize=(8, 5))
    names = _decile_metrics(metrics)
    for idx, name in enumerate(names):
        color = cmap(idx / max(1, len(names) - 1))
        for basis in sorted(metrics[name], reverse=True):
            yrs, vals = metrics[name][basis]
            fy, fv = gapped_series(yrs, vals)
            ax.plot(fy, fv, _style(basis), color=color, linewidth=1.1,
                    label=name if basis == "pre" else None)
    ax.set_xlabel("year")
    ax.set_ylabel("income share")
    ax.set_title("Decile income shares (solid pre-tax, dashed post-tax)")
    ax.legend(fontsize=7, ncol=2)
    return fig


def build_decile_shares_panels(data):
    metrics = data["metrics_decile_shares"]
    fig, axes = plt.subplots(2, 5, figsize=(15, 6), sharex=True)
    for ax, name in zip(axes.ravel(), _decile_metrics(metrics)):
        _plot_metric_series(ax, metrics[name])
        ax.set_title(name)
    axes[0, 0].legend(fontsize=7)
    for ax in axes[-1]:
        ax.set_xlabel("year")
    for ax in axes[:, 0]:
        ax.set_ylabel("income share")
    fig.suptitle("Decile income shares by year")
    fig.tight_layout()
    return fig


def build_top_shares_combined(data):
    metrics = data["metrics_top_shares"]
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    fig, ax = plt.subplots(figsize=(8, 5))
    for idx, name in enumerate(TOP_SHARE_LABELS):
        if name not in metrics:
            continue
        color = colors[idx % len(colors)]
        for basis in sorted(metrics[name], reverse=True):
            yrs, vals = metrics[name][basis]
            fy, fv = gapped_series(yrs, vals)
            ax.plot(fy, fv, _style(basis), color=color,
                    label=TOP_SHARE_LABELS[name] if basis == "pre" else None)
    ax.set_xlabel("year")
    ax.set_ylabel("income share")
    ax.set_title("Top income shares (solid pre-tax, dashed post-tax)")
    ax.legend(fontsize=8)
    return fig


def build_top_shares_panels(data):
    metrics = data["metrics_top_shares"]
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    for ax, name in zip(axes.ravel(), TOP_SHARE_LABELS):
        if name in metrics:
            _plot_metric_series(ax, metrics[name])
        ax.set_title(TOP_SHARE_LABELS[name])
        ax.set_ylabel("income share")
    axes[0, 0].legend(fontsize=8)
    for ax in axes[-1]:
        ax.set_xlabel("year")
    fig.suptitle("Top income shares by year")
    fig.tight_layout()
    return fig


def build_power_law(data):
    metrics = data["metrics_power_law"]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if "plc" in metrics:
        _plot_metric_series(ax, metrics["plc"])
    ax.set_xlabel("year")
    ax.set_ylabel("tail power-law coefficient")
    ax.set_title("Upper-tail power-law coefficient of the fitted model")
    ax.legend(fontsize=8)
    return fig


def build_tax_comparison(data):
    sweeps = data["tax_sweeps"]
    scenario = data["tax_scenario"]
    reference_share = scenario["case1"]["reference_share"]
    baseline_share = scenario["baseline"]["share_direct"]
    rates = scenario["schedule"]["rates"]

    fig, (ax_left, ax_right) = plt.subplots(1, 2, figsize=(11, 5))

    if "p1" in sweeps:
        r, s = sweeps["p1"]
        ax_left.plot(r, s, color="tab:green")
    ax_left.axhline(reference_share, linestyle=":", color="gray")
    ax_left.plot([rates["p1"]], [baseline_share], "o", color="black",
                 label="baseline schedule")
    ax_left.plot([scenario["case1"]["reference_rates"][0]], [reference_share],
                 "^", color="black", label="reference (band-1 raise)")
    ax_left.set_xlabel("band-1 rate")
    ax_left.set_ylabel("tax share")
    ax_left.set_title("Revenue share against the band-1 rate")
    ax_left.legend(fontsize=8)

    # Dual-colour dual-axis comparison: blue bottom axis sweeps band 3
    # alone, red top axis sweeps band 2 with band 3 coupled above it.
    blue, red = "tab:blue", "tab:red"
    ax_top = ax_right.twiny()
    if "p3" in sweeps:
        r, s = sweeps["p3"]
        ax_right.plot(r, s, color=blue)
    if "p2_coupled" in sweeps:
        r, s = sweeps["p2_coupled"]
        ax_top.plot(r, s, color=red)
    ax_right.axhline(reference_share, linestyle=":", color="gray")
    ax_right.axvline(scenario["case1"]["equivalent_band3_rate"],
                     linestyle=":", color=blue)
    ax_top.axvline(scenario["case2"]["equivalent_band2_rate"],
                   linestyle=":", color=red)
    ax_right.set_xlabel("band-3 rate (band-3-only alternative)", color=blue)
    ax_right.tick_params(axis="x", colors=blue)
    ax_right.spines["bottom"].set_color(blue)
    ax_top.set_xlabel("band-2 rate (coupled band-2/3 alternative)", color=red)
    ax_top.tick_params(axis="x", colors=red)
    ax_top.spines["top"].set_color(red)
    ax_right.set_ylabel("tax share")

    fig.suptitle("Equal-revenue alternatives to a band-1 raise\n"
                 "(dotted lines: reference share and equivalent rates)")
    fig.tight_layout()
    return fig


FIGURE_BUILDERS = {
    "percentiles": build_percentiles,
    "fit_overlay": build_fit_overlay,
    "fit_intervals": build_fit_intervals,
    "indices": build_indices,
    "decile_shares_combined": build_decile_shares_combined,
    "decile_shares_panels": build_decile_shares_panels,
    "top_shares_combined": build_top_shares_combined,
    "top_shares_panels": build_top_shares_panels,
    "power_law": build_power_law,
    "tax_comparison": build_tax_comparison,
}

FORMATS = ("png", "svg")


def _save_atomic(fig, target, fmt):
    fd, tmp = tempfile.mkstemp(dir=target.parent, suffix=".tmp")
    os.close(fd)
    try:
        kwargs = {"format": fmt, "dpi": 150}
        if fmt == "svg":
            kwargs["metadata"] = {"Date": None}
        fig.savefig(tmp, **kwargs)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_all(manifest_path, out_dir, fmt="png"):
    """Render one image per figure family listed in the manifest.

    All inputs are validated and parsed before the first image is written.
    Returns the list of written paths, one per family, named
    ``<family>.<fmt>``.
    """
    if fmt not in FORMATS:
        raise FigureInputError(f"format must be one of {FORMATS}, got {fmt!r}")
    manifest = load_manifest(manifest_path)
    unknown = sorted(set(manifest["figures"]) - set(FIGURE_BUILDERS))
    if unknown:
        raise FigureInputError("no renderer for figure families: " + ", ".join(unknown))
    _, data = load_bundle(manifest_path)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for family in sorted(manifest["figures"]):
        fig = FIGURE_BUILDERS[family](data)
        target = out / f"{family}.{fmt}"
        try:
            _save_atomic(fig, target, fmt)
        finally:
            plt.close(fig)
        written.append(target)
    return written
