"""Inequality metrics: Gini, Theil, group income shares, yearly reports.

All functions accept either a Population or a plain sequence of incomes.
Group membership is by rank count, not income threshold, so decile shares
always partition the population exactly.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput
from .kappa import power_law_coefficient
from .sampler import Population

# Population fractions reported as "top" groups, largest first.
TOP_FRACTIONS = (0.05, 0.01, 0.001, 0.0001)

# Metric family -> series names used in emitted time-series rows.
METRIC_GROUPS = {
    "indices": ("gini", "theil"),
    "decile_shares": tuple(f"decile{d}" for d in range(1, 11)),
    "top_shares": ("top5", "top1", "top01", "top001"),
    "power_law": ("plc",),
}


def _sorted_incomes(pop):
    """Return incomes as an ascending float array."""
    if isinstance(pop, Population):
        return pop.incomes
    values = np.asarray(pop, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise DegenerateInput(
            f"expected a one-dimensional non-empty income sample, got shape {values.shape}")
    return np.sort(values)


def _rank_floor(n, fraction):
    # Snap against float noise so e.g. 1e6 * 0.3 never floors to 299999.
    return int(np.floor(n * fraction + 1e-9))


def gini(pop):
    """Gini coefficient via the rank formula on the ascending sample.

    G = 2 * sum(i * s_i) / (n * sum(s_i)) - (n + 1) / n with 1-based ranks.
    """
    s = _sorted_incomes(pop)
    n = s.size
    total = float(s.sum())
    if total == 0.0:
        raise DegenerateInput("gini is undefined for a population with zero total income")
    ranks = np.arange(1, n + 1, dtype=float)
    return float(2.0 * np.dot(ranks, s) / (n * total) - (n + 1) / n)


def theil(pop):
    """Theil index (1/n) * sum((s_i/mu) * ln(s_i/mu)), natural logarithm."""
    s = _sorted_incomes(pop)
    if np.any(s <= 0.0):
        raise DegenerateInput("theil requires strictly positive incomes")
    ratio = s / s.mean()
    return float(np.mean(ratio * np.log(ratio)))


def income_share(pop, lower_quantile, upper_quantile):
    """Share of total income held by ranks in (floor(n*lo), floor(n*hi)].

    Quantiles are population fractions in [0, 1]; (0, 1) covers everyone and
    (0.99, 1) is the top 1% by rank count.
    """
    if not 0.0 <= lower_quantile < upper_quantile <= 1.0:
        raise DegenerateInput(
            f"need 0 <= lower < upper <= 1, got ({lower_quantile}, {upper_quantile})")
    s = _sorted_incomes(pop)
    n = s.size
    i0 = _rank_floor(n, lower_quantile)
    i1 = _rank_floor(n, upper_quantile)
    if i0 == i1:
        raise DegenerateInput(
            f"quantile range ({lower_quantile}, {upper_quantile}) selects no members at n={n}")
    total = float(s.sum())
    if total == 0.0:
        raise DegenerateInput("income share is undefined for zero total income")
    return float(s[i0:i1].sum()) / total


def decile_shares(pop):
    """Array of 10 decile shares, poorest first; sums to 1 exactly by rank partition."""
    s = _sorted_incomes(pop)
    n = s.size
    if n < 10:
        raise DegenerateInput(f"decile shares need n >= 10, got {n}")
    bounds = [_rank_floor(n, d / 10.0) for d in range(11)]
    total = float(s.sum())
    if total == 0.0:
        raise DegenerateInput("decile shares are undefined for zero total income")
    return np.array([float(s[bounds[d]:bounds[d + 1]].sum()) / total for d in range(10)])


def top_shares(pop):
    """Dict mapping top fraction (0.05, 0.01, 0.001, 0.0001) to income share."""
    return {f: income_share(pop, 1.0 - f, 1.0) for f in TOP_FRACTIONS}


@dataclass(frozen=True)
class InequalityReport:
    """All inequality metrics of one simulated (year, basis) population.

    ``lower_tail_truncated`` records that the generating model has no mass
    below its threshold income, so levels that weigh the poorest ranks
    (gini, theil, bottom decile shares) describe the truncated model
    population, not the full real-world one.
    """

    year: int
    basis: object
    gini: float
    theil: float
    decile_shares: np.ndarray
    top_shares: dict
    power_law_coef: float
    lower_tail_truncated: bool = field(default=True)


def report(pop, year, basis):
    """Assemble the full metric set for one population."""
    return InequalityReport(
        year=int(year),
        basis=basis,
        gini=gini(pop),
        theil=theil(pop),
        decile_shares=decile_shares(pop),
        top_shares=top_shares(pop),
        power_law_coef=power_law_coefficient(pop.params),
    )


def metric_rows(rep):
    """Flatten a report into (year, basis, metric, group, value) rows."""
    basis = getattr(rep.basis, "value", rep.basis)
    rows = [
        (rep.year, basis, "indices", "gini", rep.gini),
        (rep.year, basis, "indices", "theil", rep.theil),
    ]
    rows += [
        (rep.year, basis, "decile_shares", f"decile{d + 1}", float(rep.decile_shares[d]))
        for d in range(10)
    ]
    labels = dict(zip(TOP_FRACTIONS, METRIC_GROUPS["top_shares"]))
    rows += [
        (rep.year, basis, "top_shares", labels[f], rep.top_shares[f])
        for f in TOP_FRACTIONS
    ]
    rows.append((rep.year, basis, "power_law", "plc", rep.power_law_coef))
    return rows
