"""Four-band bracket tax analysis on simulated populations.

The tax share (total tax over total income) is an affine function of the
three marginal rates; its coefficients are population statistics. That
linearity powers exact rate-equivalence solvers: schedules trading rate
between bands at the coefficient ratio collect the same share.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput

# Band indices are 1, 2, 3 for the three taxed brackets above the untaxed one.
BANDS = (1, 2, 3)


@dataclass(frozen=True)
class TaxSchedule:
    """Bracket cut-offs (GBP) and marginal rates of a four-band tax.

    Income up to a1 is untaxed; each pound in (a1, a2], (a2, a3], (a3, inf)
    is taxed at p1, p2, p3 respectively.
    """

    a1: float
    a2: float
    a3: float
    p1: float
    p2: float
    p3: float

    def __post_init__(self):
        if not 0.0 < self.a1 < self.a2 < self.a3:
            raise DegenerateInput(
                f"cut-offs must satisfy 0 < a1 < a2 < a3, got "
                f"({self.a1}, {self.a2}, {self.a3})")
        for name in ("p1", "p2", "p3"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise DegenerateInput(f"{name} must be in [0, 1], got {rate}")

    def rate(self, band):
        return getattr(self, f"p{band}")

    def cutoffs(self):
        return (self.a1, self.a2, self.a3)

    def with_rate(self, band, value):
        fields = {"a1": self.a1, "a2": self.a2, "a3": self.a3,
                  "p1": self.p1, "p2": self.p2, "p3": self.p3}
        fields[f"p{band}"] = value
        return TaxSchedule(**fields)


@dataclass(frozen=True)
class KCoefficients:
    """Per-band coefficients of the affine tax-share form.

    tax share = k1*p1 + k2*p2 + k3*p3 holds exactly for any rate triple on
    the population the coefficients were computed from. n1, n2, n3 are the
    taxpayer headcounts of the three taxed brackets and total_income the
    population income sum.
    """

    k1: float
    k2: float
    k3: float
    n1: int
    n2: int
    n3: int
    total_income: float

    def coefficient(self, band):
        return getattr(self, f"k{band}")

    def share(self, rates):
        """Tax share of a rate triple via the linear form."""
        p1, p2, p3 = rates
        return self.k1 * p1 + self.k2 * p2 + self.k3 * p3


def tax_due(income, sched):
    """Tax owed on an income under a schedule; piecewise linear, continuous.

    Zero at or below a1; accepts a scalar or an array.
    """
    x = np.asarray(income, dtype=float)
    due = (sched.p1 * np.clip(np.minimum(x, sched.a2) - sched.a1, 0.0, None)
           + sched.p2 * np.clip(np.minimum(x, sched.a3) - sched.a2, 0.0, None)
           + sched.p3 * np.clip(x - sched.a3, 0.0, None))
    return float(due) if due.ndim == 0 else due


def schedule_2023():
    """The 2023 UK-like schedule: cut-offs at the 2023 pre-tax 1st/85th/95th
    percentile incomes, rates 20/40/45 percent."""
    return TaxSchedule(a1=12800.0, a2=53700.0, a3=90500.0, p1=0.2, p2=0.4, p3=0.45)


def schedule_from_percentiles(series, rates=(0.2, 0.4, 0.45)):
    """Build a schedule with cut-offs at a year's 1st/85th/95th percentiles."""
    p1, p2, p3 = rates
    return TaxSchedule(a1=series.values[0], a2=series.values[84],
                       a3=series.values[94], p1=p1, p2=p2, p3=p3)


def schedule_from_scenario(scenario):
    """Build a schedule from a scenario mapping.

    Expected shape: {"cutoffs": {"a1": .., "a2": .., "a3": ..},
    "rates": {"p1": .., "p2": .., "p3": ..}}.
    """
    try:
        cutoffs = scenario["cutoffs"]
        rates = scenario["rates"]
        return TaxSchedule(a1=float(cutoffs["a1"]), a2=float(cutoffs["a2"]),
                           a3=float(cutoffs["a3"]), p1=float(rates["p1"]),
                           p2=float(rates["p2"]), p3=float(rates["p3"]))
    except (KeyError, TypeError) as exc:
        raise DegenerateInput(f"malformed tax scenario: {exc}") from exc


def tax_share_direct(pop, sched):
    """Total tax over total income, summed member by member."""
    incomes = pop.incomes
    total = float(incomes.sum())
    if total == 0.0:
        raise DegenerateInput("tax share is undefined for zero total income")
    return float(tax_due(incomes, sched).sum()) / total


def k_coefficients(pop, cutoffs):
    """Coefficients making the tax share affine in the rates.

    Each coefficient is the population's aggregate taxable excess in one
    band divided by total income: k_j = sum(min(x, a_{j+1}) - a_j over
    members above a_j) / N. Bracket headcounts use half-open membership
    (a1, a2], (a2, a3], (a3, inf).
    """
    a1, a2, a3 = cutoffs
    if not 0.0 < a1 < a2 < a3:
        raise DegenerateInput(
            f"cut-offs must satisfy 0 < a1 < a2 < a3, got ({a1}, {a2}, {a3})")
    x = pop.incomes
    total = float(x.sum())
    if total == 0.0:
        raise DegenerateInput("K coefficients are undefined for zero total income")
    k1 = float(np.clip(np.minimum(x, a2) - a1, 0.0, None).sum()) / total
    k2 = float(np.clip(np.minimum(x, a3) - a2, 0.0, None).sum()) / total
    k3 = float(np.clip(x - a3, 0.0, None).sum()) / total
    n1 = int(np.count_nonzero((x > a1) & (x <= a2)))
    n2 = int(np.count_nonzero((x > a2) & (x <= a3)))
    n3 = int(np.count_nonzero(x > a3))
    return KCoefficients(k1=k1, k2=k2, k3=k3, n1=n1, n2=n2, n3=n3,
                         total_income=total)


def equivalent_rate_case1(k, base, delta_pk, j, kband):
    """Rate for band j offsetting a delta_pk cut in band kband.

    Compares a reference schedule whose band-kband rate sits delta_pk above
    the baseline against an alternative keeping that band at baseline;
    returns the alternative's band-j rate giving the same tax share:
    p_j + (K_kband / K_j) * delta_pk.
    """
    if j == kband or j not in BANDS or kband not in BANDS:
        raise DegenerateInput(f"need two distinct bands from {BANDS}, got j={j}, k={kband}")
    kj = k.coefficient(j)
    if kj == 0.0:
        raise DegenerateInput(f"band {j} coefficient is zero; no rate can compensate")
    return base.rate(j) + k.coefficient(kband) / kj * delta_pk


def equivalent_rate_case2(k, base, x, y):
    """Band-2 rate matching a reference raise of x in band 1, with the
    alternative's band-3 rate coupled as band-2 rate plus y.

    Returns (K1*x + K2*p2 + K3*(p3 - y)) / (K2 + K3).
    """
    denom = k.k2 + k.k3
    if denom == 0.0:
        raise DegenerateInput("bands 2 and 3 have zero coefficients; no rate can compensate")
    return (k.k1 * x + k.k2 * base.p2 + k.k3 * (base.p3 - y)) / denom


def tax_share_sweep(pop, base, band, rate_range, steps, coupled_gap=None):
    """Tax share on an even grid of one band's rate, other rates fixed.

    With coupled_gap set (band 2 only), band 3 tracks the swept rate at a
    constant offset: p3 = p2 + coupled_gap. Returns a list of (rate, share)
    pairs; every share is computed by direct summation.
    """
    if band not in BANDS:
        raise DegenerateInput(f"band must be one of {BANDS}, got {band}")
    if coupled_gap is not None and band != 2:
        raise DegenerateInput("coupled sweeps vary band 2 with band 3 tracking")
    lo, hi = rate_range
    if not 0.0 <= lo <= hi <= 1.0:
        raise DegenerateInput(f"rate range must lie in [0, 1], got ({lo}, {hi})")
    if steps < 2:
        raise DegenerateInput(f"need at least 2 grid points, got {steps}")
    out = []
    for rate in np.linspace(lo, hi, steps):
        sched = base.with_rate(band, float(rate))
        if coupled_gap is not None:
            sched = sched.with_rate(3, min(1.0, float(rate) + coupled_gap))
        out.append((float(rate), tax_share_direct(pop, sched)))
    return out
