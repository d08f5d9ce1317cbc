"""Heavy-tailed income toolkit: percentile ingestion, survival-model
fitting, population simulation, inequality metrics and bracket-tax
analysis."""

from .errors import (
    DegenerateInput,
    DomainError,
    KappaIncomeError,
    ParseError,
    ValidationError,
)
from .kappa import (
    ModelParams,
    kappa_exp,
    kappa_log,
    power_law_coefficient,
    quantile,
    survival_modified,
    survival_standard,
    threshold_xm,
)
from .percentiles import Basis, Dataset, PercentileSeries, load_dataset, save_dataset, survival_points
from .fitter import (
    FitConfig,
    FitResult,
    fit,
    initial_params,
    objective,
    read_fit_table,
    weights,
    write_fit_table,
)
from .rng import SplitMix64, uniform_open01
from .sampler import Population, load_population, sample_population, save_population
from .inequality import (
    InequalityReport,
    decile_shares,
    gini,
    income_share,
    theil,
    top_shares,
)
from .tax import (
    KCoefficients,
    TaxSchedule,
    equivalent_rate_case1,
    equivalent_rate_case2,
    k_coefficients,
    schedule_2023,
    schedule_from_percentiles,
    schedule_from_scenario,
    tax_due,
    tax_share_direct,
    tax_share_sweep,
)

__version__ = "0.1.0"
