"""Weighted nonlinear least-squares estimation of the survival model.

The observed survival probability at the i-th percentile is 1 - i/100;
the fit minimises

    sum_i w_i * ((1 - i/100) - delta * kappa_exp(-beta * x_i^alpha))^2

with weights w_i = (1 - i/100)^-gamma, so larger gamma leans the fit
towards the top of the distribution.

The minimiser is a self-contained Levenberg-Marquardt loop running on an
unconstrained internal parameterisation

    delta = 1 + exp(d),  kappa = 1/(1 + exp(-k)),  alpha = exp(a),  beta = exp(b)

which enforces the open-interval constraints smoothly instead of by
projection.  Percentiles at or below the candidate threshold x_m get a
model survival clamped to 1 (the continuous extension), keeping the
objective defined wherever the optimiser roams.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._util import atomic_write_text, format_float
from .errors import DegenerateInput, ParseError
from .kappa import ModelParams, kappa_exp, kappa_log
from .percentiles import Basis, PercentileSeries
from .rng import SplitMix64

__all__ = [
    "FIT_TABLE_HEADER",
    "FitConfig",
    "FitResult",
    "weights",
    "objective",
    "fit",
    "initial_params",
    "write_fit_table",
    "read_fit_table",
]

_PROBS = (100.0 - np.arange(1, 100)) / 100.0  # observed survival at percentiles 1..99


@dataclass(frozen=True)
class FitConfig:
    """Knobs of the weighted fit; defaults reproduce the standard run."""

    gamma: float = 1.3
    max_iterations: int = 200
    cost_tolerance: float = 1e-12
    param_tolerance: float = 1e-10
    initial: ModelParams | None = None
    multistart: int = 1

    def __post_init__(self):
        if self.gamma < 0.0:
            raise DegenerateInput(f"gamma must be >= 0, got {self.gamma}")
        if self.cost_tolerance <= 0.0 or self.param_tolerance <= 0.0:
            raise DegenerateInput("tolerances must be positive")
        if self.max_iterations < 1:
            raise DegenerateInput("max_iterations must be at least 1")
        if self.multistart < 1:
            raise DegenerateInput("multistart must be at least 1")


@dataclass(frozen=True)
class FitResult:
    params: ModelParams
    weighted_sse: float
    iterations: int
    converged: bool
    residuals: np.ndarray = field(repr=False)  # observed minus fitted survival, length 99


def weights(gamma: float) -> np.ndarray:
    """Percentile weights (1 - i/100)^-gamma for i = 1..99."""
    if gamma < 0.0:
        raise DegenerateInput(f"gamma must be >= 0, got {gamma}")
    return _PROBS ** -gamma


def _model_survival(x: np.ndarray, delta, kappa, alpha, beta) -> np.ndarray:
    # Continuous extension: clamp to 1 at and below the threshold.
    return np.minimum(1.0, delta * kappa_exp(-beta * x ** alpha, kappa))


def objective(params: ModelParams, series: PercentileSeries, gamma: float) -> float:
    """Weighted sum of squared survival residuals for a parameter vector."""
    x = np.asarray(series.values)
    r = _PROBS - _model_survival(x, params.delta, params.kappa, params.alpha, params.beta)
    return float(np.sum(weights(gamma) * r * r))


def initial_params(series: PercentileSeries) -> ModelParams:
    """Scale-aware starting point: shape defaults with beta anchored so the
    model median matches the observed 50th percentile."""
    delta0, kappa0, alpha0 = 1.2, 0.8, 1.8
    x50 = series.values[49]
    beta0 = -kappa_log(0.5 / delta0, kappa0) / x50 ** alpha0
    return ModelParams(delta=delta0, kappa=kappa0, alpha=alpha0, beta=beta0)


# Wild trial steps must saturate inside the open parameter domain instead
# of overflowing exp() or rounding kappa/delta onto a closed boundary; a
# saturated step just yields a bad cost and gets rejected.
_INTERNAL_CLIP = 700.0
_OPEN_EPS = 1e-12


def _expc(v: float) -> float:
    return math.exp(min(max(v, -_INTERNAL_CLIP), _INTERNAL_CLIP))


def _sigmoidc(k: float) -> float:
    if k >= 0.0:
        value = 1.0 / (1.0 + _expc(-k))
    else:
        z = _expc(k)
        value = z / (1.0 + z)
    return min(max(value, _OPEN_EPS), 1.0 - _OPEN_EPS)


def _to_internal(p: ModelParams) -> np.ndarray:
    return np.array([
        math.log(p.delta - 1.0),
        math.log(p.kappa / (1.0 - p.kappa)),
        math.log(p.alpha),
        math.log(p.beta),
    ])


def _unpack_internal(theta: np.ndarray) -> tuple:
    d, k, a, b = theta
    return 1.0 + max(_expc(d), _OPEN_EPS), _sigmoidc(k), _expc(a), _expc(b)


def _from_internal(theta: np.ndarray) -> ModelParams:
    delta, kappa, alpha, beta = _unpack_internal(theta)
    return ModelParams(delta=delta, kappa=kappa, alpha=alpha, beta=beta)


def _residuals_internal(theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    delta, kappa, alpha, beta = _unpack_internal(theta)
    return _PROBS - _model_survival(x, delta, kappa, alpha, beta)


def _jacobian_fd(theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian of the residual vector, relative step 1e-6."""
    jac = np.empty((99, 4))
    for j in range(4):
        h = 1e-6 * max(1.0, abs(theta[j]))
        tp, tm = theta.copy(), theta.copy()
        tp[j] += h
        tm[j] -= h
        jac[:, j] = (_residuals_internal(tp, x) - _residuals_internal(tm, x)) / (2.0 * h)
    return jac


def _lm_minimise(theta0, x, w, config):
    """Damped least squares on the internal parameters.

    Returns (theta, cost, iterations, converged); the cost sequence over
    accepted steps is non-increasing by construction.
    """
    sw = np.sqrt(w)
    theta = theta0.copy()
    r = _residuals_internal(theta, x)
    cost = float(np.sum(w * r * r))
    lam = None
    converged = False
    iterations = 0

    for iterations in range(1, config.max_iterations + 1):
        jac = _jacobian_fd(theta, x) * sw[:, None]
        grad = jac.T @ (sw * r)
        hess = jac.T @ jac
        diag = np.diag(hess).copy()
        diag[diag <= 0.0] = 1e-12
        if lam is None:
            lam = 1e-3 * float(np.max(diag))

        accepted = False
        for _ in range(60):
            try:
                step = np.linalg.solve(hess + lam * np.diag(diag / np.max(diag)), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            r_new = _residuals_internal(theta + step, x)
            cost_new = float(np.sum(w * r_new * r_new))
            if cost_new <= cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break

        rel_decrease = (cost - cost_new) / max(cost, 1e-300)
        rel_step = float(np.max(np.abs(step) / np.maximum(1.0, np.abs(theta))))
        theta = theta + step
        r = r_new
        cost = cost_new
        lam = max(lam / 10.0, 1e-14)
        if rel_decrease < config.cost_tolerance or rel_step < config.param_tolerance:
            converged = True
            break

    return theta, cost, iterations, converged


def fit(series: PercentileSeries, config: FitConfig | None = None) -> FitResult:
    """Estimate the parameter vector for one percentile series.

    Returns the best local minimiser found; `converged` is False when the
    iteration budget ran out before either tolerance was met (the
    best-so-far parameters are still returned).  With multistart > 1 the
    internal starting point is perturbed by +-20% and the lowest-cost
    solution wins; the perturbations come from a fixed-seed stream so
    repeated runs are bitwise identical.
    """
    if config is None:
        config = FitConfig()
    if not isinstance(series, PercentileSeries):
        raise DegenerateInput("fit expects a PercentileSeries")

    x = np.asarray(series.values)
    w = weights(config.gamma)
    start = _to_internal(config.initial if config.initial is not None else initial_params(series))

    starts = [start]
    if config.multistart > 1:
        gen = SplitMix64(0x5EED * (series.year + 1) + (1 if series.basis.value == "post" else 0))
        for _ in range(config.multistart - 1):
            bump = np.array([0.2 * (2.0 * gen.next_uniform() - 1.0) for _ in range(4)])
            starts.append(start * (1.0 + bump))

    best = None
    for theta0 in starts:
        theta, cost, iterations, converged = _lm_minimise(theta0, x, w, config)
        if best is None or cost < best[1]:
            best = (theta, cost, iterations, converged)

    theta, cost, iterations, converged = best
    params = _from_internal(theta)
    residuals = _residuals_internal(theta, x)
    return FitResult(
        params=params,
        weighted_sse=cost,
        iterations=iterations,
        converged=converged,
        residuals=residuals,
    )


FIT_TABLE_HEADER = [
    "year", "basis", "x_m", "delta", "kappa", "alpha", "beta",
    "weighted_sse", "converged",
]


def write_fit_table(path, entries):
    """Write a batch-fit parameter table CSV atomically.

    ``entries`` is an iterable of (year, basis, FitResult); floats are
    rendered with 9 significant digits, the threshold column is the one
    derived from the fitted parameters.
    """
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(FIT_TABLE_HEADER)
    for year, basis, result in entries:
        p = result.params
        writer.writerow([
            year, getattr(basis, "value", basis),
            format_float(p.x_m), format_float(p.delta), format_float(p.kappa),
            format_float(p.alpha), format_float(p.beta),
            format_float(result.weighted_sse),
            "true" if result.converged else "false",
        ])
    atomic_write_text(path, buf.getvalue())


def read_fit_table(path):
    """Read a parameter table CSV into a list of row dicts.

    Each dict has keys year (int), basis (Basis), params (ModelParams),
    weighted_sse (float) and converged (bool); the stored threshold column
    is ignored in favour of the value re-derived from the parameters.
    """
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty") from None
        if [h.strip().lower() for h in header] != FIT_TABLE_HEADER:
            raise ParseError(
                f"{path}: expected header {','.join(FIT_TABLE_HEADER)}, got {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(FIT_TABLE_HEADER):
                raise ParseError(f"{path}:{lineno}: expected {len(FIT_TABLE_HEADER)} columns, "
                                 f"got {len(row)}")
            try:
                year = int(row[0])
                params = ModelParams(delta=float(row[3]), kappa=float(row[4]),
                                     alpha=float(row[5]), beta=float(row[6]))
                sse = float(row[7])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            flag = row[8].strip().lower()
            if flag not in ("true", "false"):
                raise ParseError(f"{path}:{lineno}: converged must be true or false, got {row[8]!r}")
            rows.append({
                "year": year,
                "basis": Basis.parse(row[1]),
                "params": params,
                "weighted_sse": sse,
                "converged": flag == "true",
            })
    return rows
