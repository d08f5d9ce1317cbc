"""Deformed exponential/logarithm pair and the heavy-tailed survival model.

The survival model is Weibull-like at low incomes and decays as a power
law with exponent alpha/kappa in the upper tail.  The prefactor-adjusted
variant multiplies the tail by delta > 1 and is therefore only defined
above a positive threshold income ``x_m`` where the expression equals 1.

All functions accept scalars or numpy arrays and return the same shape.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "ModelParams",
    "kappa_exp",
    "kappa_log",
    "threshold_xm",
    "survival_standard",
    "survival_modified",
    "quantile",
    "power_law_coefficient",
]


def _check_kappa(kappa):
    if not 0.0 < kappa < 1.0:
        raise DomainError(f"kappa must lie in (0, 1), got {kappa}")


def kappa_exp(x, kappa):
    """Deformed exponential (sqrt(1 + k^2 x^2) + k x)^(1/k).

    Equals 1 at x = 0, is strictly increasing, and satisfies
    kappa_exp(x) * kappa_exp(-x) = 1.  For x < 0 the base is evaluated
    as 1 / (sqrt(1 + k^2 x^2) + k|x|) to avoid the cancellation in
    sqrt(1 + k^2 x^2) - k|x| at large |x|.
    """
    _check_kappa(kappa)
    x = np.asarray(x, dtype=float)
    root = np.sqrt(1.0 + (kappa * x) ** 2)
    base = np.where(x >= 0.0, root + kappa * x, 1.0 / (root + kappa * np.abs(x)))
    out = base ** (1.0 / kappa)
    return float(out) if out.ndim == 0 else out


def kappa_log(x, kappa):
    """Deformed logarithm (x^k - x^-k) / (2k), the inverse of kappa_exp.

    Defined for x > 0 only.
    """
    _check_kappa(kappa)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise DomainError("kappa_log requires x > 0")
    t = x ** kappa
    out = (t - 1.0 / t) / (2.0 * kappa)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ModelParams:
    """Parameter vector of the prefactor-adjusted survival model.

    delta > 1 is the tail prefactor, kappa in (0, 1) controls how fast
    the exponential decay turns into a power law, alpha > 0 is the shape
    and beta > 0 the rate (units GBP^-alpha).  The threshold ``x_m``
    below which the model is undefined is derived once and cached.
    """

    delta: float
    kappa: float
    alpha: float
    beta: float
    x_m: float = field(init=False, compare=False)

    def __post_init__(self):
        if not self.delta > 1.0:
            raise DomainError(f"delta must exceed 1, got {self.delta}")
        _check_kappa(self.kappa)
        if not self.alpha > 0.0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not self.beta > 0.0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        xm = (-kappa_log(1.0 / self.delta, self.kappa) / self.beta) ** (1.0 / self.alpha)
        if not (math.isfinite(xm) and xm > 0.0):
            raise DomainError(f"derived threshold is not a positive finite number: {xm}")
        object.__setattr__(self, "x_m", xm)

    def to_dict(self) -> dict:
        # x_m is emitted for human inspection only; from_dict ignores it.
        return {
            "delta": self.delta,
            "kappa": self.kappa,
            "alpha": self.alpha,
            "beta": self.beta,
            "x_m": self.x_m,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(delta=d["delta"], kappa=d["kappa"], alpha=d["alpha"], beta=d["beta"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))


def threshold_xm(params: ModelParams) -> float:
    """Threshold income above which the prefactor-adjusted model is defined."""
    return params.x_m


def survival_standard(x, kappa, alpha, beta):
    """Survival probability kappa_exp(-beta * x^alpha) of the standard model."""
    _check_kappa(kappa)
    if not (alpha > 0.0 and beta > 0.0):
        raise DomainError(f"alpha and beta must be positive, got {alpha}, {beta}")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise DomainError("survival_standard requires x > 0")
    out = kappa_exp(-beta * x ** alpha, kappa)
    return float(out) if np.ndim(out) == 0 else out


def survival_modified(x, params: ModelParams):
    """Survival probability delta * kappa_exp(-beta * x^alpha), x > x_m only."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= params.x_m):
        raise DomainError(
            f"modified survival is undefined at or below the threshold {params.x_m:.6g}"
        )
    out = params.delta * kappa_exp(-params.beta * x ** params.alpha, params.kappa)
    return float(out) if np.ndim(out) == 0 else out


def quantile(u, params: ModelParams):
    """Invert the modified survival function at survival probability u.

    u is the probability of exceeding the returned income, drawn from the
    open interval (0, 1); the endpoints are rejected because the inverse
    diverges at 0 and meets the threshold at 1.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise DomainError("survival probability must lie strictly inside (0, 1)")
    lk = kappa_log(u / params.delta, params.kappa)
    out = (-lk / params.beta) ** (1.0 / params.alpha)
    return float(out) if np.ndim(out) == 0 else out


def power_law_coefficient(params: ModelParams) -> float:
    """Asymptotic tail exponent alpha/kappa; smaller means a heavier top tail."""
    return params.alpha / params.kappa
