"""Scratch exploration: analytic tax-share coefficients for candidate
parameter vectors, and feasibility of the residual-pattern constraints.
Not part of the package."""

import numpy as np

from kappa_income import ModelParams, kappa_exp

A1, A2, A3 = 12800.0, 53700.0, 90500.0


def surv(x, p):
    return np.minimum(1.0, p.delta * kappa_exp(-p.beta * np.asarray(x, float) ** p.alpha, p.kappa))


def survival_integral(params, lo, hi, n=200001):
    x = np.exp(np.linspace(np.log(lo), np.log(hi), n))
    s = surv(x, params)
    return float(np.trapezoid(s * x, np.log(x)))


def tail_integral(params, lo):
    big = 1e10
    c = params.alpha / params.kappa
    amp = params.delta * (2 * params.kappa * params.beta) ** (-1.0 / params.kappa)
    rem = amp * big ** (1.0 - c) / (c - 1.0)
    return survival_integral(params, lo, big) + rem


def k_analytic(params):
    mu = params.x_m + tail_integral(params, params.x_m * (1 + 1e-12))
    k1 = survival_integral(params, A1, A2) / mu
    k2 = survival_integral(params, A2, A3) / mu
    k3 = tail_integral(params, A3) / mu
    return mu, k1, k2, k3


def report(tag, params):
    mu, k1, k2, k3 = k_analytic(params)
    s1, s85, s95 = surv(A1, params), surv(A2, params), surv(A3, params)
    print(f"{tag}: mu={mu:9.2f}  K=({k1:.4f},{k2:.4f},{k3:.4f})  K1/K3={k1 / k3:.4f}  "
          f"S(a1)={s1:.5f} S(a2)={s85:.5f} S(a3)={s95:.5f}  xm={params.x_m:.1f}")
    return np.array([k1, k2, k3, k1 / k3, s1, s85, s95])


table = ModelParams(1.2698, 0.8209, 1.7979, 1.02e-8)
base = report("table 2023 pre ", table)

for name, p in [
    ("delta +1%     ", ModelParams(1.2698 * 1.01, 0.8209, 1.7979, 1.02e-8)),
    ("kappa +1%     ", ModelParams(1.2698, 0.8209 * 1.01, 1.7979, 1.02e-8)),
    ("alpha +1%     ", ModelParams(1.2698, 0.8209, 1.7979 * 1.01, 1.02e-8)),
    ("beta  +1%     ", ModelParams(1.2698, 0.8209, 1.7979, 1.02e-8 * 1.01)),
]:
    v = report(name, p)
    print(f"   d(K1,K2,K3,ratio,S1,S85,S95) = {np.round(v - base, 5)}")
