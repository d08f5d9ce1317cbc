"""Scratch: search for a 2023 pre-tax generator parameter vector whose
model satisfies the pinned-percentile survival constraints with margin,
while staying within 4.5% of the published-table row. Not part of the
package."""

import numpy as np

from kappa_income import ModelParams, kappa_exp

T = np.array([1.2698, 0.8209, 1.7979, 1.02e-8])  # delta, kappa, alpha, beta
XM_T = 12567.56
A1, A2, A3 = 12800.0, 53700.0, 90500.0


def surv(x, p):
    return float(np.minimum(1.0, p.delta * kappa_exp(-p.beta * x ** p.alpha, p.kappa)))


def evaluate(mult):
    d, k, a, b = T * mult
    if not (k < 1.0):
        return None
    p = ModelParams(d, k, a, b)
    if abs(p.x_m / XM_T - 1.0) > 0.045:
        return None
    mA = surv(A1, p) - 0.99
    mB = 0.15 - surv(A2, p)
    mC = surv(A3, p) - 0.05
    return p, mA, mB, mC


rng = np.random.default_rng(7)
best = None
lo = np.array([0.960, 0.958, 0.978, 0.985])
hi = np.array([1.042, 1.038, 1.022, 1.015])


def score_of(out):
    p, mA, mB, mC = out
    return min(mA / 0.004, mB / 0.0012, mC / 0.0012)


for trial in range(200000):
    mult = lo + (hi - lo) * rng.random(4)
    out = evaluate(mult)
    if out is None:
        continue
    s = score_of(out)
    if best is None or s > best[0]:
        best = (s, mult.copy()) + out

for radius in (0.01, 0.003, 0.001, 0.0003):
    for trial in range(40000):
        mult = np.clip(best[1] + radius * rng.standard_normal(4), lo, hi)
        out = evaluate(mult)
        if out is None:
            continue
        s = score_of(out)
        if s > best[0]:
            best = (s, mult.copy()) + out

score, mult, p, mA, mB, mC = best
print(f"score={score:.3f}  mult={np.round(mult, 4)}")
print(f"params: delta={p.delta:.4f} kappa={p.kappa:.4f} alpha={p.alpha:.4f} beta={p.beta:.3e}")
print(f"xm={p.x_m:.1f} ({p.x_m / XM_T - 1:+.3%})")
print(f"S(a1)={surv(A1, p):.5f} (mA={mA:+.5f})")
print(f"S(a2)={surv(A2, p):.5f} (mB={mB:+.5f})")
print(f"S(a3)={surv(A3, p):.5f} (mC={mC:+.5f})")
print(f"plc={p.alpha / p.kappa:.4f} (table {T[2] / T[1]:.4f})")
