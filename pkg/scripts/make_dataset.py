"""Scratch: build the bundled annual percentile dataset.

For each (year, basis) series the generator starts from that year's
reference parameter row, applies a designed survival-space residual field
(the systematic misfit the model cannot absorb), inverts it through the
quantile function, rounds to the nearest hundred pounds, and pins the
2023 pre-tax 1st/85th/95th percentiles to their published values.

Two tricks keep the refitted parameters on target:
 * the field is alternately projected onto the orthogonal complement of
   the weighted fit Jacobian and onto the sign-band constraints, so the
   fit cannot absorb it;
 * after rounding, individual values are greedily flipped one grid step
   so the rounding error's component inside the Jacobian span cancels
   (raw rounding noise otherwise drags the flat beta direction by
   several percent).
A damped fixed-point loop then handles what little drift remains.
Not part of the package.
"""

import csv
import math

import numpy as np

from kappa_income import ModelParams, quantile
from kappa_income.fitter import FitConfig, fit, weights, _jacobian_fd, _to_internal
from kappa_income.kappa import kappa_exp
from kappa_income.percentiles import Basis, PercentileSeries
from kappa_income.rng import SplitMix64

REF = "/root/pkg/src/kappa_income/data/uk_reference_fits.csv"
OUT = "/root/pkg/src/kappa_income/data/uk_income_percentiles.csv"

# 2023 pre-tax generator target: the reference row shifted within its fit
# tolerance so the model satisfies the pinned-percentile sign constraints.
THETA_2023_PRE = (1.2980, 0.8521, 1.8060, 1.035e-8)

PINS_2023_PRE = {1: 12800.0, 85: 53700.0, 95: 90500.0}

# Residual field knots (percentile, fitted-minus-observed survival):
# positive at the bottom, a negative trough through the middle and
# upper-middle, positive near the top, negative at the 99th.
KNOTS = [
    (1, 2.2e-3), (2, 1.6e-3), (3, 1.1e-3), (5, 6e-4), (8, 2e-4),
    (12, 0.0), (20, -4e-4), (30, -1.0e-3), (40, -1.6e-3), (50, -2.2e-3),
    (60, -2.5e-3), (70, -2.4e-3), (78, -1.8e-3), (85, -6.6e-4),
    (87, -3e-4), (88.5, 0.0), (90, 4e-4), (92, 6e-4), (95, 6.6e-4),
    (97, 7e-4), (98, 5e-4), (99, -5e-4),
]

IDX = np.arange(1, 100)
SURV = (100 - IDX) / 100.0
BASE_FIELD = np.interp(IDX, [k[0] for k in KNOTS], [k[1] for k in KNOTS])

# Incomes are published to the nearest hundred pounds.
GRID = 100.0

# Sign bands for fitted-minus-observed: +1 must stay positive, -1 negative.
SIGN = np.zeros(99)
SIGN[0:3] = 1.0
SIGN[39:85] = -1.0
SIGN[89:98] = 1.0
SIGN[98] = -1.0

# Margin the shop preserves between a banded residual and zero.
SIGN_BUFFER = 1e-4


def field_start(year, basis):
    """Base shape with a small deterministic per-year wobble."""
    gen = SplitMix64(year * 7 + (0 if basis == Basis.PRE else 1) + 0xABCD)
    ph1 = gen.next_uniform() * 2 * math.pi
    ph2 = gen.next_uniform() * 2 * math.pi
    wobble = 0.12 * np.sin(ph1 + IDX / 13.0) * BASE_FIELD \
        + 8e-5 * np.sin(ph2 + 2 * math.pi * IDX / 41.0)
    return BASE_FIELD + wobble


def survival_at(params, x):
    s = np.minimum(1.0, params.delta * kappa_exp(
        -params.beta * np.asarray(x, float) ** params.alpha, params.kappa))
    return float(s) if s.ndim == 0 else s


def band_floors(p):
    """Per-percentile sign-band floor: base margin plus 125% of the survival
    shift a half-grid rounding move can cause at that point."""
    x0 = np.atleast_1d(quantile(SURV, p))
    h = np.maximum(1.0, x0 * 1e-5)
    dens = np.abs(survival_at(p, x0 + h) - survival_at(p, x0 - h)) / (2 * h)
    return 1.5e-4 + 1.25 * (GRID / 2) * dens


def enforce(r, forced, floors):
    out = np.clip(r, -5e-3, 5e-3)
    for i in np.nonzero(SIGN > 0)[0]:
        out[i] = max(out[i], floors[i])
    for i in np.nonzero(SIGN < 0)[0]:
        out[i] = min(out[i], -floors[i])
    for i, v in forced.items():
        out[i - 1] = v
    return out


def design_field(year, basis, target, pins, floors):
    """Field honouring the sign bands that the weighted fit cannot absorb."""
    p = ModelParams(*target)
    forced = {i: survival_at(p, pins[i]) - SURV[i - 1] for i in pins}
    r = enforce(field_start(year, basis), forced, floors)
    x = np.atleast_1d(quantile(SURV + r, p))
    jac = _jacobian_fd(_to_internal(p), x)
    sw = np.sqrt(weights(1.3))
    a = sw[:, None] * jac
    for _ in range(300):
        coef, *_ = np.linalg.lstsq(a, sw * r, rcond=None)
        r = enforce(r - jac @ coef, forced, floors)
    return r


def round_grid(v):
    return round(v / GRID) * GRID


def shop_rounding(x, theta_g, r, pins):
    """Flip rounded values one grid step so the rounding error has no
    component the fit could absorb into its parameters."""
    p = ModelParams(*theta_g)
    jac = _jacobian_fd(_to_internal(p), x)
    sw = np.sqrt(weights(1.3))
    q, rmat = np.linalg.qr(sw[:, None] * jac)
    # Minimize the predicted internal-parameter drift R^-1 Q^T W^(1/2) e,
    # not the raw span component: flat directions amplify small residual
    # components into large parameter moves.
    rinv = np.linalg.inv(rmat)
    qr_rows = q @ rinv.T
    target_surv = SURV + r
    e = sw * (survival_at(p, x) - target_surv)
    d = rinv @ (q.T @ e)
    locked = {i - 1 for i in pins}
    anchor = x.copy()

    def sign_ok(i, cand):
        if SIGN[i] == 0.0:
            return True
        dev = survival_at(p, np.array(cand)) - SURV[i]
        return SIGN[i] * dev >= SIGN_BUFFER

    def apply(i, cand):
        nonlocal d
        e_new = sw[i] * (survival_at(p, np.array(cand)) - target_surv[i])
        d = d + (e_new - e[i]) * qr_rows[i, :]
        e[i] = e_new
        x[i] = cand

    # Corrective pre-pass: nearest rounding may already cross a band
    # boundary; one step toward the model curve restores the sign.
    for i in range(99):
        if i in locked or SIGN[i] == 0.0 or sign_ok(i, x[i]):
            continue
        cand = x[i] - SIGN[i] * GRID
        if cand > 0 and (i == 0 or cand > x[i - 1]) and (i == 98 or cand < x[i + 1]):
            apply(i, cand)

    for _ in range(60):
        changed = False
        for i in range(99):
            if i in locked:
                continue
            for cand in (x[i] - GRID, x[i] + GRID):
                if cand <= 0 or abs(cand - anchor[i]) > GRID + 1e-9:
                    continue
                if i > 0 and cand <= x[i - 1]:
                    continue
                if i < 98 and cand >= x[i + 1]:
                    continue
                if not sign_ok(i, cand):
                    continue
                e_new = sw[i] * (survival_at(p, np.array(cand)) - target_surv[i])
                d_new = d + (e_new - e[i]) * qr_rows[i, :]
                if d_new @ d_new < d @ d - 1e-24:
                    x[i] = cand
                    d = d_new
                    e[i] = e_new
                    changed = True
        if not changed:
            break
    return x


def generate_series(theta, r, pins, shop=True):
    p = ModelParams(*theta)
    u = SURV + r
    assert np.all(u > 0) and np.all(u < 1), "survival targets left (0,1)"
    x = np.array([round_grid(v) for v in np.atleast_1d(quantile(u, p))])
    for idx, value in pins.items():
        x[idx - 1] = value
    # Nearest-grid rounding can tie adjacent values where spacing dips
    # toward the grid; push the later one up a step.
    pin_idx = {i - 1 for i in pins}
    for i in range(1, 99):
        if x[i] <= x[i - 1] and i not in pin_idx:
            x[i] = x[i - 1] + GRID
    if np.any(np.diff(x) <= 0):
        bad = int(np.argmin(np.diff(x))) + 1
        raise RuntimeError(f"not strictly increasing near percentile {bad}: {x[bad-1]} {x[bad]}")
    if shop:
        x = shop_rounding(x, theta, r, pins)
    return x


def calibrate(year, basis, target, pins):
    """Drive the refitted parameters onto the target by adjusting the generator."""
    r = design_field(year, basis, target, pins, band_floors(ModelParams(*target)))
    theta_g = np.array(target, dtype=float)
    config = FitConfig(initial=ModelParams(*target))
    best = None
    for _ in range(8):
        x = generate_series(theta_g, r, pins)
        series = PercentileSeries(year, basis, x)
        result = fit(series, config)
        got = np.array([result.params.delta, result.params.kappa,
                        result.params.alpha, result.params.beta])
        err = got / np.array(target)
        miss = np.max(np.abs(err - 1.0))
        if best is None or miss < best[0]:
            best = (miss, x, result)
        if miss < 2e-4:
            break
        theta_g = theta_g / np.sqrt(err)
    return best


def main():
    rows = []
    with open(REF) as fh:
        ref = list(csv.DictReader(fh))
    report_lines = []
    worst_overall = (0.0, None)
    fitted_plc = {}
    for row in ref:
        year = int(row["year"])
        basis = Basis.parse(row["basis"])
        table = (float(row["delta"]), float(row["kappa"]),
                 float(row["alpha"]), float(row["beta"]))
        is_2023_pre = year == 2023 and basis == Basis.PRE
        target = THETA_2023_PRE if is_2023_pre else table
        pins = PINS_2023_PRE if is_2023_pre else {}
        miss, x, result = calibrate(year, basis, target, pins)
        if miss > worst_overall[0]:
            worst_overall = (miss, (year, basis.value))
        fitted_plc[(year, basis)] = result.params.alpha / result.params.kappa
        for i, v in zip(IDX, x):
            rows.append((year, basis.value, int(i), v))
        if is_2023_pre:
            p = result.params
            rel = np.array([p.delta, p.kappa, p.alpha, p.beta, p.x_m]) / np.array(
                [table[0], table[1], table[2], table[3], float(row["x_m"])]) - 1
            report_lines.append(f"2023 pre fitted vs table: {np.round(rel * 100, 3)} % (cap 5%)")
            fo = survival_at(p, x) - SURV
            bands = {
                "1-3 (+)": fo[0:3], "40-85 (-)": fo[39:85],
                "90-98 (+)": fo[89:98], "99 (-)": fo[98:99],
            }
            for name, seg in bands.items():
                report_lines.append(
                    f"  band {name}: min|r|={np.min(np.abs(seg)):.2e} "
                    f"sign ok={bool(np.all(seg > 0) if '+' in name else np.all(seg < 0))}")
            report_lines.append(f"  pin survivals: S(12800)={survival_at(p, 12800):.5f} "
                                f"S(53700)={survival_at(p, 53700):.5f} "
                                f"S(90500)={survival_at(p, 90500):.5f}")
            report_lines.append(f"  converged={result.converged} sse={result.weighted_sse:.3e} "
                                f"miss={miss:.2e}")

    with open(OUT, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "basis", "percentile", "income"])
        for year, basis, pct, v in rows:
            writer.writerow([year, basis, pct, int(v) if v == int(v) else v])

    print(f"wrote {len(rows)} rows; worst refit miss {worst_overall[0]:.2e} at {worst_overall[1]}")
    for line in report_lines:
        print(line)
    pre_years = sorted(y for (y, b) in fitted_plc if b == Basis.PRE)
    pre_plc = [fitted_plc[(y, Basis.PRE)] for y in pre_years]
    slope = np.polyfit(pre_years, pre_plc, 1)[0]
    print(f"pre-tax fitted plc slope: {slope:.5f} (want < 0)")


if __name__ == "__main__":
    main()
