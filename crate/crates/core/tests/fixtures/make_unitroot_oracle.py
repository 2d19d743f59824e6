"""Reference unit-root statistics computed with statsmodels, arch and pmdarima.

Regenerate with `python3 make_unitroot_oracle.py > unitroot_oracle.json`.
The Rust implementations are checked against this file; the numbers here
never come from the crate itself.
"""
import json
import math

import numpy as np
from arch.unitroot import KPSS, PhillipsPerron
from pmdarima.arima.seasonality import OCSBTest
from statsmodels.tsa.stattools import kpss

rng = np.random.default_rng(20240611)


def seasonal_walk(n, m):
    x = np.zeros(n)
    e = rng.standard_normal(n)
    for t in range(n):
        x[t] = (x[t - m] if t >= m else 0.0) + e[t]
    return x


def seasonal_ar(n, m, phi):
    x = np.zeros(n)
    e = rng.standard_normal(n)
    for t in range(n):
        x[t] = (phi * x[t - m] if t >= m else 0.0) + e[t]
    return x


def ar1(n, phi):
    x = np.zeros(n)
    e = rng.standard_normal(n)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + e[t]
    return x


cases = []
for i in range(50):
    kind = i % 7
    n = int(rng.integers(40, 320))
    if kind == 0:
        x, m = rng.standard_normal(n), 4
    elif kind == 1:
        x, m = np.cumsum(rng.standard_normal(n)), 4
    elif kind == 2:
        x, m = 0.05 * np.arange(n) + rng.standard_normal(n), 12
    elif kind == 3:
        x, m = seasonal_walk(n, 4), 4
    elif kind == 4:
        x, m = seasonal_walk(max(n, 80), 12), 12
    elif kind == 5:
        x, m = seasonal_ar(n, 4, 0.5) + 3.0, 4
    else:
        x, m = ar1(n, float(rng.uniform(-0.8, 0.95))), 12
    x = np.asarray(x, dtype=float)
    n = len(x)

    kpss_sm = kpss(x, regression="ct", nlags=1)[0]
    kpss_arch = KPSS(x, lags=1, trend="ct").stat
    assert abs(kpss_sm - kpss_arch) < 1e-10
    level_lags = int(math.trunc(3.0 * math.sqrt(n) / 13.0))
    kpss_level = kpss(x, regression="c", nlags=level_lags)[0]
    pp = PhillipsPerron(x, lags=1, trend="c", test_type="rho").stat
    ocsb = OCSBTest(m=m, lag_method="fixed", max_lag=1)
    ocsb_stat = float(ocsb._compute_test_statistic(x))
    cases.append(
        {
            "values": [float(v) for v in x],
            "period": m,
            "kpss_trend_lag1": float(kpss_sm),
            "kpss_level_lags": level_lags,
            "kpss_level": float(kpss_level),
            "pp_z_alpha": float(pp),
            "ocsb_stat": ocsb_stat,
            "ocsb_crit": float(OCSBTest._calc_ocsb_crit_val(m)),
        }
    )

print(json.dumps({"cases": cases}))
