"""Independent reference computations used as test oracles.

Everything here is written in plain Python loops over scalars so it shares
no code path with the vectorised package implementation.
"""

import math

import numpy as np

from solarcast.rnn import RnnDims, RnnParams, init_params


def _rows(a, dtype):
    a = np.asarray(a, dtype=dtype)
    return [list(r) for r in a] if a.ndim == 2 else list(a)


def naive_forward(params, seq, dtype=np.float64):
    """Straight-line unroll of the ReLU recurrence; returns the final output.

    ``dtype=np.longdouble`` runs the same loops in extended precision.
    """
    W_hx, W_hh, b_h, W_yh, b_y = (_rows(a, dtype) for a in params.arrays())
    zero = dtype(0)
    H, D, O = len(b_h), len(W_hx[0]), len(b_y)
    h = [zero] * H
    for x in _rows(seq, dtype):
        z = []
        for i in range(H):
            s = b_h[i]
            for j in range(D):
                s += W_hx[i][j] * x[j]
            for k in range(H):
                s += W_hh[i][k] * h[k]
            z.append(s)
        h = [v if v > 0 else zero for v in z]
    out = []
    for o in range(O):
        s = b_y[o]
        for k in range(H):
            s += W_yh[o][k] * h[k]
        out.append(s)
    return [float(v) for v in out] if dtype is np.float64 else out


def naive_mse(y, p):
    total = 0.0
    for a, b in zip(y, p):
        total += (a - b) ** 2
    return total / len(y)


def naive_loss(params, seq, target, dtype=np.float64):
    target = [dtype(v) for v in np.atleast_1d(target)]
    return naive_mse(target, naive_forward(params, seq, dtype))


def finite_difference_grads(params, seq, target, eps=1e-6):
    """Central differences of the naive loss for every parameter entry.

    The loss is evaluated in extended precision so the differences carry
    truncation error only (~eps**2), not float64 cancellation (~1e-16/eps),
    which would otherwise swamp gradient entries below ~1e-5.
    """
    ld = np.longdouble
    wide = RnnParams(*(np.asarray(a, dtype=ld) for a in params.arrays()))
    step = ld(eps)
    grads = []
    for arr in wide.arrays():
        g = np.zeros(arr.shape)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + step
            up = naive_loss(wide, seq, target, ld)
            arr[idx] = old - step
            down = naive_loss(wide, seq, target, ld)
            arr[idx] = old
            g[idx] = float((up - down) / (2 * step))
        grads.append(g)
    return grads


def max_relative_error(a_list, b_list, floor=1e-8):
    worst = 0.0
    for a, b in zip(a_list, b_list):
        a, b = np.ravel(a), np.ravel(b)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
        worst = max(worst, float(np.max(np.abs(a - b) / denom)))
    return worst


def min_preactivation_margin(params, seq):
    W_hx, W_hh, b_h = params.W_hx, params.W_hh, params.b_h
    h = np.zeros(len(b_h))
    margin = math.inf
    for x in np.asarray(seq):
        z = W_hx @ x + W_hh @ h + b_h
        margin = min(margin, float(np.min(np.abs(z))))
        h = np.maximum(z, 0)
    return margin


def kink_safe_case(seed, max_dim=6, max_T=8, margin=1e-4):
    """Random (params, seq, target) with every pre-activation at least
    ``margin`` away from the ReLU kink; resamples until one is found."""
    rng = np.random.default_rng(seed)
    while True:
        D, H, O = (int(v) for v in rng.integers(1, max_dim + 1, 3))
        T = int(rng.integers(1, max_T + 1))
        params = init_params(RnnDims(D, H, 1, O, T), int(rng.integers(2**31)))
        params.b_h[:] = rng.uniform(-0.5, 0.5, H)
        params.b_y[:] = rng.uniform(-0.5, 0.5, O)
        seq = rng.normal(size=(T, D))
        target = rng.normal(size=O)
        if min_preactivation_margin(params, seq) > margin:
            return params, seq, target


def noaa_zenith(ts, lat, lon):
    """Zenith from the NOAA spreadsheet (Julian-century, Meeus) formulation."""
    jd = ts.timestamp() / 86400.0 + 2440587.5
    jc = (jd - 2451545.0) / 36525.0
    l0 = (280.46646 + jc * (36000.76983 + jc * 0.0003032)) % 360
    m = 357.52911 + jc * (35999.05029 - 0.0001537 * jc)
    e = 0.016708634 - jc * (0.000042037 + 0.0000001267 * jc)
    mr = math.radians(m)
    c = (math.sin(mr) * (1.914602 - jc * (0.004817 + 0.000014 * jc))
         + math.sin(2 * mr) * (0.019993 - 0.000101 * jc) + math.sin(3 * mr) * 0.000289)
    true_long = l0 + c
    omega = 125.04 - 1934.136 * jc
    app_long = true_long - 0.00569 - 0.00478 * math.sin(math.radians(omega))
    eps0 = 23 + (26 + (21.448 - jc * (46.815 + jc * (0.00059 - jc * 0.001813))) / 60) / 60
    eps = eps0 + 0.00256 * math.cos(math.radians(omega))
    decl = math.asin(math.sin(math.radians(eps)) * math.sin(math.radians(app_long)))
    y = math.tan(math.radians(eps / 2)) ** 2
    l0r = math.radians(l0)
    eot = 4 * math.degrees(y * math.sin(2 * l0r) - 2 * e * math.sin(mr)
                           + 4 * e * y * math.sin(mr) * math.cos(2 * l0r)
                           - 0.5 * y * y * math.sin(4 * l0r) - 1.25 * e * e * math.sin(2 * mr))
    minutes = ts.hour * 60 + ts.minute + ts.second / 60
    tst = (minutes + eot + 4 * lon) % 1440
    ha = tst / 4 - 180 if tst / 4 >= 0 else tst / 4 + 180
    latr = math.radians(lat)
    cosz = (math.sin(latr) * math.sin(decl)
            + math.cos(latr) * math.cos(decl) * math.cos(math.radians(ha)))
    return math.degrees(math.acos(max(-1.0, min(1.0, cosz))))


def bird_oracle(zenith, ecf=1.0, ozone=0.3, water=1.5, taua5=0.1, taua3=0.05,
                albedo=0.2, press=1013.0, ba=0.84, k1=0.1):
    """Scalar Bird & Hulstrom (1981) clear-sky model; returns (ghi, direct_h)."""
    if zenith >= 90:
        return 0.0, 0.0
    etr = 1367.0 * ecf
    cz = math.cos(math.radians(zenith))
    am = (cz + 0.15 * (93.885 - zenith) ** -1.253) ** -1
    amp = am * press / 1013.0
    tr = math.exp(-0.0903 * amp ** 0.84 * (1 + amp - amp ** 1.01))
    oz = ozone * am
    to = 1 - 0.1611 * oz * (1 + 139.48 * oz) ** -0.3035 - 0.002715 * oz / (1 + 0.044 * oz + 0.0003 * oz ** 2)
    tum = math.exp(-0.0127 * amp ** 0.26)
    wm = water * am
    tw = 1 - 2.4959 * wm / ((1 + 79.034 * wm) ** 0.6828 + 6.385 * wm)
    tau = 0.2758 * taua3 + 0.35 * taua5
    ta = math.exp(-tau ** 0.873 * (1 + tau - tau ** 0.7088) * am ** 0.9108)
    taa = 1 - k1 * (1 - am + am ** 1.06) * (1 - ta)
    rs = 0.0685 + (1 - ba) * (1 - ta / taa)
    dni = 0.9662 * etr * tr * to * tum * tw * ta
    dh = dni * cz
    das = etr * cz * 0.79 * to * tum * tw * taa * (0.5 * (1 - tr) + ba * (1 - ta / taa)) / (1 - am + am ** 1.02)
    return (dh + das) / (1 - albedo * rs), dh
