"""Deterministic synthetic station data.

The clear-sky curve comes from the Bird model at the given site; an
Ornstein-Uhlenbeck cloud process (plus a weak afternoon dip and minute-scale
flicker) attenuates it. The remaining nineteen fields are derived from the
irradiance, a diurnal temperature cycle and a few slow random processes, so
every column is non-constant and physically plausible.
"""

from __future__ import annotations

from datetime import date, timedelta

import numpy as np
from scipy.signal import lfilter

from .clearsky import AtmosParams, clearsky_series, solar_position_arrays
from .ingest import FIELD_NAMES, SiteMeta

MINUTES_PER_DAY = 1440
DEFAULT_SITE = SiteMeta("BON", 40.05, -88.37, 213.0)


def _ou(rng, n, tau, sd, start=0.0):
    """Discrete OU process with unit time step, correlation time ``tau``."""
    phi = np.exp(-1.0 / tau)
    innov = rng.standard_normal(n) * sd * np.sqrt(1.0 - phi ** 2)
    innov[0] += phi * start
    return lfilter([1.0], [1.0, -phi], innov)


def _day_minutes(days):
    days = sorted(set(days))
    blocks = []
    for d in days:
        start = np.datetime64(d.isoformat(), "m").astype(np.int64)
        blocks.append(np.arange(start, start + MINUTES_PER_DAY, dtype=np.int64))
    return np.concatenate(blocks) if blocks else np.zeros(0, dtype=np.int64)


def day_range(start: date, n_days: int):
    return [start + timedelta(days=i) for i in range(n_days)]


def generate(days, site: SiteMeta = DEFAULT_SITE, seed: int = 0, atmos=AtmosParams(),
             cloud_tau=120.0, cloud_sd=0.22, flicker_sd=0.05):
    """Synthetic minute observations for ``days``.

    Returns ``(minutes, values, ghi_clear)``: ``values`` is ``[N, 20]`` in
    :data:`~solarcast.ingest.FIELD_NAMES` order and ``ghi_clear`` is the
    clear-sky curve the generator attenuated.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    minutes = _day_minutes(days)
    n = len(minutes)
    minute_of_day = minutes % MINUTES_PER_DAY
    local_hour = (minute_of_day / 60.0 + site.longitude / 15.0) % 24.0

    pressure = 1013.0 * np.exp(-site.elevation / 8434.5) + _ou(rng, n, 600.0, 2.5)
    zenith, _, _ = solar_position_arrays(minutes, site.latitude, site.longitude)
    cosz = np.cos(np.radians(zenith))
    ghi_clear, _, _ = clearsky_series(minutes, site, atmos, pressure)

    cloud = _ou(rng, n, cloud_tau, cloud_sd)
    afternoon = 0.12 * np.exp(-0.5 * ((local_hour - 15.0) / 2.0) ** 2)
    kt_slow = np.clip(0.72 + cloud - afternoon, 0.05, 1.15)
    kt = np.clip(kt_slow + flicker_sd * rng.standard_normal(n), 0.0, 1.25)

    dw_solar = kt * ghi_clear
    diffuse = dw_solar * np.clip(0.12 + 0.75 * (1.0 - np.minimum(kt, 1.0)), 0.0, 1.0)
    direct_n = (dw_solar - diffuse) / np.maximum(cosz, 0.087)
    uw_solar = dw_solar * (0.2 + 0.01 * rng.standard_normal(n))

    temp_air = (16.0 + _ou(rng, n, 2000.0, 4.0)
                + 7.0 * np.sin(2 * np.pi * (local_hour - 9.0) / 24.0)
                + 3.0 * dw_solar / 1000.0)
    t_k = temp_air + 273.15
    dw_ir = 300.0 + 70.0 * (1.0 - kt_slow) + 1.5 * (temp_air - 16.0) + 2.0 * rng.standard_normal(n)
    uw_ir = 0.98 * 5.670374e-8 * (t_k + 2.0 * dw_solar / 1000.0) ** 4
    dw_casetemp = t_k + 0.3 * rng.standard_normal(n)
    dw_dometemp = dw_casetemp + 0.2 + 0.05 * rng.standard_normal(n)
    uw_casetemp = t_k + 0.5 + 0.3 * rng.standard_normal(n)
    uw_dometemp = uw_casetemp + 0.2 + 0.05 * rng.standard_normal(n)
    uvb = 0.06 * dw_solar * (1.0 + 0.03 * rng.standard_normal(n))
    par = 0.46 * dw_solar * (1.0 + 0.02 * rng.standard_normal(n))
    netsolar = dw_solar - uw_solar
    netir = dw_ir - uw_ir
    totalnet = netsolar + netir
    rh = np.clip(55.0 - 2.0 * (temp_air - 16.0) + 25.0 * (1.0 - kt_slow)
                 + 2.0 * rng.standard_normal(n), 3.0, 100.0)
    windspd = np.abs(3.0 + _ou(rng, n, 180.0, 1.5))
    winddir = (220.0 + 40.0 * _ou(rng, n, 720.0, 1.0)) % 360.0

    columns = dict(
        dw_solar=dw_solar, uw_solar=uw_solar, direct_n=direct_n, diffuse=diffuse,
        dw_ir=dw_ir, dw_casetemp=dw_casetemp, dw_dometemp=dw_dometemp, uw_ir=uw_ir,
        uw_casetemp=uw_casetemp, uw_dometemp=uw_dometemp, uvb=uvb, par=par,
        netsolar=netsolar, netir=netir, totalnet=totalnet, temp_air=temp_air, rh=rh,
        windspd=windspd, winddir=winddir, pressure=pressure)
    values = np.column_stack([columns[name] for name in FIELD_NAMES])
    return minutes, values, ghi_clear


TOY_SEED = 7
# Pinned by halving from 1.0, which drives every hidden unit dead and stalls
# at MSE ~7.7; 0.5 with TOY_TRAIN_SEED fits to ~1e-33 in 5000 full-batch epochs.
TOY_LEARNING_RATE = 0.5
TOY_TRAIN_SEED = 42


def toy_problem(n=10, input_dim=4, seq_len=5, output_dim=1, seed=TOY_SEED):
    """Small random regression problem ``(X [n, T, D], y [n, O])`` for capacity
    checks: a network with a handful of hidden units should fit it exactly."""
    rng = np.random.Generator(np.random.PCG64(seed))
    X = rng.standard_normal((n, seq_len, input_dim))
    y = rng.uniform(-1.0, 1.0, (n, output_dim))
    return X, y
