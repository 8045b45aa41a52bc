"""Solar geometry and the Bird & Hulstrom simplified clear-sky model.

Solar position uses the closed-form fractional-year series (declination,
equation of time and the Earth-Sun distance factor). Accuracy is a few
tenths of a degree in zenith, which is enough for a clear-sky index where
the error cancels between training and evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from .errors import FormatError, RangeError
from .ingest import (SiteMeta, format_timestamp, from_epoch_minutes, parse_timestamp,
                     to_epoch_minutes)

SOLAR_CONSTANT = 1367.0  # W/m2
STANDARD_PRESSURE = 1013.0  # mb

_MIN_YEAR, _MAX_YEAR = 1950, 2100


@dataclass(frozen=True)
class SolarPosition:
    zenith: float
    earth_sun_distance_factor: float
    day_of_year: int
    timestamp: Optional[datetime] = None


@dataclass(frozen=True)
class AtmosParams:
    ozone: float = 0.3
    precipitable_water: float = 1.5
    aod_500nm: float = 0.1
    aod_380nm: float = 0.05
    ground_albedo: float = 0.2
    pressure: float = STANDARD_PRESSURE

    def __post_init__(self):
        if not self.ozone > 0:
            raise ValueError("ozone must be > 0 atm-cm")
        if not self.precipitable_water > 0:
            raise ValueError("precipitable_water must be > 0 cm")
        if self.aod_500nm < 0 or self.aod_380nm < 0:
            raise ValueError("aerosol optical depths must be >= 0")
        if not 0.0 <= self.ground_albedo <= 1.0:
            raise ValueError("ground_albedo must lie in [0, 1]")
        if not self.pressure > 0:
            raise ValueError("pressure must be > 0 mb")


@dataclass(frozen=True)
class ClearSkyPoint:
    timestamp: Optional[datetime]
    ghi_clear: float
    direct_h: float
    diffuse_h: float


def _check_years(years):
    years = np.asarray(years)
    if years.size and (years.min() < _MIN_YEAR or years.max() > _MAX_YEAR):
        raise RangeError(
            f"solar position is only valid for years {_MIN_YEAR}-{_MAX_YEAR}")


def solar_position_arrays(minutes, latitude, longitude):
    """Vectorised solar position for UTC epoch minutes (fractions allowed).

    Returns ``(zenith_deg, distance_factor, day_of_year)`` arrays.
    """
    minutes = np.asarray(minutes, dtype=np.float64)
    days = np.floor(minutes / 1440.0)
    minute_of_day = minutes - days * 1440.0
    day0 = days.astype(np.int64).astype("datetime64[D]")
    year_start = day0.astype("datetime64[Y]")
    year = year_start.astype(np.int64) + 1970
    _check_years(year)
    doy = (day0 - year_start.astype("datetime64[D]")).astype(np.int64) + 1
    leap = ((year % 4 == 0) & (year % 100 != 0)) | (year % 400 == 0)
    days_in_year = np.where(leap, 366.0, 365.0)

    hour = minute_of_day / 60.0
    gamma = 2.0 * np.pi / days_in_year * (doy - 1 + (hour - 12.0) / 24.0)
    eqtime = 229.18 * (0.000075 + 0.001868 * np.cos(gamma) - 0.032077 * np.sin(gamma)
                       - 0.014615 * np.cos(2 * gamma) - 0.040849 * np.sin(2 * gamma))
    decl = (0.006918 - 0.399912 * np.cos(gamma) + 0.070257 * np.sin(gamma)
            - 0.006758 * np.cos(2 * gamma) + 0.000907 * np.sin(2 * gamma)
            - 0.002697 * np.cos(3 * gamma) + 0.00148 * np.sin(3 * gamma))

    true_solar_minutes = minute_of_day + eqtime + 4.0 * longitude
    hour_angle = np.radians(true_solar_minutes / 4.0 - 180.0)
    lat = math.radians(latitude)
    cosz = np.sin(lat) * np.sin(decl) + np.cos(lat) * np.cos(decl) * np.cos(hour_angle)
    zenith = np.degrees(np.arccos(np.clip(cosz, -1.0, 1.0)))

    day_angle = 2.0 * np.pi * (doy - 1) / days_in_year
    distance_factor = (1.000110 + 0.034221 * np.cos(day_angle) + 0.001280 * np.sin(day_angle)
                       + 0.000719 * np.cos(2 * day_angle) + 0.000077 * np.sin(2 * day_angle))
    return zenith, distance_factor, doy


def solar_position(timestamp: datetime, site: SiteMeta) -> SolarPosition:
    if timestamp.tzinfo is None:
        timestamp = timestamp.replace(tzinfo=timezone.utc)
    if not _MIN_YEAR <= timestamp.year <= _MAX_YEAR:
        raise RangeError(
            f"{timestamp.isoformat()} outside the {_MIN_YEAR}-{_MAX_YEAR} validity window")
    zen, ecf, doy = solar_position_arrays(
        np.array([timestamp.timestamp() / 60.0]), site.latitude, site.longitude)
    return SolarPosition(float(zen[0]), float(ecf[0]), int(doy[0]), timestamp)


def bird_arrays(zenith, distance_factor, ozone=0.3, precipitable_water=1.5,
                aod_500nm=0.1, aod_380nm=0.05, ground_albedo=0.2,
                pressure=STANDARD_PRESSURE, forward_scatter=0.84, aerosol_absorption=0.1):
    """Bird & Hulstrom clear-sky irradiance on broadcast arrays.

    Returns ``(ghi, direct_horizontal, diffuse_horizontal)`` in W/m2; all three
    are zero wherever the zenith is at or beyond 90 degrees.
    """
    zenith = np.asarray(zenith, dtype=np.float64)
    shape = np.broadcast(zenith, distance_factor, ozone, precipitable_water,
                         aod_500nm, aod_380nm, ground_albedo, pressure).shape
    zenith = np.broadcast_to(zenith, shape)
    day = zenith < 90.0

    ghi = np.zeros(shape)
    direct = np.zeros(shape)
    diffuse = np.zeros(shape)
    if not day.any():
        return ghi, direct, diffuse

    def pick(v):
        return np.broadcast_to(np.asarray(v, dtype=np.float64), shape)[day]

    z = zenith[day]
    cosz = np.cos(np.radians(z))
    etr = SOLAR_CONSTANT * pick(distance_factor)
    ozone, water = pick(ozone), pick(precipitable_water)
    tau500, tau380 = pick(aod_500nm), pick(aod_380nm)
    albedo, press = pick(ground_albedo), pick(pressure)

    airmass = 1.0 / (cosz + 0.15 * (93.885 - z) ** -1.253)
    am_p = airmass * press / 1013.0

    t_rayleigh = np.exp(-0.0903 * am_p ** 0.84 * (1.0 + am_p - am_p ** 1.01))
    x_o = ozone * airmass
    t_ozone = (1.0 - 0.1611 * x_o * (1.0 + 139.48 * x_o) ** -0.3035
               - 0.002715 * x_o / (1.0 + 0.044 * x_o + 0.0003 * x_o ** 2))
    t_gases = np.exp(-0.0127 * am_p ** 0.26)
    x_w = water * airmass
    t_water = 1.0 - 2.4959 * x_w / ((1.0 + 79.034 * x_w) ** 0.6828 + 6.385 * x_w)
    tau_a = 0.2758 * tau380 + 0.35 * tau500
    t_aerosol = np.exp(-tau_a ** 0.873 * (1.0 + tau_a - tau_a ** 0.7088) * airmass ** 0.9108)
    t_aa = 1.0 - aerosol_absorption * (1.0 - airmass + airmass ** 1.06) * (1.0 - t_aerosol)
    t_as = t_aerosol / t_aa
    # the empirical fits leave [0, 1] at extreme air mass
    t_rayleigh, t_ozone, t_gases, t_water, t_aerosol, t_aa, t_as = (
        np.clip(t, 0.0, 1.0)
        for t in (t_rayleigh, t_ozone, t_gases, t_water, t_aerosol, t_aa, t_as))

    direct_normal = 0.9662 * etr * t_rayleigh * t_ozone * t_gases * t_water * t_aerosol
    direct_h = direct_normal * cosz
    scattered = (etr * cosz * 0.79 * t_ozone * t_gases * t_water * t_aa
                 * (0.5 * (1.0 - t_rayleigh) + forward_scatter * (1.0 - t_as))
                 / (1.0 - airmass + airmass ** 1.02))
    sky_albedo = 0.0685 + (1.0 - forward_scatter) * (1.0 - t_as)
    total = (direct_h + scattered) / (1.0 - albedo * sky_albedo)

    ghi[day] = total
    direct[day] = direct_h
    diffuse[day] = total - direct_h
    return ghi, direct, diffuse


def bird_ghi(pos: SolarPosition, atmos: AtmosParams = AtmosParams()) -> ClearSkyPoint:
    ghi, direct, diffuse = bird_arrays(
        pos.zenith, pos.earth_sun_distance_factor, atmos.ozone, atmos.precipitable_water,
        atmos.aod_500nm, atmos.aod_380nm, atmos.ground_albedo, atmos.pressure)
    return ClearSkyPoint(pos.timestamp, float(ghi), float(direct), float(diffuse))


def clearsky_series(minutes, site: SiteMeta, atmos: AtmosParams = AtmosParams(), pressure=None):
    """Clear-sky components for every epoch minute in ``minutes``.

    ``pressure`` may be an array of measured station pressure (NaN where
    absent); absent entries fall back to ``atmos.pressure``.
    """
    zenith, ecf, _ = solar_position_arrays(minutes, site.latitude, site.longitude)
    press = atmos.pressure
    if pressure is not None:
        pressure = np.asarray(pressure, dtype=np.float64)
        press = np.where(np.isfinite(pressure) & (pressure > 0), pressure, atmos.pressure)
    return bird_arrays(zenith, ecf, atmos.ozone, atmos.precipitable_water, atmos.aod_500nm,
                       atmos.aod_380nm, atmos.ground_albedo, press)


CLEARSKY_HEADER = ("timestamp", "ghi_clear", "direct_h", "diffuse_h")


def write_clearsky_csv(path, minutes, ghi, direct, diffuse):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CLEARSKY_HEADER) + "\n")
        for m, g, b, d in zip(minutes, ghi, direct, diffuse):
            fh.write(f"{format_timestamp(from_epoch_minutes(m))},{float(g)!r},{float(b)!r},{float(d)!r}\n")


def read_clearsky_csv(path):
    """Return ``(minutes, ghi, direct, diffuse)`` arrays."""
    minutes, cols = [], []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != CLEARSKY_HEADER:
            raise FormatError("not a clear-sky CSV", 1, str(path))
        for lineno, line in enumerate(fh, start=2):
            parts = line.strip().split(",")
            if len(parts) != 4:
                raise FormatError("expected 4 cells", lineno, str(path))
            minutes.append(to_epoch_minutes(parse_timestamp(parts[0])))
            cols.append([float(p) for p in parts[1:]])
    arr = np.array(cols, dtype=np.float64).reshape(-1, 3)
    return np.array(minutes, dtype=np.int64), arr[:, 0], arr[:, 1], arr[:, 2]
