"""Stage composition used by the command line and the acceptance suite."""

from __future__ import annotations

from datetime import date

import numpy as np

from . import synthetic
from .clearsky import AtmosParams, clearsky_series
from .features import (DatasetSplit, FeatureConfig, align_clearsky, build_features,
                       build_windows, impute_arrays, split_by_year)
from .ingest import FIELD_NAMES, SiteMeta, records_to_arrays


def split_from_arrays(minutes, values, ghi_clear, config: FeatureConfig, train_years,
                      test_years) -> DatasetSplit:
    series = impute_arrays(minutes, values, train_years, config.gap_max)
    if len(series.minutes) != len(minutes):
        ghi_clear = align_clearsky(series.minutes, minutes, ghi_clear)
        # clear-sky for regridded minutes is interpolated; it is smooth in time
        gaps = np.isnan(ghi_clear)
        if gaps.any():
            ok = ~gaps
            ghi_clear[gaps] = np.interp(series.minutes[gaps], series.minutes[ok], ghi_clear[ok])
    frame = build_features(series, ghi_clear, config)
    windows = build_windows(frame, config.seq_len, config.horizons, config.stride)
    split = split_by_year(windows, train_years, test_years, config.std_floor)
    split.meta.update(ghi_floor=config.ghi_floor, kt_max=config.kt_max, gap_max=config.gap_max,
                      stride=config.stride)
    return split


def split_from_records(records, cs_minutes, cs_ghi, config: FeatureConfig, train_years,
                       test_years) -> DatasetSplit:
    minutes, values = records_to_arrays(records)
    ghi_clear = align_clearsky(minutes, cs_minutes, cs_ghi)
    return split_from_arrays(minutes, values, ghi_clear, config, train_years, test_years)


def synthetic_days(train_start: date, train_days: int, test_start: date, test_days: int):
    return (synthetic.day_range(train_start, train_days),
            synthetic.day_range(test_start, test_days))


def synthetic_split(site: SiteMeta, config: FeatureConfig, *, seed=0,
                    train_start=date(2010, 5, 1), train_days=90,
                    test_start=date(2009, 5, 1), test_days=30,
                    atmos=AtmosParams()) -> DatasetSplit:
    """Generate synthetic observations and turn them into a split, with the
    training and test days each forming their own set of years."""
    train, test = synthetic_days(train_start, train_days, test_start, test_days)
    train_years = sorted({d.year for d in train})
    test_years = sorted({d.year for d in test})
    minutes, values, ghi_clear = synthetic.generate(train + test, site, seed, atmos)
    split = split_from_arrays(minutes, values, ghi_clear, config, train_years, test_years)
    split.meta.update(synthetic_seed=seed, site_id=site.site_id)
    return split


def clearsky_for_records(records, site: SiteMeta, atmos: AtmosParams = AtmosParams()):
    minutes, values = records_to_arrays(records)
    pressure = values[:, FIELD_NAMES.index("pressure")]
    return (minutes,) + clearsky_series(minutes, site, atmos, pressure)


def daily_means(minutes, dw_solar, ghi_clear):
    """Per-UTC-day means of observed and clear-sky GHI: ``(days, obs, clear)``.

    NaN observations are skipped; the clear-sky mean uses the same minutes.
    """
    days = np.asarray(minutes, dtype=np.int64) // 1440
    ok = np.isfinite(dw_solar) & np.isfinite(ghi_clear)
    uniq, inv = np.unique(days[ok], return_inverse=True)
    counts = np.bincount(inv)
    obs = np.bincount(inv, weights=np.asarray(dw_solar)[ok]) / counts
    clear = np.bincount(inv, weights=np.asarray(ghi_clear)[ok]) / counts
    return uniq, obs, clear
