"""Clear-sky index features, gap filling, normalisation and windowing.

Series are carried as parallel numpy arrays keyed by integer UTC epoch
minutes. A frame may have holes (missing minutes); every window operation
checks contiguity explicitly instead of assuming a gapless grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (ConfigurationError, DegenerateFeatureError, FormatError, ShapeError,
                     UnusableFeatureError)
from .ingest import FIELD_NAMES, records_to_arrays

FEATURE_NAMES = FIELD_NAMES + ("ghi_clear", "kt_i")
N_FEATURES = len(FEATURE_NAMES)
GHI_CLEAR_INDEX = FEATURE_NAMES.index("ghi_clear")
KT_INDEX = FEATURE_NAMES.index("kt_i")
DW_SOLAR_INDEX = FEATURE_NAMES.index("dw_solar")

MINUTES_PER_HOUR = 60

# fill provenance codes
OBSERVED, INTERPOLATED, MEAN_FILLED = 0, 1, 2


@dataclass(frozen=True)
class FeatureConfig:
    ghi_floor: float = 10.0
    kt_max: float = 2.0
    gap_max: int = 10
    seq_len: int = 60
    std_floor: float = 1e-8
    horizons: tuple = (1, 2, 3, 4)
    stride: int = 1

    def __post_init__(self):
        if self.ghi_floor <= 0:
            raise ConfigurationError("ghi_floor must be > 0")
        if self.kt_max <= 0:
            raise ConfigurationError("kt_max must be > 0")
        if self.gap_max < 0:
            raise ConfigurationError("gap_max must be >= 0")
        if self.seq_len < 1:
            raise ConfigurationError("seq_len must be >= 1")
        if self.std_floor <= 0:
            raise ConfigurationError("std_floor must be > 0")
        if self.stride < 1:
            raise ConfigurationError("stride must be >= 1")
        check_horizons(self.horizons)


def check_horizons(horizons):
    horizons = tuple(int(h) for h in horizons)
    if not horizons or any(h < 1 for h in horizons) or len(set(horizons)) != len(horizons):
        raise ConfigurationError(f"horizons must be distinct positive hours, got {horizons}")
    return horizons


# -- clear-sky index -------------------------------------------------------

def compute_kt(dw_solar, ghi_clear, ghi_floor=10.0, kt_max=2.0):
    """Instantaneous clear-sky index ``dw_solar / ghi_clear`` clipped to
    ``[0, kt_max]``.

    Where ``ghi_clear`` is below ``ghi_floor`` (or either input is NaN) the
    result is NaN, which downstream code treats as "excluded".
    """
    dw = np.asarray(dw_solar, dtype=np.float64)
    cs = np.asarray(ghi_clear, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        kt = np.clip(dw / cs, 0.0, kt_max)
    kt = np.where(cs >= ghi_floor, kt, np.nan)
    return float(kt) if kt.ndim == 0 else kt


def average_kt(kt, minutes, end_minute):
    """Mean of the 60 one-minute values in the hour ending at ``end_minute``
    (inclusive). Returns NaN when any of those minutes is missing or NaN."""
    minutes = np.asarray(minutes)
    kt = np.asarray(kt, dtype=np.float64)
    start = end_minute - MINUTES_PER_HOUR + 1
    lo = np.searchsorted(minutes, start)
    hi = np.searchsorted(minutes, end_minute, side="right")
    window = kt[lo:hi]
    if hi - lo != MINUTES_PER_HOUR or np.isnan(window).any():
        return float("nan")
    return float(window.mean())


# -- gap filling -----------------------------------------------------------

@dataclass
class ImputedSeries:
    minutes: np.ndarray      # [N] int64, strictly increasing
    values: np.ndarray       # [N, 20]
    provenance: np.ndarray   # [N, 20] uint8: OBSERVED / INTERPOLATED / MEAN_FILLED
    feature_means: np.ndarray


def _regrid_short_gaps(minutes, values, gap_max):
    """Insert empty rows for missing minutes in runs no longer than
    ``gap_max``; longer holes in the timeline stay holes."""
    if len(minutes) < 2:
        return minutes, values
    steps = np.diff(minutes)
    fill = (steps > 1) & (steps - 1 <= gap_max)
    if not fill.any():
        return minutes, values
    extra = [np.arange(minutes[i] + 1, minutes[i + 1]) for i in np.flatnonzero(fill)]
    all_minutes = np.concatenate([minutes] + extra)
    order = np.argsort(all_minutes, kind="stable")
    grown = np.full((len(all_minutes), values.shape[1]), np.nan)
    grown[: len(minutes)] = values
    return all_minutes[order], grown[order]


def impute_arrays(minutes, values, train_years=None, gap_max=10, names=FIELD_NAMES):
    """Fill absent cells column by column.

    Missing minutes inside holes of at most ``gap_max`` minutes are first
    inserted as empty rows. Runs of at most ``gap_max`` missing minutes
    bounded by observations on both sides are then linearly interpolated in
    time; every other missing cell gets the column mean over rows in
    ``train_years`` (all rows when ``None``).
    """
    minutes = np.asarray(minutes, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or len(values) != len(minutes):
        raise ShapeError("values must be [len(minutes), n_fields]")
    if len(minutes) > 1 and (np.diff(minutes) <= 0).any():
        raise ShapeError("minutes must be strictly increasing")
    minutes, values = _regrid_short_gaps(minutes, values.copy(), gap_max)
    if train_years is None:
        train_rows = np.ones(len(minutes), dtype=bool)
    else:
        train_rows = np.isin(years_of(minutes), list(train_years))

    provenance = np.zeros(values.shape, dtype=np.uint8)
    means = np.full(values.shape[1], np.nan)
    for j in range(values.shape[1]):
        col = values[:, j]
        present = ~np.isnan(col)
        if not present.any():
            raise UnusableFeatureError(names[j])
        train_present = present & train_rows
        means[j] = col[train_present].mean() if train_present.any() else col[present].mean()
        if present.all():
            continue
        missing = ~present
        idx = np.flatnonzero(present)
        prev_obs = np.maximum.accumulate(np.where(present, np.arange(len(col)), -1))
        next_obs = np.minimum.accumulate(
            np.where(present, np.arange(len(col)), len(col))[::-1])[::-1]
        bounded = missing & (prev_obs >= 0) & (next_obs < len(col))
        span = np.where(bounded,
                        minutes[np.minimum(next_obs, len(col) - 1)]
                        - minutes[np.maximum(prev_obs, 0)] - 1, np.iinfo(np.int64).max)
        interp = bounded & (span <= gap_max)
        if interp.any():
            col[interp] = np.interp(minutes[interp], minutes[idx], col[idx])
            provenance[interp, j] = INTERPOLATED
        rest = missing & ~interp
        col[rest] = means[j]
        provenance[rest, j] = MEAN_FILLED
    return ImputedSeries(minutes, values, provenance, means)


def impute(records, train_years: Optional[Sequence[int]] = None, gap_max=10):
    """Gap-fill a time-sorted list of records (see :func:`impute_arrays`).

    ``train_years`` restricts the mean used for long gaps to those years.
    """
    minutes, values = records_to_arrays(records)
    return impute_arrays(minutes, values, train_years, gap_max)


def years_of(minutes):
    minutes = np.asarray(minutes, dtype=np.int64)
    return minutes.astype("datetime64[m]").astype("datetime64[Y]").astype(np.int64) + 1970


# -- feature frame ---------------------------------------------------------

@dataclass
class FeatureFrame:
    """The 22-column feature table on (possibly holed) 1-minute timestamps.

    ``valid`` marks rows usable in a window: every feature finite and the
    clear-sky index defined.
    """

    minutes: np.ndarray
    X: np.ndarray
    valid: np.ndarray

    @property
    def kt(self):
        return self.X[:, KT_INDEX]

    @property
    def ghi_clear(self):
        return self.X[:, GHI_CLEAR_INDEX]

    def __len__(self):
        return len(self.minutes)


def align_clearsky(minutes, cs_minutes, cs_ghi):
    """Clear-sky GHI looked up at ``minutes``; NaN where not provided."""
    cs_minutes = np.asarray(cs_minutes, dtype=np.int64)
    pos = np.searchsorted(cs_minutes, minutes)
    pos_c = np.minimum(pos, len(cs_minutes) - 1)
    hit = (pos < len(cs_minutes)) & (cs_minutes[pos_c] == minutes)
    return np.where(hit, np.asarray(cs_ghi, dtype=np.float64)[pos_c], np.nan)


def build_features(series: ImputedSeries, ghi_clear, config: FeatureConfig = FeatureConfig()):
    """Append clear-sky GHI and the clear-sky index to the imputed fields.

    The index is left undefined where the observed GHI was mean-filled, so
    long outages never produce synthetic targets.
    """
    ghi_clear = np.asarray(ghi_clear, dtype=np.float64)
    if ghi_clear.shape != series.minutes.shape:
        raise ShapeError("ghi_clear must align with the series minutes")
    dw = series.values[:, DW_SOLAR_INDEX]
    kt = compute_kt(dw, ghi_clear, config.ghi_floor, config.kt_max)
    kt = np.where(series.provenance[:, DW_SOLAR_INDEX] == MEAN_FILLED, np.nan, kt)
    X = np.column_stack([series.values, ghi_clear, kt])
    valid = np.isfinite(X).all(axis=1)
    return FeatureFrame(series.minutes, X, valid)


# -- windows ---------------------------------------------------------------

@dataclass
class WindowedSample:
    inputs: np.ndarray       # [seq_len, 22]
    targets: np.ndarray      # [H]
    anchor_time: int         # epoch minute of the last input step
    kt_anchor: float
    clearsky: np.ndarray     # [H] mean clear-sky GHI over each target hour


@dataclass
class Windows:
    """A batch of supervised windows stored column-wise.

    ``targets`` are in whatever scale ``normalized`` says; ``kt_targets``
    always keeps the physical hour-mean clear-sky index.
    """

    inputs: np.ndarray
    targets: np.ndarray
    anchors: np.ndarray
    kt_anchor: np.ndarray
    clearsky: np.ndarray
    kt_targets: np.ndarray
    horizons: tuple
    normalized: bool = False

    def __len__(self):
        return len(self.anchors)

    def __getitem__(self, index):
        if isinstance(index, (int, np.integer)):
            return WindowedSample(self.inputs[index], self.targets[index],
                                  int(self.anchors[index]), float(self.kt_anchor[index]),
                                  self.clearsky[index])
        return replace(self, inputs=self.inputs[index], targets=self.targets[index],
                       anchors=self.anchors[index], kt_anchor=self.kt_anchor[index],
                       clearsky=self.clearsky[index], kt_targets=self.kt_targets[index])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def seq_len(self):
        return self.inputs.shape[1]

    def select_horizons(self, horizons):
        cols = [self.horizons.index(h) for h in horizons]
        return replace(self, targets=self.targets[:, cols], clearsky=self.clearsky[:, cols],
                       kt_targets=self.kt_targets[:, cols], horizons=tuple(horizons))

    @classmethod
    def empty(cls, seq_len, horizons, n_features=N_FEATURES):
        h = len(horizons)
        return cls(np.zeros((0, seq_len, n_features)), np.zeros((0, h)),
                   np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros((0, h)),
                   np.zeros((0, h)), tuple(horizons))


def _window_complete(minutes, valid_cum, end, length):
    """For end indices ``end``: are rows end-length+1..end contiguous in time
    and all valid?"""
    start = end - length + 1
    ok = start >= 0
    s = np.maximum(start, 0)
    ok &= (minutes[end] - minutes[s]) == length - 1
    ok &= (valid_cum[end + 1] - valid_cum[s]) == length
    return ok


def build_windows(frame: FeatureFrame, seq_len=60, horizons=(1, 2, 3, 4), stride=1):
    """Enumerate supervised windows.

    A sample is anchored at minute ``t`` (its last input step) when the
    ``seq_len`` minutes ending at ``t`` and, for each horizon ``h``, the 60
    minutes ending at ``t + 60 h`` are all present and valid. With
    ``stride > 1`` only anchors on minutes divisible by ``stride`` are kept.
    """
    horizons = check_horizons(horizons)
    minutes = np.asarray(frame.minutes, dtype=np.int64)
    n = len(minutes)
    if n == 0 or n < seq_len:
        return Windows.empty(seq_len, horizons, frame.X.shape[1])
    valid_cum = np.concatenate([[0], np.cumsum(frame.valid, dtype=np.int64)])

    anchors = np.arange(n)
    ok = _window_complete(minutes, valid_cum, anchors, seq_len)
    if stride > 1:
        ok &= minutes % stride == 0
    ends = np.empty((n, len(horizons)), dtype=np.int64)
    for k, h in enumerate(horizons):
        target_minute = minutes + MINUTES_PER_HOUR * h
        j = np.searchsorted(minutes, target_minute)
        jc = np.minimum(j, n - 1)
        ok &= (j < n) & (minutes[jc] == target_minute)
        ok &= _window_complete(minutes, valid_cum, jc, MINUTES_PER_HOUR)
        ends[:, k] = jc
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        return Windows.empty(seq_len, horizons, frame.X.shape[1])

    X = frame.X
    hist = sliding_window_view(X, seq_len, axis=0)          # [n-seq_len+1, 22, seq_len]
    inputs = np.ascontiguousarray(hist[idx - seq_len + 1].transpose(0, 2, 1))
    kt_hour = sliding_window_view(X[:, KT_INDEX], MINUTES_PER_HOUR).mean(axis=1)
    cs_hour = sliding_window_view(X[:, GHI_CLEAR_INDEX], MINUTES_PER_HOUR).mean(axis=1)
    e = ends[idx] - (MINUTES_PER_HOUR - 1)
    targets = kt_hour[e]
    clearsky = cs_hour[e]
    return Windows(inputs, targets, minutes[idx].copy(), X[idx, KT_INDEX].copy(),
                   clearsky, targets.copy(), horizons)


# -- normalisation ---------------------------------------------------------

@dataclass
class NormStats:
    feature_mean: np.ndarray
    feature_std: np.ndarray
    target_mean: np.ndarray
    target_std: np.ndarray
    horizons: tuple
    std_floor: float = 1e-8

    def __post_init__(self):
        for name in ("feature_std", "target_std"):
            std = np.asarray(getattr(self, name))
            if (std < self.std_floor).any():
                raise DegenerateFeatureError(f"{name} below std_floor {self.std_floor}")

    def select(self, horizons):
        cols = [self.horizons.index(h) for h in horizons]
        return replace(self, target_mean=self.target_mean[cols],
                       target_std=self.target_std[cols], horizons=tuple(horizons))

    def normalize_inputs(self, x):
        return (x - self.feature_mean) / self.feature_std

    def normalize_targets(self, y):
        return (y - self.target_mean) / self.target_std

    def denormalize_targets(self, y):
        return y * self.target_std + self.target_mean

    def denormalize_inputs(self, x):
        return x * self.feature_std + self.feature_mean


def zscore_stats(values, std_floor=1e-8, names=None):
    """Column means and population standard deviations over axis 0.

    Raises :class:`DegenerateFeatureError` for any column whose spread is
    below ``std_floor``.
    """
    values = np.asarray(values, dtype=np.float64)
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    bad = np.flatnonzero(std < std_floor)
    if bad.size:
        label = [names[i] for i in bad] if names is not None else bad.tolist()
        raise DegenerateFeatureError(f"constant feature(s) {label}: std below {std_floor}")
    return mean, std


def fit_norm_stats(windows: Windows, std_floor=1e-8):
    if windows.normalized:
        raise ConfigurationError("statistics must be fitted on physical-unit windows")
    if len(windows) == 0:
        raise ConfigurationError("cannot fit normalisation on an empty set")
    names = FEATURE_NAMES if windows.inputs.shape[2] == N_FEATURES else None
    f_mean, f_std = zscore_stats(windows.inputs.reshape(-1, windows.inputs.shape[2]),
                                 std_floor, names)
    t_mean, t_std = zscore_stats(windows.targets, std_floor,
                                 [f"kt_a({h}h)" for h in windows.horizons])
    return NormStats(f_mean, f_std, t_mean, t_std, windows.horizons, std_floor)


def normalize(windows: Windows, stats: NormStats):
    if windows.normalized:
        raise ConfigurationError("windows are already normalised")
    stats = stats.select(windows.horizons)
    return replace(windows, inputs=stats.normalize_inputs(windows.inputs),
                   targets=stats.normalize_targets(windows.targets), normalized=True)


def denormalize(values, stats: NormStats):
    """Map normalised target values back to clear-sky index units."""
    return stats.denormalize_targets(np.asarray(values, dtype=np.float64))


# -- train/test split ------------------------------------------------------

@dataclass
class DatasetSplit:
    train: Windows
    test: Windows
    norm: NormStats
    train_years: tuple = ()
    test_years: tuple = ()
    meta: dict = field(default_factory=dict)


def split_by_year(windows: Windows, train_years, test_years, std_floor=1e-8):
    """Partition by the UTC year of each anchor, fit statistics on the
    training part and normalise both parts with them."""
    train_years, test_years = tuple(sorted(train_years)), tuple(sorted(test_years))
    if set(train_years) & set(test_years):
        raise ConfigurationError(
            f"train years {train_years} overlap test years {test_years}")
    if not train_years:
        raise ConfigurationError("no training years given")
    year = years_of(windows.anchors)
    train = windows[np.isin(year, train_years)]
    test = windows[np.isin(year, test_years)]
    if len(train) == 0:
        raise ConfigurationError(f"no samples anchored in training years {train_years}")
    stats = fit_norm_stats(train, std_floor)
    return DatasetSplit(normalize(train, stats), normalize(test, stats), stats,
                        train_years, test_years)


# -- dataset bundle --------------------------------------------------------

DATASET_FORMAT = "solarcast-dataset/1"


def save_dataset(path, split: DatasetSplit, manifest: Optional[dict] = None):
    """Write a split as a single ``.npz`` bundle with a JSON manifest entry."""
    meta = dict(split.meta)
    meta.update(manifest or {})
    meta.update(format=DATASET_FORMAT, horizons=list(split.norm.horizons),
                train_years=list(split.train_years), test_years=list(split.test_years),
                seq_len=int(split.train.seq_len), feature_names=list(FEATURE_NAMES),
                std_floor=split.norm.std_floor)
    arrays = {"manifest": np.array(json.dumps(meta, sort_keys=True))}
    for part in ("train", "test"):
        w = getattr(split, part)
        for name in ("inputs", "targets", "anchors", "kt_anchor", "clearsky", "kt_targets"):
            arrays[f"{part}_{name}"] = getattr(w, name)
    for name in ("feature_mean", "feature_std", "target_mean", "target_std"):
        arrays[f"norm_{name}"] = getattr(split.norm, name)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_dataset(path):
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["manifest"]))
        if meta.get("format") != DATASET_FORMAT:
            raise FormatError(f"unsupported dataset format {meta.get('format')!r}",
                              source=str(path))
        horizons = tuple(meta["horizons"])
        norm = NormStats(z["norm_feature_mean"], z["norm_feature_std"],
                         z["norm_target_mean"], z["norm_target_std"], horizons,
                         meta["std_floor"])
        parts = {}
        for part in ("train", "test"):
            parts[part] = Windows(*(z[f"{part}_{n}"] for n in (
                "inputs", "targets", "anchors", "kt_anchor", "clearsky", "kt_targets")),
                horizons=horizons, normalized=True)
    return DatasetSplit(parts["train"], parts["test"], norm, tuple(meta["train_years"]),
                        tuple(meta["test_years"]), meta)
