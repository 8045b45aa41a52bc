"""Station daily-file parsing.

A daily file has two header lines (station name, then latitude, longitude,
elevation and an optional format version) followed by whitespace-delimited
rows of 48 columns::

    year jday month day hour min dt zen  dw_solar qc  uw_solar qc ... pressure qc

The layout lives in ``DATE_COLUMNS`` and ``FIELDS``; a revision of the format
means editing those tables, not the parser.
"""

from __future__ import annotations

import csv
import math
import os
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO, Union

import numpy as np

from .errors import DataError, EmptyDatasetError, FormatError, OrderingError

DATE_COLUMNS = ("year", "jday", "month", "day", "hour", "minute", "dt", "zen")

# (name, unit) in file order; each is followed by its QC flag column.
FIELDS = (
    ("dw_solar", "W/m2"),
    ("uw_solar", "W/m2"),
    ("direct_n", "W/m2"),
    ("diffuse", "W/m2"),
    ("dw_ir", "W/m2"),
    ("dw_casetemp", "K"),
    ("dw_dometemp", "K"),
    ("uw_ir", "W/m2"),
    ("uw_casetemp", "K"),
    ("uw_dometemp", "K"),
    ("uvb", "mW/m2"),
    ("par", "W/m2"),
    ("netsolar", "W/m2"),
    ("netir", "W/m2"),
    ("totalnet", "W/m2"),
    ("temp_air", "C"),
    ("rh", "%"),
    ("windspd", "m/s"),
    ("winddir", "deg"),
    ("pressure", "mb"),
)
FIELD_NAMES = tuple(name for name, _ in FIELDS)
N_COLUMNS = len(DATE_COLUMNS) + 2 * len(FIELDS)

# Anything at or below this is a missing-value sentinel (-9999.9, -99999, ...).
SENTINEL_THRESHOLD = -9999.0

_VALID_RANGE = {
    "rh": (0.0, 100.0),
    "windspd": (0.0, math.inf),
}


@dataclass(frozen=True)
class SiteMeta:
    site_id: str
    latitude: float
    longitude: float
    elevation: float = 0.0

    def __post_init__(self):
        if not self.site_id:
            raise ValueError("site_id must be non-empty")
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude {self.longitude} outside [-180, 180]")


@dataclass(frozen=True)
class RadiationRecord:
    """One timestamped observation. Absent fields are ``None``.

    ``qc`` holds the raw flag for every field in ``FIELD_NAMES`` order
    (``None`` when the flag itself was not available, e.g. after reading
    a CSV written without flags).
    """

    timestamp: datetime
    dw_solar: Optional[float] = None
    uw_solar: Optional[float] = None
    direct_n: Optional[float] = None
    diffuse: Optional[float] = None
    dw_ir: Optional[float] = None
    dw_casetemp: Optional[float] = None
    dw_dometemp: Optional[float] = None
    uw_ir: Optional[float] = None
    uw_casetemp: Optional[float] = None
    uw_dometemp: Optional[float] = None
    uvb: Optional[float] = None
    par: Optional[float] = None
    netsolar: Optional[float] = None
    netir: Optional[float] = None
    totalnet: Optional[float] = None
    temp_air: Optional[float] = None
    rh: Optional[float] = None
    windspd: Optional[float] = None
    winddir: Optional[float] = None
    pressure: Optional[float] = None
    qc: tuple = field(default=(None,) * len(FIELDS))

    def values(self):
        return tuple(getattr(self, name) for name in FIELD_NAMES)


def _clean_value(name, value, flag):
    if flag != 0 or value <= SENTINEL_THRESHOLD or not math.isfinite(value):
        return None
    if name == "winddir":
        return value % 360.0
    lo, hi = _VALID_RANGE.get(name, (-math.inf, math.inf))
    if not lo <= value <= hi:
        return None
    return value


def _parse_header(lines, source):
    if len(lines) < 1 or not lines[0].strip():
        raise FormatError("missing station name header", 1, source)
    if len(lines) < 2:
        raise FormatError("missing latitude/longitude/elevation header", 2, source)
    tokens = lines[1].split()
    if len(tokens) < 3:
        raise FormatError(
            "expected latitude, longitude and elevation", 2, source)
    try:
        lat, lon, elev = (float(t) for t in tokens[:3])
    except ValueError:
        raise FormatError(f"non-numeric location header {lines[1]!r}", 2, source) from None
    return lines[0].strip(), lat, lon, elev


def parse_day_file(content: Union[str, TextIO], site: SiteMeta, source=None):
    """Parse one daily file into time-ordered :class:`RadiationRecord` objects.

    Sentinel values and any field with a nonzero QC flag become absent;
    flags themselves are kept on the record.

    Raises
    ------
    FormatError
        Malformed header or a row with the wrong number of columns.
    OrderingError
        Timestamps that are not strictly increasing.
    """
    text = content if isinstance(content, str) else content.read()
    lines = text.splitlines()
    _parse_header(lines, source)

    records = []
    previous = None
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        tokens = line.split()
        if len(tokens) != N_COLUMNS:
            raise FormatError(
                f"expected {N_COLUMNS} columns, found {len(tokens)}", lineno, source)
        try:
            year, _jday, month, day, hour, minute = (int(t) for t in tokens[:6])
            numbers = [float(t) for t in tokens[len(DATE_COLUMNS):]]
        except ValueError as exc:
            raise FormatError(f"non-numeric value ({exc})", lineno, source) from None
        try:
            ts = datetime(year, month, day, hour, minute, tzinfo=timezone.utc)
        except ValueError as exc:
            raise FormatError(f"invalid date/time ({exc})", lineno, source) from None
        if previous is not None and ts <= previous:
            raise OrderingError(
                f"{source or '<stream>'}:line {lineno}: timestamp {ts.isoformat()} "
                f"does not follow {previous.isoformat()}")
        previous = ts

        values = {}
        flags = []
        for k, name in enumerate(FIELD_NAMES):
            value, flag = numbers[2 * k], numbers[2 * k + 1]
            flag = int(flag)
            flags.append(flag)
            values[name] = _clean_value(name, value, flag)
        records.append(RadiationRecord(timestamp=ts, qc=tuple(flags), **values))
    return records


def _day_files(root, site, years):
    pattern = re.compile(
        rf"^{re.escape(site.site_id.lower())}(\d{{2}})(\d{{3}})\.dat$", re.IGNORECASE)
    wanted = {y % 100 for y in years}
    found = []
    for path in sorted(Path(root).rglob("*.dat")):
        m = pattern.match(path.name)
        if m and int(m.group(1)) in wanted:
            found.append(path)
    return found


def load_range(root_path, site: SiteMeta, years: Sequence[int]):
    """Load and merge every daily file for ``site`` in ``years``.

    Files are matched by the ``<site><yy><doy>.dat`` naming convention
    anywhere below ``root_path``.
    """
    files = _day_files(root_path, site, years)
    if not files:
        raise EmptyDatasetError(
            f"no daily files for site {site.site_id!r} years {list(years)} under {root_path}")
    records = []
    for path in files:
        with open(path, encoding="ascii", errors="replace") as fh:
            parsed = parse_day_file(fh, site, source=str(path))
        records.extend(r for r in parsed if r.timestamp.year in years)
    records.sort(key=lambda r: r.timestamp)
    for a, b in zip(records, records[1:]):
        if a.timestamp == b.timestamp:
            raise DataError(f"duplicate timestamp {a.timestamp.isoformat()}")
    if not records:
        raise EmptyDatasetError(f"files found but no records in years {list(years)}")
    return records


# -- canonical CSV ---------------------------------------------------------

CSV_HEADER = ("timestamp",) + FIELD_NAMES
QC_HEADER = tuple(f"qc_{name}" for name in FIELD_NAMES)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(text: str) -> datetime:
    ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def write_csv(records: Iterable[RadiationRecord], out, include_qc=False):
    """Write records as canonical CSV; absent values are empty cells.

    With ``include_qc`` the QC flags follow as ``qc_<field>`` columns, which
    makes a write/read round trip lossless.
    """
    own = isinstance(out, (str, os.PathLike))
    fh = open(out, "w", newline="") if own else out
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER + (QC_HEADER if include_qc else ()))
        for rec in records:
            row = [format_timestamp(rec.timestamp)]
            row += ["" if v is None else repr(float(v)) for v in rec.values()]
            if include_qc:
                row += ["" if q is None else str(q) for q in rec.qc]
            writer.writerow(row)
    finally:
        if own:
            fh.close()


def read_csv(source):
    own = isinstance(source, (str, os.PathLike))
    fh = open(source, newline="") if own else source
    try:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header[: len(CSV_HEADER)] != CSV_HEADER:
            raise FormatError("not a canonical observation CSV", 1, str(source))
        has_qc = header[len(CSV_HEADER):] == QC_HEADER
        records = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise FormatError(
                    f"expected {len(header)} cells, found {len(row)}", lineno, str(source))
            values = {
                name: (float(cell) if cell else None)
                for name, cell in zip(FIELD_NAMES, row[1:len(CSV_HEADER)])
            }
            qc = (None,) * len(FIELDS)
            if has_qc:
                qc = tuple(int(c) if c else None for c in row[len(CSV_HEADER):])
            records.append(RadiationRecord(parse_timestamp(row[0]), qc=qc, **values))
    finally:
        if own:
            fh.close()
    return records


# -- array views -----------------------------------------------------------

def to_epoch_minutes(ts: datetime) -> int:
    return int(ts.timestamp() // 60)


def from_epoch_minutes(minute: int) -> datetime:
    return datetime.fromtimestamp(int(minute) * 60, tz=timezone.utc)


def records_to_arrays(records: Sequence[RadiationRecord]):
    """Return ``(minutes, values)``: int64 epoch minutes and an [N, 20]
    float array with NaN for absent fields."""
    minutes = np.fromiter((to_epoch_minutes(r.timestamp) for r in records),
                          dtype=np.int64, count=len(records))
    values = np.array(
        [[np.nan if v is None else v for v in r.values()] for r in records],
        dtype=np.float64).reshape(len(records), len(FIELDS))
    return minutes, values


def arrays_to_records(minutes, values):
    out = []
    for m, row in zip(minutes, values):
        kw = {name: (None if np.isnan(v) else float(v)) for name, v in zip(FIELD_NAMES, row)}
        out.append(RadiationRecord(from_epoch_minutes(m), **kw))
    return out

