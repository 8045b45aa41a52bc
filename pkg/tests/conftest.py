from pathlib import Path

import numpy as np
import pytest

from solarcast.ingest import SiteMeta

FIXTURES = Path(__file__).parent / "fixtures"
SURFRAD = FIXTURES / "surfrad"
BON = SiteMeta("BON", 40.05, -88.37, 213.0)


@pytest.fixture
def bon():
    return BON


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def day_row(ts, values, flags=None):
    """Format one 48-column daily-file row for ``ts`` (a datetime)."""
    flags = flags or [0] * len(values)
    jday = ts.timetuple().tm_yday
    head = (f" {ts.year} {jday:3d} {ts.month:2d} {ts.day:2d} {ts.hour:02d} {ts.minute:02d} "
            f"{ts.hour + ts.minute / 60:6.3f}  45.00")
    body = "".join(f" {float(v):.4f} {f}" for v, f in zip(values, flags))
    return head + body


def day_file(rows, name="Bondville", location="  40.05  -88.37  213 version 1"):
    return "\n".join([name, location] + list(rows)) + "\n"


def write_day_files(directory, minutes, values, prefix="bon"):
    """Write ``[N, 20]`` minute values as one daily file per UTC day."""
    from datetime import datetime, timezone
    directory.mkdir(parents=True, exist_ok=True)
    stamps = [datetime.fromtimestamp(int(m) * 60, tz=timezone.utc) for m in minutes]
    by_day = {}
    for ts, row in zip(stamps, values):
        by_day.setdefault(ts.date(), []).append(day_row(ts, row))
    paths = []
    for d, rows in by_day.items():
        path = directory / f"{prefix}{d.year % 100:02d}{d.timetuple().tm_yday:03d}.dat"
        path.write_text(day_file(rows))
        paths.append(path)
    return paths
