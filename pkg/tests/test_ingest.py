import io
import json
import shutil
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from solarcast.errors import DataError, EmptyDatasetError, FormatError, OrderingError
from solarcast.ingest import (FIELD_NAMES, N_COLUMNS, SiteMeta,
                              arrays_to_records, format_timestamp, load_range,
                              parse_day_file, parse_timestamp, read_csv,
                              records_to_arrays, write_csv)

from conftest import BON, SURFRAD, day_file, day_row


def _golden(path):
    doc = json.loads(path.read_text())
    assert tuple(doc["fields"]) == FIELD_NAMES
    return doc["records"]


def _assert_matches_golden(records, golden):
    assert len(records) == len(golden)
    for rec, want in zip(records, golden):
        assert format_timestamp(rec.timestamp) == want["timestamp"]
        assert list(rec.values()) == want["values"]
        assert list(rec.qc) == want["qc"]


def test_layout_has_48_columns():
    assert N_COLUMNS == 48


def test_three_row_fixture_matches_golden():
    path = SURFRAD / "three_rows" / "bon10172.dat"
    records = parse_day_file(path.read_text(), BON, source=str(path))
    _assert_matches_golden(records, _golden(SURFRAD / "three_rows" / "bon10172.golden.json"))


def test_uvb_sentinel_is_absent():
    path = SURFRAD / "three_rows" / "bon10172.dat"
    records = parse_day_file(path.read_text(), BON)
    assert records[1].uvb is None
    assert records[0].uvb == 55.3


def test_nonzero_qc_marks_field_absent():
    records = parse_day_file((SURFRAD / "three_rows" / "bon10172.dat").read_text(), BON)
    assert records[2].rh is None
    assert records[2].qc[FIELD_NAMES.index("rh")] == 2


def test_truncated_line_names_the_line():
    path = SURFRAD / "bad" / "bon10172_truncated.dat"
    with pytest.raises(FormatError) as info:
        parse_day_file(path.read_text(), BON, source=str(path))
    assert info.value.lineno == 5
    assert "line 5" in str(info.value)


def test_bad_header():
    with pytest.raises(FormatError) as info:
        parse_day_file((SURFRAD / "bad" / "bad_header.dat").read_text(), BON)
    assert info.value.lineno == 2


def test_repeated_timestamp_is_ordering_error():
    with pytest.raises(OrderingError):
        parse_day_file((SURFRAD / "bad" / "bon10172_repeated.dat").read_text(), BON)


def test_file_object_input():
    with open(SURFRAD / "three_rows" / "bon10172.dat") as fh:
        assert len(parse_day_file(fh, BON)) == 3


def test_consecutive_days_concatenate():
    records = load_range(SURFRAD / "consecutive", BON, [2009])
    per_file = [len(parse_day_file(p.read_text(), BON))
                for p in sorted((SURFRAD / "consecutive").glob("*.dat"))]
    assert len(records) == sum(per_file) == 5
    _assert_matches_golden(records, _golden(SURFRAD / "consecutive" / "golden.json"))


def test_year_filter(tmp_path):
    with pytest.raises(EmptyDatasetError):
        load_range(SURFRAD / "consecutive", BON, [2010])


def test_empty_directory(tmp_path):
    with pytest.raises(EmptyDatasetError):
        load_range(tmp_path, BON, [2009, 2010])


def test_other_site_files_ignored(tmp_path):
    shutil.copy(SURFRAD / "three_rows" / "bon10172.dat", tmp_path / "psu10172.dat")
    with pytest.raises(EmptyDatasetError):
        load_range(tmp_path, BON, [2010])


def test_overlap_is_data_error():
    with pytest.raises(DataError):
        load_range(SURFRAD / "overlap", BON, [2009])


@pytest.mark.parametrize("path", sorted(SURFRAD.rglob("*.dat")), ids=lambda p: p.name)
def test_parsing_is_total(path):
    try:
        records = parse_day_file(path.read_text(), BON, source=str(path))
    except (FormatError, OrderingError):
        return
    stamps = [r.timestamp for r in records]
    assert all(a < b for a, b in zip(stamps, stamps[1:]))


def test_csv_round_trip_with_qc(tmp_path):
    records = load_range(SURFRAD / "consecutive", BON, [2009])
    out = tmp_path / "obs.csv"
    write_csv(records, out, include_qc=True)
    assert read_csv(out) == records


def test_csv_round_trip_without_qc_keeps_values():
    records = parse_day_file((SURFRAD / "three_rows" / "bon10172.dat").read_text(), BON)
    buf = io.StringIO()
    write_csv(records, buf)
    back = read_csv(io.StringIO(buf.getvalue()))
    assert [r.values() for r in back] == [r.values() for r in records]
    assert [r.timestamp for r in back] == [r.timestamp for r in records]


def test_arrays_round_trip():
    records = load_range(SURFRAD / "consecutive", BON, [2009])
    minutes, values = records_to_arrays(records)
    assert values.shape == (5, 20)
    assert np.isnan(values[2, FIELD_NAMES.index("uvb")])
    assert list(np.diff(minutes)) == [3, 3, 1, 1]
    back = arrays_to_records(minutes, values)
    assert [r.values() for r in back] == [r.values() for r in records]


def test_timestamp_text_round_trip():
    ts = datetime(2011, 12, 31, 23, 59, tzinfo=timezone.utc)
    assert parse_timestamp(format_timestamp(ts)) == ts


def test_site_meta_validation():
    with pytest.raises(ValueError):
        SiteMeta("X", 91.0, 0.0)
    with pytest.raises(ValueError):
        SiteMeta("", 0.0, 0.0)


finite = st.floats(-500, 1500, allow_nan=False).map(lambda v: round(v, 2))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(finite, min_size=20, max_size=20), min_size=1, max_size=8),
       st.integers(0, 1439 - 8))
def test_generated_rows_round_trip(rows, start):
    t0 = datetime(2010, 3, 14, tzinfo=timezone.utc) + timedelta(minutes=start)
    lines = []
    for k, vals in enumerate(rows):
        vals = list(vals)
        for name, mod in (("rh", 100), ("windspd", 1e9), ("winddir", 360)):
            i = FIELD_NAMES.index(name)
            vals[i] = round(abs(vals[i]) % mod, 2)
        rows[k] = vals
        lines.append(day_row(t0 + timedelta(minutes=k), vals))
    records = parse_day_file(day_file(lines), BON)
    assert [list(r.values()) for r in records] == rows
    buf = io.StringIO()
    write_csv(records, buf, include_qc=True)
    assert read_csv(io.StringIO(buf.getvalue())) == records
