import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from pllnoise.errors import DomainError, MissingMetadataError, ParseError, TraceValidationError
from pllnoise.ingest import (
    PsdTrace,
    check_floor_margin,
    format_psd_csv,
    parse_psd_csv,
    read_psd_csv,
    resample_log,
    write_psd_csv,
)


def _csv(rows, meta="# f0_hz=2e9\n", header="offset_hz,psd_dbc_hz\n"):
    body = "".join(f"{f},{lv}\n" for f, lv in rows)
    return (meta + header + body).encode()


ROWS = [(100 * 10 ** (k / 2), -80 - 5 * k) for k in range(10)]


def test_parse_basic():
    trace = parse_psd_csv(_csv(ROWS))
    assert len(trace) == len(ROWS)
    assert trace.f0 == 2e9
    assert trace.rbw_fraction == 0.01 and trace.n_averages == 10
    np.testing.assert_array_equal(trace.levels, [lv for _, lv in ROWS])


def test_parse_metadata_and_crlf():
    meta = "# f0_hz = 3.5e9\r\n# rbw_fraction=0.02\r\n# n_averages=4\r\n# label=board-7\r\n"
    text = _csv(ROWS, meta=meta).replace(b"\n", b"\r\n").replace(b"\r\r", b"\r")
    trace = parse_psd_csv(text)
    assert (trace.f0, trace.rbw_fraction, trace.n_averages, trace.label) == (3.5e9, 0.02, 4, "board-7")


def test_parse_accepts_streams():
    raw = _csv(ROWS)
    assert len(parse_psd_csv(io.BytesIO(raw))) == 10
    assert len(parse_psd_csv(io.StringIO(raw.decode()))) == 10


def test_non_monotone_offsets():
    rows = list(ROWS)
    rows[0], rows[1] = rows[1], rows[0]
    with pytest.raises(TraceValidationError, match="offsets not strictly increasing"):
        parse_psd_csv(_csv(rows))


def test_empty_data_section():
    with pytest.raises(TraceValidationError, match="fewer than 8 points"):
        parse_psd_csv(_csv([]))


def test_missing_f0_names_key():
    with pytest.raises(MissingMetadataError, match="f0_hz"):
        parse_psd_csv(_csv(ROWS, meta=""))


def test_f0_override():
    assert parse_psd_csv(_csv(ROWS, meta=""), f0=1e9).f0 == 1e9


def test_malformed_row_reports_line_number():
    raw = _csv(ROWS).decode().splitlines()
    raw[4] = "316.2,abc"
    with pytest.raises(ParseError) as info:
        parse_psd_csv("\n".join(raw))
    assert info.value.line == 5
    assert "line 5" in str(info.value)


def test_bad_header():
    with pytest.raises(ParseError, match="header"):
        parse_psd_csv(_csv(ROWS, header="freq,level\n"))


def test_level_window():
    rows = list(ROWS)
    rows[3] = (rows[3][0], -250.0)
    with pytest.raises(TraceValidationError, match="outside"):
        parse_psd_csv(_csv(rows))


def test_duplicates_are_db_averaged():
    rows = ROWS[:5] + [(ROWS[4][0], -101.0)] + ROWS[5:]
    trace = parse_psd_csv(_csv(rows))
    assert len(trace) == 10
    assert trace.levels[4] == pytest.approx((ROWS[4][1] - 101.0) / 2)


def test_span_outside_sweep_warns():
    rows = [(10 * 10 ** (k / 2), -80.0) for k in range(10)]
    with pytest.warns(UserWarning, match="outside the expected"):
        parse_psd_csv(_csv(rows))


def test_in_span_does_not_warn():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        parse_psd_csv(_csv(ROWS))


finite_levels = st.floats(-200, 50, allow_nan=False)


@settings(max_examples=50)
@given(
    levels=st.lists(finite_levels, min_size=8, max_size=40),
    start=st.floats(1.0, 1e4),
    step=st.floats(1.0001, 3.0),
)
def test_csv_round_trip_bit_exact(levels, start, step):
    offsets = start * step ** np.arange(len(levels))
    trace = PsdTrace(offsets, levels, f0=2.4e9, label="x")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        back = parse_psd_csv(format_psd_csv(trace))
    np.testing.assert_array_equal(back.offsets, trace.offsets)
    np.testing.assert_array_equal(back.levels, trace.levels)
    assert (back.f0, back.label, back.n_averages) == (trace.f0, trace.label, trace.n_averages)


def test_read_file_uses_stem_as_label(tmp_path):
    path = tmp_path / "dev3.csv"
    path.write_bytes(_csv(ROWS))
    assert read_psd_csv(path).label == "dev3"
    out = tmp_path / "copy.csv"
    write_psd_csv(read_psd_csv(path), out)
    assert read_psd_csv(out).label == "dev3"


def _grid_trace(decades, ppd, f_lo=100.0, fn=lambda f: -30 * np.log10(f) + 7):
    f = f_lo * 10.0 ** (np.arange(int(decades * ppd) + 1) / ppd)
    return PsdTrace(f, fn(f), f0=2e9)


def test_resample_point_count():
    # floor(3 * 10) + 1 grid points
    trace = PsdTrace(np.geomspace(100, 1e5, 77), np.full(77, -90.0), f0=2e9)
    assert len(resample_log(trace, 10)) == 31


def test_resample_on_grid_is_identity():
    trace = _grid_trace(3, 20)
    out = resample_log(trace, 20)
    np.testing.assert_allclose(out.offsets, trace.offsets, rtol=1e-12)
    np.testing.assert_allclose(out.levels, trace.levels, atol=1e-12)


def test_resample_preserves_lines():
    f = np.sort(np.random.default_rng(1).uniform(100, 1e6, 300))
    trace = PsdTrace(f, -30 * np.log10(f) + 5, f0=2e9)
    out = resample_log(trace, 50)
    np.testing.assert_allclose(out.levels, -30 * np.log10(out.offsets) + 5, atol=1e-9)


def test_resample_keeps_metadata():
    trace = PsdTrace(np.geomspace(100, 1e5, 20), np.full(20, -90.0), f0=2e9, n_averages=3, label="a")
    out = resample_log(trace, 8)
    assert (out.f0, out.n_averages, out.label) == (2e9, 3, "a")


@settings(max_examples=50)
@given(
    f_lo=st.floats(1.0, 1e5),
    decades=st.floats(1.0, 5.0),
    n=st.integers(8, 200),
    ppd=st.integers(4, 80),
)
def test_resample_grid_uniform_and_inside(f_lo, decades, n, ppd):
    assume(int(decades * ppd + 1e-9) + 1 >= 8)
    f = np.geomspace(f_lo, f_lo * 10**decades, n)
    trace = PsdTrace(f, np.linspace(-60, -150, n), f0=2e9)
    out = resample_log(trace, ppd)
    assert out.offsets[0] >= f[0] and out.offsets[-1] <= f[-1]
    ratios = out.offsets[1:] / out.offsets[:-1]
    np.testing.assert_allclose(ratios, 10 ** (1 / ppd), rtol=1e-12)


def test_resample_errors():
    short = PsdTrace(np.geomspace(100, 500, 10), np.zeros(10) - 90, f0=2e9)
    with pytest.raises(DomainError, match="decade"):
        resample_log(short, 10)
    with pytest.raises(DomainError):
        resample_log(_grid_trace(2, 10), 3)
    with pytest.raises(DomainError, match="at least 8"):
        resample_log(_grid_trace(1, 10), 4)


def _flat(level, n=10):
    return PsdTrace(np.geomspace(100, 1e7, n), np.full(n, level), f0=2e9)


def test_floor_margin_pass():
    report = check_floor_margin(_flat(-140.0), -153.0)
    assert report.min_margin == pytest.approx(13.0)
    assert report.passed and report.status == "pass"


def test_floor_margin_fail():
    levels = np.full(10, -140.0)
    levels[6] = -150.0
    trace = PsdTrace(np.geomspace(100, 1e7, 10), levels, f0=2e9)
    report = check_floor_margin(trace, -153.0)
    assert report.min_margin == pytest.approx(3.0)
    assert not report.passed and report.status == "fail"


def test_floor_margin_absent_floor():
    report = check_floor_margin(_flat(-140.0), -math.inf)
    assert report.passed and report.status == "not limited"
    assert np.all(np.isinf(report.margins))
