"""Reading, validating and resampling measured SSB phase-noise traces.

CSV layout::

    # f0_hz=2e9
    # rbw_fraction=0.01
    # n_averages=10
    # label=usrp-2944r
    offset_hz,psd_dbc_hz
    100,-62.3
    ...

Only ``f0_hz`` is mandatory. Consecutive rows with the same offset (overlapping
sweep segments) are merged by averaging their levels in dB.
"""

from __future__ import annotations

import io
import math
import os
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, MissingMetadataError, ParseError, TraceValidationError

__all__ = [
    "PsdTrace",
    "FloorMargin",
    "parse_psd_csv",
    "read_psd_csv",
    "write_psd_csv",
    "format_psd_csv",
    "resample_log",
    "check_floor_margin",
]

HEADER = "offset_hz,psd_dbc_hz"
MIN_POINTS = 8
LEVEL_WINDOW = (-200.0, 50.0)
EXPECTED_SPAN_HZ = (100.0, 10e6)
DEFAULT_RBW_FRACTION = 0.01
DEFAULT_N_AVERAGES = 10
DEFAULT_POINTS_PER_DECADE = 50
MIN_FLOOR_MARGIN_DB = 8.0


@dataclass(frozen=True, eq=False)
class PsdTrace:
    """SSB phase-noise spectrum on an offset-frequency grid."""

    offsets: np.ndarray
    levels: np.ndarray
    f0: float
    rbw_fraction: float = DEFAULT_RBW_FRACTION
    n_averages: int = DEFAULT_N_AVERAGES
    label: str = ""

    def __post_init__(self):
        offsets = np.array(self.offsets, dtype=float).ravel()
        levels = np.array(self.levels, dtype=float).ravel()
        offsets.flags.writeable = False
        levels.flags.writeable = False
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "levels", levels)
        if offsets.shape != levels.shape:
            raise TraceValidationError(
                f"offsets and levels differ in length ({offsets.size} vs {levels.size})"
            )
        if offsets.size < MIN_POINTS:
            raise TraceValidationError(f"fewer than {MIN_POINTS} points ({offsets.size})")
        if not np.all(np.isfinite(offsets)) or np.any(offsets <= 0):
            raise TraceValidationError("offsets must be positive and finite")
        if np.any(np.diff(offsets) <= 0):
            raise TraceValidationError("offsets not strictly increasing")
        if not np.all(np.isfinite(levels)):
            raise TraceValidationError("levels must be finite")
        lo, hi = LEVEL_WINDOW
        if np.any(levels < lo) or np.any(levels > hi):
            raise TraceValidationError(f"levels outside [{lo:g}, {hi:g}] dBc/Hz")
        if not (math.isfinite(self.f0) and self.f0 > 0):
            raise TraceValidationError(f"f0 must be positive, got {self.f0!r}")
        if not (self.rbw_fraction > 0):
            raise TraceValidationError("rbw_fraction must be positive")
        if int(self.n_averages) < 1:
            raise TraceValidationError("n_averages must be >= 1")
        object.__setattr__(self, "f0", float(self.f0))
        object.__setattr__(self, "rbw_fraction", float(self.rbw_fraction))
        object.__setattr__(self, "n_averages", int(self.n_averages))

    def __len__(self):
        return self.offsets.size

    @property
    def decades(self) -> float:
        return math.log10(self.offsets[-1] / self.offsets[0])

    def with_levels(self, levels) -> "PsdTrace":
        return replace(self, levels=levels)

    def select(self, mask) -> "PsdTrace":
        """Sub-trace of the points where ``mask`` is true."""
        mask = np.asarray(mask, dtype=bool)
        return replace(self, offsets=self.offsets[mask], levels=self.levels[mask])


def _merge_duplicates(offsets: list[float], levels: list[float]):
    out_f: list[float] = []
    out_l: list[float] = []
    counts: list[int] = []
    for f, lv in zip(offsets, levels):
        if out_f and f == out_f[-1]:
            counts[-1] += 1
            out_l[-1] += (lv - out_l[-1]) / counts[-1]
        else:
            out_f.append(f)
            out_l.append(lv)
            counts.append(1)
    return out_f, out_l


def _parse_number(text: str, line: int, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"cannot parse {what} {text.strip()!r}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"{what} is not finite: {text.strip()!r}", line)
    return value


def parse_psd_csv(source, f0: float | None = None, label: str | None = None) -> PsdTrace:
    """Parse a PSD CSV from bytes, text, or a binary/text stream.

    ``f0`` overrides the file's ``f0_hz`` metadata; ``label`` is used only
    when the file carries none.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc}") from None
    meta: dict[str, str] = {}
    offsets: list[float] = []
    levels: list[float] = []
    seen_header = False
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        if not seen_header:
            if line.replace(" ", "") != HEADER:
                raise ParseError(f"expected header '{HEADER}', got {line!r}", lineno)
            seen_header = True
            continue
        cells = line.split(",")
        if len(cells) != 2:
            raise ParseError(f"expected 2 columns, got {len(cells)}", lineno)
        offsets.append(_parse_number(cells[0], lineno, "offset"))
        levels.append(_parse_number(cells[1], lineno, "level"))

    if f0 is None:
        if "f0_hz" not in meta:
            raise MissingMetadataError("f0_hz")
        f0 = _parse_number(meta["f0_hz"], 0, "f0_hz")
    rbw = float(meta.get("rbw_fraction", DEFAULT_RBW_FRACTION))
    n_avg_text = meta.get("n_averages", str(DEFAULT_N_AVERAGES))
    try:
        n_avg = int(float(n_avg_text))
    except ValueError:
        raise ParseError(f"cannot parse n_averages {n_avg_text!r}") from None
    offsets, levels = _merge_duplicates(offsets, levels)
    trace = PsdTrace(
        offsets=offsets,
        levels=levels,
        f0=f0,
        rbw_fraction=rbw,
        n_averages=n_avg,
        label=meta.get("label", label or ""),
    )
    lo, hi = EXPECTED_SPAN_HZ
    if trace.offsets[0] < lo * (1 - 1e-9) or trace.offsets[-1] > hi * (1 + 1e-9):
        warnings.warn(
            f"trace spans {trace.offsets[0]:g}-{trace.offsets[-1]:g} Hz, "
            f"outside the expected {lo:g}-{hi:g} Hz sweep",
            stacklevel=2,
        )
    return trace


def read_psd_csv(path, f0: float | None = None) -> PsdTrace:
    with open(path, "rb") as fh:
        data = fh.read()
    stem = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    return parse_psd_csv(data, f0=f0, label=stem)


def format_psd_csv(trace: PsdTrace) -> str:
    buf = io.StringIO()
    write_psd_csv(trace, buf)
    return buf.getvalue()


def write_psd_csv(trace: PsdTrace, dest) -> None:
    """Write ``trace`` with 17 significant digits (bit-exact re-read)."""
    lines = [
        f"# f0_hz={trace.f0!r}",
        f"# rbw_fraction={trace.rbw_fraction!r}",
        f"# n_averages={trace.n_averages}",
    ]
    if trace.label:
        lines.append(f"# label={trace.label}")
    lines.append(HEADER)
    lines.extend(f"{f:.17g},{lv:.17g}" for f, lv in zip(trace.offsets, trace.levels))
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def resample_log(trace: PsdTrace, points_per_decade: int = DEFAULT_POINTS_PER_DECADE) -> PsdTrace:
    """Resample onto ``f_min * 10**(k/ppd)`` by linear interpolation in (log10 f, dB).

    The grid starts at the lowest offset and never passes the highest one.
    """
    if int(points_per_decade) != points_per_decade or points_per_decade < 4:
        raise DomainError(f"points_per_decade must be an integer >= 4, got {points_per_decade!r}")
    ppd = int(points_per_decade)
    decades = trace.decades
    if decades < 1 - 1e-12:
        raise DomainError(f"trace spans {decades:.3f} decades; resampling needs at least 1")
    x = np.log10(trace.offsets)
    n = int(math.floor(decades * ppd + 1e-9)) + 1
    if n < MIN_POINTS:
        raise DomainError(
            f"{decades:.3f} decades at {ppd} points per decade give {n} points; "
            f"a trace needs at least {MIN_POINTS}"
        )
    xg = x[0] + np.arange(n) / ppd
    xg = np.minimum(xg, x[-1])
    grid = trace.offsets[0] * 10.0 ** (np.arange(n) / ppd)
    grid = np.clip(grid, trace.offsets[0], trace.offsets[-1])
    levels = np.interp(xg, x, trace.levels)
    return replace(trace, offsets=grid, levels=levels)


@dataclass(frozen=True, eq=False)
class FloorMargin:
    margins: np.ndarray
    min_margin: float
    passed: bool
    required_db: float = MIN_FLOOR_MARGIN_DB
    limited: bool = field(default=True)

    @property
    def status(self) -> str:
        if not self.limited:
            return "not limited"
        return "pass" if self.passed else "fail"


def check_floor_margin(
    trace: PsdTrace,
    analyzer_floor_dbchz: float = -math.inf,
    required_db: float = MIN_FLOOR_MARGIN_DB,
) -> FloorMargin:
    """Margin of each point above the analyzer noise floor.

    Pass ``-inf`` when the floor is unknown; the trace is then reported as
    not limited.
    """
    if analyzer_floor_dbchz == -math.inf:
        margins = np.full(trace.levels.shape, math.inf)
        return FloorMargin(margins, math.inf, True, required_db, limited=False)
    margins = trace.levels - float(analyzer_floor_dbchz)
    min_margin = float(margins.min())
    return FloorMargin(margins, min_margin, min_margin >= required_db, required_db)
