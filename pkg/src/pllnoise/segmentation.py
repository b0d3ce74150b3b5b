"""Half-decade slope regression and grouping into the four PLL spectrum sections.

A trace is cut into half-decade segments anchored at its lowest offset. Each
segment gets an ordinary least-squares line in (log10 f, dB); its slope in
dB/decade sorts it into a steep (-30 dB/dec, oscillator dominated) or flat
(in-band plateau, noise floor) class. Class runs are then mapped, in frequency
order, onto

    ReferenceDominant -> InBandFloor -> VcoDominant -> NoiseFloor

with one guard segment excluded at every class change.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import FormatError, InsufficientPointsError, SectionPatternError
from .ingest import PsdTrace

__all__ = [
    "Label",
    "SECTION_ORDER",
    "Segment",
    "SectionMap",
    "SectionThresholds",
    "split_half_decades",
    "fit_segment_slope",
    "fit_segments",
    "classify_sections",
    "section_mask",
    "section_map_to_dict",
    "section_map_from_dict",
]

HALF_DECADE = 10.0 ** 0.5
_BOUNDARY_RTOL = 1e-9


class Label(str, Enum):
    REFERENCE_DOMINANT = "ReferenceDominant"
    IN_BAND_FLOOR = "InBandFloor"
    VCO_DOMINANT = "VcoDominant"
    NOISE_FLOOR = "NoiseFloor"
    TRANSITION = "Transition"
    UNFIT = "Unfit"

    def __str__(self):
        return self.value


SECTION_ORDER = (
    Label.REFERENCE_DOMINANT,
    Label.IN_BAND_FLOOR,
    Label.VCO_DOMINANT,
    Label.NOISE_FLOOR,
)
_SECTION_CLASS = ("steep", "flat", "steep", "flat")


@dataclass
class Segment:
    f_lo: float
    f_hi: float
    points: np.ndarray
    slope: float | None = None
    intercept: float | None = None
    short: bool = False  # last segment narrower than half a decade

    @property
    def fitted(self) -> bool:
        return self.slope is not None

    def __repr__(self):
        fit = f", slope={self.slope:.2f}" if self.fitted else ""
        return f"Segment({self.f_lo:.6g}-{self.f_hi:.6g} Hz, n={len(self.points)}{fit})"


@dataclass(frozen=True)
class SectionThresholds:
    """Slope limits in dB/decade; slopes in between are transitions."""

    steep: float = -20.0
    flat: float = -10.0

    def __post_init__(self):
        if not self.steep < self.flat:
            raise ValueError("steep threshold must lie below the flat threshold")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.steep + self.flat)

    def slope_class(self, slope: float) -> str | None:
        if slope <= self.steep:
            return "steep"
        if slope >= self.flat:
            return "flat"
        return None


@dataclass
class SectionMap:
    segments: list[Segment]
    labels: list[Label]
    ranges: dict[Label, tuple[float, float] | None]
    runs: tuple[str, ...] = ()
    missing: tuple[Label, ...] = field(default=())

    @property
    def present(self) -> tuple[Label, ...]:
        return tuple(s for s in SECTION_ORDER if self.ranges.get(s) is not None)

    @property
    def is_partial(self) -> bool:
        return bool(self.missing)

    def point_mask(self, trace: PsdTrace, labels=SECTION_ORDER) -> np.ndarray:
        """Points of ``trace`` lying in segments carrying one of ``labels``."""
        mask = np.zeros(len(trace), dtype=bool)
        wanted = set(labels)
        for seg, label in zip(self.segments, self.labels):
            if label in wanted:
                mask[seg.points] = True
        return mask


def split_half_decades(trace: PsdTrace) -> list[Segment]:
    """Tile the trace span with half-decade segments ``[f_lo, f_hi)``.

    Boundaries sit at ``f_min * 10**(k/2)``. A point exactly on a boundary
    belongs to the upper segment; the highest offset closes the last segment,
    which may be narrower than half a decade.
    """
    f = trace.offsets
    f_min, f_max = float(f[0]), float(f[-1])
    n_seg = max(1, math.ceil(2.0 * math.log10(f_max / f_min) - 1e-9))
    bounds = f_min * HALF_DECADE ** np.arange(n_seg + 1)
    short = bounds[-1] < f_max * (1 - _BOUNDARY_RTOL) or bounds[-1] > f_max * (1 + _BOUNDARY_RTOL)
    bounds[-1] = f_max
    bounds[0] = f_min
    # offsets within rounding distance of a boundary go to the upper segment
    idx = np.searchsorted(bounds * (1 - _BOUNDARY_RTOL), f, side="right") - 1
    idx = np.clip(idx, 0, n_seg - 1)
    segments = []
    for k in range(n_seg):
        segments.append(
            Segment(
                f_lo=float(bounds[k]),
                f_hi=float(bounds[k + 1]),
                points=np.flatnonzero(idx == k),
                short=bool(short and k == n_seg - 1),
            )
        )
    return segments


def fit_segment_slope(trace: PsdTrace, segment: Segment) -> tuple[float, float]:
    """Least-squares line through the segment's points in (log10 f, dB).

    Solves ``r = (X^T X)^-1 X^T y`` with rows ``[1, log10 f_n]`` using the
    closed-form 2x2 inverse. Returns ``(slope dB/decade, intercept dB)``.
    """
    pts = np.asarray(segment.points)
    if pts.size < 2:
        raise InsufficientPointsError(f"segment needs >= 2 points, has {pts.size}")
    x = np.log10(trace.offsets[pts])
    y = trace.levels[pts]
    # centring keeps the 2x2 system well conditioned; the solution is unchanged
    xm = x.mean()
    xc = x - xm
    n = float(pts.size)
    sxx = float(xc @ xc)
    sx = float(xc.sum())
    det = n * sxx - sx * sx
    if not det > 0:
        raise InsufficientPointsError("singular regression: offsets coincide")
    sy = float(y.sum())
    sxy = float(xc @ y)
    b0 = (sxx * sy - sx * sxy) / det
    slope = (n * sxy - sx * sy) / det
    return slope, b0 - slope * xm


def fit_segments(trace: PsdTrace) -> list[Segment]:
    """Split ``trace`` and fit every segment that has at least two points."""
    segments = split_half_decades(trace)
    for seg in segments:
        if seg.points.size >= 2:
            seg.slope, seg.intercept = fit_segment_slope(trace, seg)
    return segments


def section_mask(offsets: np.ndarray, section: tuple[float, float]) -> np.ndarray:
    """Points inside the half-open ``[f_lo, f_hi)``; ``f_hi`` itself counts
    when it is the highest offset of the trace."""
    f_lo, f_hi = section
    offsets = np.asarray(offsets, dtype=float)
    lo, hi = f_lo * (1 - _BOUNDARY_RTOL), f_hi * (1 - _BOUNDARY_RTOL)
    mask = (offsets >= lo) & (offsets < hi)
    if offsets.size and f_hi >= offsets[-1] * (1 - _BOUNDARY_RTOL):
        mask |= offsets == offsets[-1]
    return mask


def _assign_runs(run_classes: list[str], gap_before: list[bool]):
    """All order-preserving run -> section-slot assignments.

    Runs touching each other (no unfit gap in between) must land in adjacent
    slots; a gap lets the mapping skip sections whose data are missing.
    """
    n = len(run_classes)
    found = []
    for slots in itertools.combinations(range(4), n):
        if any(_SECTION_CLASS[s] != c for s, c in zip(slots, run_classes)):
            continue
        if any(
            not gap_before[i] and slots[i] != slots[i - 1] + 1 for i in range(1, n)
        ):
            continue
        found.append(slots)
    return found


def classify_sections(
    segments: list[Segment], thresholds: SectionThresholds | None = None
) -> SectionMap:
    """Label fitted segments and merge them into the four characteristic sections.

    Raises :class:`SectionPatternError` when the steep/flat run sequence cannot
    be placed on the reference/in-band/VCO/floor pattern. Fewer than four runs
    give a partial map whose absent sections are listed in ``missing``.
    """
    thresholds = thresholds or SectionThresholds()
    fitted = [s for s in segments if s.fitted]
    if len(fitted) < 4:
        raise SectionPatternError(f"need >= 4 fitted segments, have {len(fitted)}")

    # None = unfit, "T" = slope between thresholds
    cls: list[str | None] = []
    for seg in segments:
        if not seg.fitted:
            cls.append(None)
        else:
            cls.append(thresholds.slope_class(seg.slope) or "T")

    # a transition sandwiched inside one class is a blip, not a band edge
    for i, c in enumerate(cls):
        if c != "T":
            continue
        j = i - 1
        while j >= 0 and cls[j] == "T":
            j -= 1
        k = i + 1
        while k < len(cls) and cls[k] == "T":
            k += 1
        if 0 <= j and k < len(cls) and cls[j] is not None and cls[j] == cls[k]:
            cls[i] = cls[j]

    # runs of one class; transitions are skipped over, unfit segments split runs
    runs: list[list[int]] = []
    run_class: list[str] = []
    gap_before: list[bool] = []
    pending_gap = False
    for i, c in enumerate(cls):
        if c is None:
            pending_gap = True
            continue
        if c == "T":
            continue
        if runs and run_class[-1] == c and not pending_gap:
            runs[-1].append(i)
        else:
            runs.append([i])
            run_class.append(c)
            gap_before.append(pending_gap and bool(runs[:-1]))
        pending_gap = False

    run_names = tuple(run_class)
    if len(runs) < 2:
        raise SectionPatternError("spectrum shows a single slope class", run_names)
    if len(runs) > 4:
        raise SectionPatternError("more slope-class runs than sections", run_names)
    options = _assign_runs(run_class, gap_before)
    if not options:
        raise SectionPatternError("runs do not follow the steep/flat section pattern", run_names)
    if len(options) > 1:
        raise SectionPatternError("ambiguous section assignment", run_names)
    slots = options[0]

    # guard band: one segment at each class change with no transition between
    for r in range(1, len(runs)):
        left, right = runs[r - 1][-1], runs[r][0]
        if right - left > 1:
            continue
        dl = abs(segments[left].slope - thresholds.midpoint)
        dr = abs(segments[right].slope - thresholds.midpoint)
        order = [(dl, r - 1, left), (dr, r, right)]
        order.sort(key=lambda t: t[0])
        for _, run_idx, seg_idx in order:
            if len(runs[run_idx]) > 1:
                runs[run_idx].remove(seg_idx)
                cls[seg_idx] = "T"
                break

    labels: list[Label] = []
    for c in cls:
        labels.append(Label.UNFIT if c is None else Label.TRANSITION)
    ranges: dict[Label, tuple[float, float] | None] = {s: None for s in SECTION_ORDER}
    for run, slot in zip(runs, slots):
        section = SECTION_ORDER[slot]
        for i in run:
            labels[i] = section
        ranges[section] = (segments[run[0]].f_lo, segments[run[-1]].f_hi)
    missing = tuple(s for s in SECTION_ORDER if ranges[s] is None)
    return SectionMap(list(segments), labels, ranges, run_names, missing)


# -- serialization -----------------------------------------------------------


def section_map_to_dict(smap: SectionMap) -> dict:
    records = []
    for seg, label in zip(smap.segments, smap.labels):
        records.append(
            {
                "f_lo_hz": seg.f_lo,
                "f_hi_hz": seg.f_hi,
                "slope_db_per_decade": seg.slope,
                "intercept_db": seg.intercept,
                "label": label.value,
            }
        )
    sections = {}
    for name in SECTION_ORDER:
        rng = smap.ranges.get(name)
        if rng is not None:
            sections[name.value] = {"f_lo_hz": rng[0], "f_hi_hz": rng[1]}
    return {"segments": records, "sections": sections}


def section_map_from_dict(data: dict) -> SectionMap:
    """Rebuild a :class:`SectionMap` from its JSON form.

    Segment point indices are not serialized and come back empty.
    """
    try:
        segments = []
        labels = []
        for rec in data["segments"]:
            segments.append(
                Segment(
                    f_lo=float(rec["f_lo_hz"]),
                    f_hi=float(rec["f_hi_hz"]),
                    points=np.array([], dtype=int),
                    slope=None if rec["slope_db_per_decade"] is None else float(rec["slope_db_per_decade"]),
                    intercept=None if rec["intercept_db"] is None else float(rec["intercept_db"]),
                )
            )
            labels.append(Label(rec["label"]))
        ranges: dict[Label, tuple[float, float] | None] = {s: None for s in SECTION_ORDER}
        for name, rng in data["sections"].items():
            ranges[Label(name)] = (float(rng["f_lo_hz"]), float(rng["f_hi_hz"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed section map: {exc}") from None
    missing = tuple(s for s in SECTION_ORDER if ranges[s] is None)
    return SectionMap(segments, labels, ranges, (), missing)


def dump_section_map(smap: SectionMap, fp=None, indent: int = 2) -> str:
    text = json.dumps(section_map_to_dict(smap), indent=indent, allow_nan=False)
    if fp is not None:
        fp.write(text + "\n")
    return text
