"""Closed-form least-squares estimators of the PLL phase-noise parameters.

Per section of a classified trace:

* oscillator-dominated (steep) sections give the 3 dB cut-off through the
  -30 dB/decade asymptote ``L ~ 20 log10 f_c - 10 log10(pi df^3)``;
* flat sections give the plateau level as a sample mean;
* corner frequencies are where a plateau meets an oscillator asymptote,
  obtained by inverting the low-pass model exactly.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, fields
from typing import Literal, Sequence

import numpy as np

from .errors import (
    DomainError,
    FormatError,
    IncompleteParamsError,
    InsufficientPointsError,
    MixedCarrierError,
    SectionPatternError,
    SlopeDeviationWarning,
)
from .ingest import PsdTrace, check_floor_margin, resample_log
from .model import (
    UNITS,
    PllNoiseParams,
    full_model_db,
    params_from_dict,
    params_to_dict,
)
from .segmentation import (
    Label,
    SectionMap,
    SectionThresholds,
    classify_sections,
    fit_segments,
    section_map_from_dict,
    section_map_to_dict,
    section_mask,
)

__all__ = [
    "FitConfig",
    "FitReport",
    "Intermediate",
    "ParamAggregate",
    "estimate_cutoff",
    "estimate_level",
    "intersection_freq",
    "fit_params",
    "aggregate_params",
    "fit_report_to_dict",
    "fit_report_from_dict",
    "aggregate_to_dict",
    "aggregate_from_dict",
]

Normalization = Literal["mean", "paper"]
IDEAL_STEEP_SLOPE = -30.0


def _section_points(trace: PsdTrace, section: tuple[float, float]):
    mask = section_mask(trace.offsets, section)
    m = int(mask.sum())
    if m < 2:
        raise InsufficientPointsError(
            f"section {section[0]:g}-{section[1]:g} Hz holds {m} point(s), need >= 2"
        )
    return trace.offsets[mask], trace.levels[mask]


def _check_normalization(normalization: str) -> None:
    if normalization not in ("mean", "paper"):
        raise ValueError(f"normalization must be 'mean' or 'paper', got {normalization!r}")


def _section_slope(f: np.ndarray, levels: np.ndarray) -> float:
    return float(np.polyfit(np.log10(f), levels, 1)[0])


def estimate_cutoff(
    trace: PsdTrace,
    section: tuple[float, float],
    normalization: Normalization = "mean",
    slope_tolerance: float = 5.0,
) -> float:
    """3 dB cut-off (Hz) of the oscillator dominating ``section``.

    Each point gives ``log10(10**(L/10) * pi * df**3) = 2 log10 f_c`` on the
    -30 dB/decade asymptote. ``normalization="mean"`` takes the geometric mean
    (divide the sum by 2M); ``"paper"`` divides by 2(M-1), which is biased by
    ``f_c**(1/(M-1))``.
    """
    value, note = _cutoff(trace, section, normalization, slope_tolerance)
    if note:
        warnings.warn(note, SlopeDeviationWarning, stacklevel=2)
    return value


def _cutoff(trace, section, normalization, slope_tolerance) -> tuple[float, str | None]:
    _check_normalization(normalization)
    f, levels = _section_points(trace, section)
    m = f.size
    slope = _section_slope(f, levels)
    note = None
    if abs(slope - IDEAL_STEEP_SLOPE) > slope_tolerance:
        note = (
            f"section {section[0]:g}-{section[1]:g} Hz has slope {slope:.1f} dB/decade, "
            f"more than {slope_tolerance:g} from {IDEAL_STEEP_SLOPE:g}"
        )
    # log10(10**(L/10) * pi * df**3), expanded to avoid overflow
    terms = levels / 10.0 + math.log10(math.pi) + 3.0 * np.log10(f)
    denom = 2 * m if normalization == "mean" else 2 * (m - 1)
    return float(10.0 ** (terms.sum() / denom)), note


def estimate_level(
    trace: PsdTrace,
    section: tuple[float, float],
    normalization: Normalization = "mean",
) -> float:
    """Plateau level (dBc/Hz) of a flat section: sum of levels over M or M-1."""
    _check_normalization(normalization)
    _, levels = _section_points(trace, section)
    m = levels.size
    return float(levels.sum() / (m if normalization == "mean" else m - 1))


def intersection_freq(f_c, level):
    """Offset where the low-pass model with cut-off ``f_c`` drops to ``level``.

    ``df = f_c * cbrt(1 / (10**(level/10) * pi * f_c) - 1)``. Vectorizes over
    array inputs.
    """
    f_c_arr = np.asarray(f_c, dtype=float)
    level_arr = np.asarray(level, dtype=float)
    if np.any(~np.isfinite(f_c_arr)) or np.any(f_c_arr <= 0):
        raise DomainError("cut-off frequency must be positive and finite")
    if np.any(~np.isfinite(level_arr)):
        raise DomainError("level must be finite")
    dc = 10.0 ** (level_arr / 10.0) * math.pi * f_c_arr
    if np.any(dc >= 1.0):
        raise DomainError(
            "level lies at or above the low-pass model's DC value; no intersection exists"
        )
    out = f_c_arr * np.cbrt(1.0 / dc - 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FitConfig:
    thresholds: SectionThresholds = field(default_factory=SectionThresholds)
    normalization: Normalization = "mean"
    points_per_decade: int | None = None  # resample before fitting when set
    analyzer_floor_dbchz: float | None = None
    slope_tolerance: float = 5.0

    def __post_init__(self):
        _check_normalization(self.normalization)


@dataclass(frozen=True)
class Intermediate:
    value: float
    section: Label
    f_lo: float
    f_hi: float
    n_points: int


@dataclass
class FitReport:
    params: PllNoiseParams
    intermediates: dict[str, Intermediate]
    residual_rms_db: float | None
    warnings: list[str]
    sections: SectionMap | None = None

    @property
    def is_partial(self) -> bool:
        return not self.params.is_complete


# section -> (intermediate name, estimator kind)
_BINDING = {
    Label.REFERENCE_DOMINANT: ("f_c_ref", "cutoff"),
    Label.IN_BAND_FLOOR: ("l_pll", "level"),
    Label.VCO_DOMINANT: ("f_c_vco", "cutoff"),
    Label.NOISE_FLOOR: ("l_nf", "level"),
}

# corner -> (cut-off input, level input). B_PLL pairs the VCO cut-off with the
# in-band level: the only pairing that reproduces the single-device 197.9 kHz.
_CORNERS = {
    "df_pll": ("f_c_ref", "l_pll"),
    "b_pll": ("f_c_vco", "l_pll"),
    "df_nf": ("f_c_vco", "l_nf"),
}


def fit_params(trace: PsdTrace, config: FitConfig | None = None) -> FitReport:
    """Run the full estimation pipeline on one trace.

    Missing sections produce a partial report: the affected parameters are
    ``None`` and a warning names the section. At least three of the four
    sections must be found.
    """
    config = config or FitConfig()
    notes: list[str] = []
    if config.points_per_decade:
        trace = resample_log(trace, config.points_per_decade)

    smap = classify_sections(fit_segments(trace), config.thresholds)
    if len(smap.present) < 3:
        raise SectionPatternError(
            f"only {len(smap.present)} of 4 sections found "
            f"({', '.join(s.value for s in smap.present) or 'none'})",
            smap.runs,
        )
    for section in smap.missing:
        notes.append(f"{section.value} missing")

    inter: dict[str, Intermediate] = {}
    for section in smap.present:
        name, kind = _BINDING[section]
        rng = smap.ranges[section]
        n_points = int(section_mask(trace.offsets, rng).sum())
        if kind == "cutoff":
            value, note = _cutoff(trace, rng, config.normalization, config.slope_tolerance)
            if note:
                notes.append(f"{section.value}: {note}")
        else:
            value = estimate_level(trace, rng, config.normalization)
        inter[name] = Intermediate(value, section, rng[0], rng[1], n_points)

    values: dict[str, float | None] = {k: v.value for k, v in inter.items()}
    for corner, (fc_name, level_name) in _CORNERS.items():
        fc, level = values.get(fc_name), values.get(level_name)
        if fc is None or level is None:
            values[corner] = None
            continue
        try:
            values[corner] = intersection_freq(fc, level)
        except DomainError as exc:
            values[corner] = None
            notes.append(f"{corner} not estimable: {exc}")

    params = PllNoiseParams(
        f0=trace.f0,
        f_c_ref=values.get("f_c_ref"),
        f_c_vco=values.get("f_c_vco"),
        df_pll=values["df_pll"],
        b_pll=values["b_pll"],
        df_nf=values["df_nf"],
        l_pll=values.get("l_pll"),
        l_nf=values.get("l_nf"),
    )

    residual = None
    try:
        corners = params.corners
    except IncompleteParamsError:
        corners = None
    if corners is not None:
        if not (corners[0] < corners[1] < corners[2] < corners[3]):
            notes.append(
                "corner ordering violated: f_c_ref={:.4g} df_pll={:.4g} "
                "b_pll={:.4g} df_nf={:.4g} Hz".format(*corners)
            )
        mask = smap.point_mask(trace)
        model = full_model_db(*corners, trace.offsets[mask])
        residual = float(np.sqrt(np.mean((trace.levels[mask] - model) ** 2)))

    if config.analyzer_floor_dbchz is not None:
        margin = check_floor_margin(trace, config.analyzer_floor_dbchz)
        if not margin.passed:
            notes.append(
                f"trace within {margin.min_margin:.1f} dB of the analyzer floor "
                f"({config.analyzer_floor_dbchz:g} dBc/Hz); {margin.required_db:g} dB required"
            )
    return FitReport(params, inter, residual, notes, smap)


# -- multi-device aggregation -------------------------------------------------

_PARAM_FIELDS = tuple(f.name for f in fields(PllNoiseParams))


@dataclass
class ParamAggregate:
    """Per-field mean and sample standard deviation across devices.

    ``std`` entries are ``None`` when fewer than two devices report a field.
    """

    mean: dict[str, float]
    std: dict[str, float | None]
    counts: dict[str, int]
    n_devices: int

    def __getitem__(self, name: str) -> tuple[float, float | None]:
        return self.mean[name], self.std[name]


def aggregate_params(fits: Sequence[PllNoiseParams]) -> ParamAggregate:
    """Average parameter sets of devices of one type.

    Levels are averaged in dB. Fields that are ``None`` in a partial fit are
    left out of that field's statistics.
    """
    fits = list(fits)
    if not fits:
        raise ValueError("no parameter sets to aggregate")
    f0_ref = fits[0].f0
    for p in fits[1:]:
        if abs(p.f0 - f0_ref) > 1e-6 * f0_ref:
            raise MixedCarrierError(f"carrier {p.f0:g} Hz differs from {f0_ref:g} Hz")
    mean: dict[str, float] = {}
    std: dict[str, float | None] = {}
    counts: dict[str, int] = {}
    for name in _PARAM_FIELDS:
        vals = np.array([getattr(p, name) for p in fits if getattr(p, name) is not None], dtype=float)
        if vals.size == 0:
            continue
        mean[name] = float(vals.mean())
        std[name] = float(vals.std(ddof=1)) if vals.size > 1 else None
        counts[name] = int(vals.size)
    return ParamAggregate(mean, std, counts, len(fits))


# -- serialization -------------------------------------------------------------


def fit_report_to_dict(report: FitReport) -> dict:
    out = {
        "params": params_to_dict(report.params),
        "intermediates": {
            name: {
                "value": it.value,
                "section": it.section.value,
                "f_lo_hz": it.f_lo,
                "f_hi_hz": it.f_hi,
                "n_points": it.n_points,
            }
            for name, it in report.intermediates.items()
        },
        "residual_rms_db": report.residual_rms_db,
        "warnings": list(report.warnings),
    }
    if report.sections is not None:
        out["sections"] = section_map_to_dict(report.sections)
    return out


def fit_report_from_dict(data: dict) -> FitReport:
    try:
        params = params_from_dict(data["params"])
        inter = {
            name: Intermediate(
                float(d["value"]),
                Label(d["section"]),
                float(d["f_lo_hz"]),
                float(d["f_hi_hz"]),
                int(d["n_points"]),
            )
            for name, d in data["intermediates"].items()
        }
        residual = data["residual_rms_db"]
        notes = [str(w) for w in data["warnings"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed fit report: {exc}") from None
    smap = section_map_from_dict(data["sections"]) if "sections" in data else None
    return FitReport(params, inter, None if residual is None else float(residual), notes, smap)


def aggregate_to_dict(agg: ParamAggregate) -> dict:
    table = {}
    for name in _PARAM_FIELDS:
        if name not in agg.mean:
            continue
        entry = {"mean": agg.mean[name]}
        if agg.std[name] is not None:
            entry["std"] = agg.std[name]
        entry["unit"] = UNITS[name]
        entry["n"] = agg.counts[name]
        table[name] = entry
    return {"n_devices": agg.n_devices, "parameters": table}


def aggregate_from_dict(data: dict) -> ParamAggregate:
    try:
        mean, std, counts = {}, {}, {}
        for name, entry in data["parameters"].items():
            if name not in _PARAM_FIELDS:
                raise ValueError(f"unknown parameter {name!r}")
            mean[name] = float(entry["mean"])
            std[name] = None if entry.get("std") is None else float(entry["std"])
            counts[name] = int(entry.get("n", data["n_devices"]))
        return ParamAggregate(mean, std, counts, int(data["n_devices"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed aggregate: {exc}") from None


def dump_json(obj: dict, fp=None, indent: int = 2) -> str:
    text = json.dumps(obj, indent=indent, allow_nan=False)
    if fp is not None:
        fp.write(text + "\n")
    return text
