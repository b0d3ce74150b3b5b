"""Estimate PLL phase-noise model parameters from measured SSB PSD traces and
synthesize spectra and phase-noise time series from them."""

__version__ = "0.1.0"

from .errors import (
    DomainError,
    FormatError,
    IncompleteParamsError,
    InsufficientPointsError,
    MissingMetadataError,
    MixedCarrierError,
    ParameterWarning,
    ParseError,
    PllNoiseError,
    SectionPatternError,
    SlopeDeviationWarning,
    TraceValidationError,
)
from .estimation import (
    FitConfig,
    FitReport,
    ParamAggregate,
    aggregate_params,
    estimate_cutoff,
    estimate_level,
    fit_params,
    intersection_freq,
)
from .ingest import PsdTrace, check_floor_margin, parse_psd_csv, read_psd_csv, resample_log, write_psd_csv
from .model import (
    PllNoiseParams,
    constant_from_cutoff,
    cutoff_from_constant,
    eval_full_model,
    eval_lp_model,
    load_params,
)
from .segmentation import (
    Label,
    SectionMap,
    SectionThresholds,
    Segment,
    classify_sections,
    fit_segment_slope,
    split_half_decades,
)
from .synthesis import PhaseTimeSeries, synth_phase_timeseries, synth_psd, welch_psd

__all__ = [
    "DomainError",
    "FitConfig",
    "FitReport",
    "FormatError",
    "IncompleteParamsError",
    "InsufficientPointsError",
    "Label",
    "MissingMetadataError",
    "MixedCarrierError",
    "ParamAggregate",
    "ParameterWarning",
    "ParseError",
    "PhaseTimeSeries",
    "PllNoiseError",
    "PllNoiseParams",
    "PsdTrace",
    "SectionMap",
    "SectionPatternError",
    "SectionThresholds",
    "Segment",
    "SlopeDeviationWarning",
    "TraceValidationError",
    "aggregate_params",
    "check_floor_margin",
    "classify_sections",
    "constant_from_cutoff",
    "cutoff_from_constant",
    "estimate_cutoff",
    "estimate_level",
    "eval_full_model",
    "eval_lp_model",
    "fit_params",
    "fit_segment_slope",
    "intersection_freq",
    "load_params",
    "parse_psd_csv",
    "read_psd_csv",
    "resample_log",
    "split_half_decades",
    "synth_phase_timeseries",
    "synth_psd",
    "welch_psd",
    "write_psd_csv",
]
