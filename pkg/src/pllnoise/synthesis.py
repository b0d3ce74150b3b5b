"""Synthetic PSD traces and time-domain phase-noise paths from a parameter set.

Time series are produced by spectral shaping: complex Gaussian FFT
coefficients are scaled by ``sqrt(S(f) * df_bin)`` and inverse transformed.
``S(f)`` is the model level read as a one-sided phase PSD in rad^2/Hz,
``S = 10**(L/10)`` (small-angle regime, no factor of two between L and S).
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import DomainError, FormatError, InsufficientPointsError
from .ingest import PsdTrace
from .model import PllNoiseParams, full_model_db

__all__ = [
    "PhaseTimeSeries",
    "synth_psd",
    "colored_spectrum",
    "synth_phase_timeseries",
    "welch_psd",
    "write_timeseries",
    "read_timeseries",
    "write_timeseries_csv",
    "read_timeseries_csv",
]

MIN_LENGTH = 2 ** 12
MAGIC = b"PNTS"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sH10x")
_META = struct.Struct("<dQ")


def synth_psd(
    params: PllNoiseParams,
    f_lo: float = 100.0,
    f_hi: float = 10e6,
    points_per_decade: int = 50,
    noise_sigma_db: float = 0.0,
    seed: int | None = None,
    label: str = "synthetic",
) -> PsdTrace:
    """Sample the model on a log grid, optionally with i.i.d. Gaussian dB noise.

    The grid runs from ``f_lo`` to ``f_hi`` inclusive with
    ``ceil(decades * ppd) + 1`` points.
    """
    if not (0 < f_lo < f_hi) or not math.isfinite(f_hi):
        raise DomainError(f"need 0 < f_lo < f_hi, got {f_lo!r}, {f_hi!r}")
    if points_per_decade < 1:
        raise DomainError("points_per_decade must be >= 1")
    if not noise_sigma_db >= 0:
        raise DomainError("noise_sigma_db must be >= 0")
    n = int(math.ceil(math.log10(f_hi / f_lo) * points_per_decade - 1e-9)) + 1
    grid = np.geomspace(f_lo, f_hi, n)
    grid[0], grid[-1] = f_lo, f_hi
    levels = full_model_db(*params.corners, grid)
    if noise_sigma_db > 0:
        rng = np.random.default_rng(seed)
        levels = levels + rng.normal(0.0, noise_sigma_db, size=n)
    return PsdTrace(offsets=grid, levels=levels, f0=params.f0, label=label)


@dataclass(frozen=True, eq=False)
class PhaseTimeSeries:
    sample_rate: float
    phase: np.ndarray
    seed: int | None = None
    # one-sided rfft coefficients the phase was built from (not serialized)
    spectrum: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        phase = np.asarray(self.phase, dtype=float)
        object.__setattr__(self, "phase", phase)
        if not self.sample_rate > 0:
            raise DomainError("sample_rate must be positive")
        if not np.all(np.isfinite(phase)):
            raise DomainError("phase samples must be finite")

    def __len__(self):
        return self.phase.size


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def model_phase_psd(params: PllNoiseParams, freqs: np.ndarray) -> np.ndarray:
    """One-sided phase PSD in rad^2/Hz at positive ``freqs``.

    Frequencies under ``f_c_ref`` reuse the value at ``f_c_ref``.
    """
    f = np.maximum(np.asarray(freqs, dtype=float), params.f_c_ref)
    return 10.0 ** (full_model_db(*params.corners, f) / 10.0)


def colored_spectrum(
    params: PllNoiseParams, sample_rate: float, n: int, rng: np.random.Generator
) -> np.ndarray:
    """One-sided FFT coefficients whose ``irfft`` has phase PSD ``S(f)``.

    Bin k (0 < k < n/2) gets ``n * sqrt(S df / 2) * (g1 + i g2) / sqrt(2)``
    so that ``E|x|^2`` sums ``S df`` over the bins; DC is zero and the
    Nyquist bin is real.
    """
    df_bin = sample_rate / n
    freqs = np.arange(n // 2 + 1) * df_bin
    psd = np.zeros(freqs.size)
    psd[1:] = model_phase_psd(params, freqs[1:])
    amp = np.sqrt(psd * df_bin)
    coeffs = (rng.standard_normal(freqs.size) + 1j * rng.standard_normal(freqs.size)) / math.sqrt(2.0)
    spec = n * amp * coeffs / math.sqrt(2.0)
    spec[0] = 0.0
    # Nyquist bin appears once in the full spectrum: real, full variance
    spec[-1] = n * amp[-1] * rng.standard_normal()
    return spec


def synth_phase_timeseries(
    params: PllNoiseParams, sample_rate: float, n: int, seed: int | None = None
) -> PhaseTimeSeries:
    """Real phase-noise path (rad) of length ``n`` whose PSD follows the model."""
    n = int(n)
    if not _is_pow2(n) or n < MIN_LENGTH:
        raise DomainError(f"n must be a power of two >= {MIN_LENGTH}, got {n}")
    if not sample_rate > 0:
        raise DomainError("sample_rate must be positive")
    f_c_ref, df_pll, b_pll, df_nf = params.corners
    highest = max(f_c_ref, df_pll, b_pll, df_nf)
    if sample_rate <= 2 * highest:
        raise DomainError(
            f"sample_rate {sample_rate:g} Hz must exceed twice the highest corner ({highest:g} Hz)"
        )
    rng = np.random.default_rng(seed)
    spec = colored_spectrum(params, sample_rate, n, rng)
    phase = np.fft.irfft(spec, n)
    return PhaseTimeSeries(sample_rate=float(sample_rate), phase=phase, seed=seed, spectrum=spec)


def spectral_energy(spec: np.ndarray, n: int) -> float:
    """Time-domain energy implied by one-sided rfft coefficients (Parseval)."""
    power = np.abs(spec) ** 2
    inner = power[1:-1].sum() if n % 2 == 0 else power[1:].sum()
    edge = power[0] + (power[-1] if n % 2 == 0 else 0.0)
    return float((edge + 2.0 * inner) / n)


def welch_psd(
    series: PhaseTimeSeries,
    segment_length: int = 2 ** 14,
    overlap_fraction: float = 0.5,
    f0: float = 1.0,
) -> PsdTrace:
    """Averaged Hann-windowed periodogram of a phase series, one-sided, in dB.

    White input of variance s^2 reads ``s^2 / (fs/2)``. The DC bin and the
    Nyquist bin (which the one-sided scaling leaves at half weight) are
    dropped. ``f0`` is carrier metadata attached to the returned trace.
    """
    seg = int(segment_length)
    if not _is_pow2(seg):
        raise DomainError("segment_length must be a power of two")
    if not 0.0 <= overlap_fraction < 1.0:
        raise DomainError("overlap_fraction must lie in [0, 1)")
    n = len(series)
    noverlap = int(round(seg * overlap_fraction))
    if seg > n:
        raise InsufficientPointsError(f"segment_length {seg} exceeds series length {n}")
    n_segments = 1 + (n - seg) // (seg - noverlap)
    if n_segments < 8:
        raise InsufficientPointsError(f"only {n_segments} Welch segments; need >= 8")
    freqs, pxx = signal.welch(
        series.phase,
        fs=series.sample_rate,
        window="hann",
        nperseg=seg,
        noverlap=noverlap,
        scaling="density",
        return_onesided=True,
    )
    freqs, pxx = freqs[1:-1], pxx[1:-1]
    tiny = np.finfo(float).tiny
    return PsdTrace(
        offsets=freqs,
        levels=10.0 * np.log10(np.maximum(pxx, tiny)),
        f0=f0,
        n_averages=n_segments,
        label="welch",
    )


# -- file formats ---------------------------------------------------------------


def write_timeseries(series: PhaseTimeSeries, dest) -> None:
    """Binary layout: ``PNTS`` magic, u16 version, 10 reserved bytes, then
    little-endian f64 sample rate, u64 length and the f64 samples."""
    payload = (
        _HEADER.pack(MAGIC, FORMAT_VERSION)
        + _META.pack(series.sample_rate, len(series))
        + series.phase.astype("<f8").tobytes()
    )
    if hasattr(dest, "write"):
        dest.write(payload)
    else:
        with open(dest, "wb") as fh:
            fh.write(payload)


def read_timeseries(source) -> PhaseTimeSeries:
    if hasattr(source, "read"):
        data = source.read()
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    head = _HEADER.size + _META.size
    if len(data) < head:
        raise FormatError("file too short for a phase time-series header")
    magic, version = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported version {version}")
    sample_rate, length = _META.unpack_from(data, _HEADER.size)
    if len(data) != head + 8 * length:
        raise FormatError(f"expected {length} samples, file holds {(len(data) - head) / 8:g}")
    phase = np.frombuffer(data, dtype="<f8", count=length, offset=head).astype(float)
    return PhaseTimeSeries(sample_rate=sample_rate, phase=phase)


def write_timeseries_csv(series: PhaseTimeSeries, dest) -> None:
    buf = io.StringIO()
    buf.write(f"# sample_rate_hz={series.sample_rate!r}\n")
    buf.write("sample_index,phase_rad\n")
    for i, v in enumerate(series.phase):
        buf.write(f"{i},{v:.17g}\n")
    text = buf.getvalue()
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def read_timeseries_csv(source) -> PhaseTimeSeries:
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    sample_rate = None
    values = []
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            if key.strip() == "sample_rate_hz":
                sample_rate = float(value)
            continue
        if not header_seen:
            if line != "sample_index,phase_rad":
                raise FormatError(f"line {lineno}: unexpected header {line!r}")
            header_seen = True
            continue
        idx, _, val = line.partition(",")
        if int(idx) != len(values):
            raise FormatError(f"line {lineno}: sample index {idx} out of sequence")
        values.append(float(val))
    if sample_rate is None:
        raise FormatError("missing sample_rate_hz metadata")
    return PhaseTimeSeries(sample_rate=sample_rate, phase=np.array(values))
