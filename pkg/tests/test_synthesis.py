import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pllnoise import presets
from pllnoise.errors import DomainError, FormatError, InsufficientPointsError
from pllnoise.model import PllNoiseParams, eval_full_model
from pllnoise.synthesis import (
    PhaseTimeSeries,
    colored_spectrum,
    read_timeseries,
    read_timeseries_csv,
    spectral_energy,
    synth_phase_timeseries,
    synth_psd,
    welch_psd,
    write_timeseries,
    write_timeseries_csv,
)

# corners chosen so the pole/zero pairs cancel: L = -10 log10(pi 1e3) everywhere
WHITE = PllNoiseParams(f0=2e9, f_c_ref=1e3, df_pll=1e3, b_pll=1e4, df_nf=1e4)


def test_synth_psd_is_the_model():
    trace = synth_psd(presets.CBX_MEAN)
    np.testing.assert_array_equal(trace.levels, eval_full_model(presets.CBX_MEAN, trace.offsets))
    assert trace.offsets[0] == 100.0 and trace.offsets[-1] == 10e6
    assert len(trace) == 251
    assert trace.f0 == presets.CBX_MEAN.f0


def test_synth_psd_noise_is_seeded():
    a = synth_psd(presets.UBX_MEAN, noise_sigma_db=0.5, seed=11)
    b = synth_psd(presets.UBX_MEAN, noise_sigma_db=0.5, seed=11)
    c = synth_psd(presets.UBX_MEAN, noise_sigma_db=0.5, seed=12)
    assert a.levels.tobytes() == b.levels.tobytes()
    assert not np.array_equal(a.levels, c.levels)
    resid = a.levels - eval_full_model(presets.UBX_MEAN, a.offsets)
    assert resid.std() == pytest.approx(0.5, rel=0.15)


@pytest.mark.parametrize("kwargs", [{"f_lo": 0.0}, {"f_lo": 1e4, "f_hi": 1e3}, {"noise_sigma_db": -1.0}])
def test_synth_psd_domain(kwargs):
    with pytest.raises(DomainError):
        synth_psd(presets.UBX_MEAN, **kwargs)


def test_timeseries_deterministic():
    a = synth_phase_timeseries(presets.UBX_MEAN, 50e6, 2**14, seed=7)
    b = synth_phase_timeseries(presets.UBX_MEAN, 50e6, 2**14, seed=7)
    c = synth_phase_timeseries(presets.UBX_MEAN, 50e6, 2**14, seed=8)
    assert a.phase.tobytes() == b.phase.tobytes()
    assert not np.array_equal(a.phase, c.phase)
    assert a.seed == 7


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), log_n=st.integers(12, 16))
def test_parseval(seed, log_n):
    n = 2**log_n
    series = synth_phase_timeseries(presets.UBX_MEAN, 50e6, n, seed=seed)
    energy = float(series.phase @ series.phase)
    assert spectral_energy(series.spectrum, n) == pytest.approx(energy, rel=1e-9)


def test_spectrum_structure():
    spec = colored_spectrum(presets.UBX_MEAN, 50e6, 2**12, np.random.default_rng(0))
    assert spec[0] == 0 and spec[-1].imag == 0
    assert spec.size == 2**11 + 1


# Frozen 30-digit mpmath quadratures of 10**(L/10) over [fs/n, fs/2], n = 2**20.
@pytest.mark.parametrize(
    "params, fs, integral",
    [
        (WHITE, 1e6, 159.15463952793222),
        # fs/n = 4096 Hz keeps every bin out of the f^-3 region below df_pll
        (presets.UBX_MEAN, 2.0**32, 9.0174164341425166e-5),
    ],
)
def test_variance_matches_quadrature(params, fs, integral):
    series = synth_phase_timeseries(params, fs, 2**20, seed=5)
    assert series.phase.var() == pytest.approx(integral, rel=0.10)


def test_white_params_give_flat_periodogram():
    series = synth_phase_timeseries(WHITE, 1e6, 2**18, seed=1)
    est = welch_psd(series, segment_length=2**10)
    level = -10 * math.log10(math.pi * 1e3)
    assert np.all(np.abs(est.levels - level) < 2.0)


def test_welch_white_calibration():
    rng = np.random.default_rng(3)
    sigma = 0.01
    fs = 1e6
    series = PhaseTimeSeries(fs, rng.normal(0, sigma, 2**18))
    est = welch_psd(series, segment_length=2**10)
    analytic = 10 * math.log10(sigma**2 / (fs / 2))
    assert np.all(np.abs(est.levels - analytic) < 1.0)
    assert np.median(est.levels) == pytest.approx(analytic, abs=0.1)


def test_welch_sinusoid_peak():
    rng = np.random.default_rng(4)
    fs, n, seg = 1e6, 2**16, 2**12
    k = 300
    f_tone = k * fs / seg
    t = np.arange(n) / fs
    phase = 1e-3 * np.sin(2 * np.pi * f_tone * t) + rng.normal(0, 1e-6, n)
    est = welch_psd(PhaseTimeSeries(fs, phase), segment_length=seg)
    peak = int(np.argmax(est.levels))
    assert est.offsets[peak] == pytest.approx(f_tone)
    # Hann main lobe spans +-1 bin; compare with the bins beyond it
    neighbors = np.r_[est.levels[peak - 20 : peak - 2], est.levels[peak + 3 : peak + 21]]
    assert est.levels[peak] - neighbors.max() >= 30.0


def test_welch_bins_and_errors():
    series = synth_phase_timeseries(presets.UBX_MEAN, 50e6, 2**16, seed=0)
    est = welch_psd(series, segment_length=2**12, f0=2e9)
    assert est.offsets[0] == pytest.approx(50e6 / 2**12)
    assert len(est) == 2**11 - 1 and est.f0 == 2e9
    with pytest.raises(InsufficientPointsError):
        welch_psd(series, segment_length=2**15)
    with pytest.raises(DomainError):
        welch_psd(series, segment_length=3000)
    with pytest.raises(DomainError):
        welch_psd(series, overlap_fraction=1.0)


def test_closure_ubx():
    fs, seg = 50e6, 2**14
    devs = []
    for seed in range(3):
        series = synth_phase_timeseries(presets.UBX_MEAN, fs, 2**20, seed=seed)
        est = welch_psd(series, segment_length=seg)
        band = (est.offsets >= 10 * fs / seg) & (est.offsets <= fs / 8)
        devs.append(np.median(np.abs(est.levels[band] - eval_full_model(presets.UBX_MEAN, est.offsets[band]))))
    assert np.median(devs) <= 1.0


@pytest.mark.parametrize(
    "kwargs",
    [{"n": 2**12 + 1}, {"n": 2**11}, {"sample_rate": 1e6}, {"sample_rate": -1.0}],
)
def test_timeseries_preconditions(kwargs):
    args = {"sample_rate": 50e6, "n": 2**12} | kwargs
    with pytest.raises(DomainError):
        synth_phase_timeseries(presets.UBX_MEAN, args["sample_rate"], args["n"], seed=0)


def test_binary_round_trip(tmp_path):
    series = synth_phase_timeseries(presets.CBX_MEAN, 50e6, 2**12, seed=2)
    path = tmp_path / "x.pnts"
    write_timeseries(series, path)
    raw = path.read_bytes()
    assert raw[:4] == b"PNTS" and len(raw) == 32 + 8 * 2**12
    assert int.from_bytes(raw[4:6], "little") == 1
    back = read_timeseries(path)
    assert back.sample_rate == series.sample_rate
    assert back.phase.tobytes() == series.phase.tobytes()


@pytest.mark.parametrize(
    "mutate, msg",
    [
        (lambda b: b"XXXX" + b[4:], "magic"),
        (lambda b: b[:4] + (9).to_bytes(2, "little") + b[6:], "version"),
        (lambda b: b[:-8], "samples"),
        (lambda b: b[:10], "short"),
    ],
)
def test_binary_rejects_corruption(mutate, msg):
    buf = io.BytesIO()
    write_timeseries(PhaseTimeSeries(1e6, np.arange(16.0)), buf)
    with pytest.raises(FormatError, match=msg):
        read_timeseries(mutate(buf.getvalue()))


def test_csv_round_trip(tmp_path):
    series = PhaseTimeSeries(12.5e6, np.random.default_rng(0).normal(0, 1e-3, 64))
    path = tmp_path / "x.csv"
    write_timeseries_csv(series, path)
    back = read_timeseries_csv(path)
    assert back.sample_rate == series.sample_rate
    np.testing.assert_array_equal(back.phase, series.phase)


def test_csv_errors():
    with pytest.raises(FormatError, match="sample_rate"):
        read_timeseries_csv(io.StringIO("sample_index,phase_rad\n0,1\n"))
    with pytest.raises(FormatError, match="sequence"):
        read_timeseries_csv(io.StringIO("# sample_rate_hz=1\nsample_index,phase_rad\n1,1\n"))
