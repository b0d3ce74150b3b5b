"""Generate phase-noise paths, re-estimate their spectrum and compare with the model.

Reports per seed the median |Welch - model| on the valid band, the Parseval
residual and the sample variance against a quadrature of the model PSD over
[fs/n, fs/2].
"""

import argparse
import time

import numpy as np
from scipy import integrate

from pllnoise import presets
from pllnoise.model import eval_full_model
from pllnoise.synthesis import model_phase_psd, spectral_energy, synth_phase_timeseries, welch_psd


def model_variance(params, fs, n):
    lo, hi = fs / n, fs / 2
    breaks = [c for c in params.corners if lo < c < hi]
    # integrate in log-frequency; the PSD spans many decades
    fn = lambda u: model_phase_psd(params, np.exp(u)) * np.exp(u)
    value, _ = integrate.quad(fn, np.log(lo), np.log(hi), points=np.log(breaks) if breaks else None, limit=200)
    return value


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="UBX_MEAN")
    ap.add_argument("--fs", type=float, default=50e6)
    ap.add_argument("--log2n", type=int, default=20)
    ap.add_argument("--segment-length", type=int, default=2**14)
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()

    params = getattr(presets, args.preset)
    n = 2**args.log2n
    seg = args.segment_length
    lo, hi = 10 * args.fs / seg, args.fs / 8
    var_model = model_variance(params, args.fs, n)
    print(f"{args.preset}: fs={args.fs:g} Hz, n=2^{args.log2n}, band {lo:g}-{hi:g} Hz, "
          f"model variance {var_model:.4g} rad^2")
    print(f"{'seed':>4s} {'median|dev| dB':>15s} {'parseval':>10s} {'var/model':>10s} {'time s':>7s}")
    for seed in range(args.seeds):
        t0 = time.perf_counter()
        series = synth_phase_timeseries(params, args.fs, n, seed=seed)
        est = welch_psd(series, segment_length=seg)
        band = (est.offsets >= lo) & (est.offsets <= hi)
        dev = np.median(np.abs(est.levels[band] - eval_full_model(params, est.offsets[band])))
        pars = spectral_energy(series.spectrum, n) / float(series.phase @ series.phase) - 1
        print(f"{seed:4d} {dev:15.3f} {pars:10.1e} {series.phase.var() / var_model:10.3f} "
              f"{time.perf_counter() - t0:7.2f}")


if __name__ == "__main__":
    main()
