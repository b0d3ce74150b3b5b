"""Bias and spread of the fitted parameters on synthetic traces.

For each daughterboard preset: the noiseless fit, the median of noisy fits
over several seeds, and the effect of the estimator normalization.
"""

import argparse

import numpy as np

from pllnoise import presets
from pllnoise.estimation import FitConfig, fit_params
from pllnoise.synthesis import synth_psd

FIELDS = ("f_c_ref", "f_c_vco", "df_pll", "b_pll", "df_nf", "l_pll", "l_nf")


def _dev(name, value, truth):
    if value is None:
        return "      n/a"
    if name.startswith("l_"):
        return f"{value - truth:+8.3f}dB"
    return f"{100 * (value / truth - 1):+8.2f}%"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--noise-db", type=float, default=0.5)
    ap.add_argument("--ppd", type=int, default=50)
    args = ap.parse_args()

    for preset in ("UBX_MEAN", "CBX_MEAN"):
        truth = getattr(presets, preset)
        print(f"\n{preset}  (noise {args.noise_db} dB, {args.seeds} seeds, {args.ppd} points/decade)")
        print(f"{'field':8s} {'mean clean':>10s} {'M-1 clean':>11s} {'mean noisy':>11s} {'IQR':>9s}")
        clean = {n: fit_params(synth_psd(truth, points_per_decade=args.ppd), FitConfig(normalization=n)).params
                 for n in ("mean", "paper")}
        noisy = [
            fit_params(synth_psd(truth, points_per_decade=args.ppd, noise_sigma_db=args.noise_db, seed=s)).params
            for s in range(args.seeds)
        ]
        for name in FIELDS:
            t = getattr(truth, name)
            vals = np.array([getattr(p, name) for p in noisy])
            q1, q3 = np.percentile(vals, [25, 75])
            iqr = q3 - q1 if name.startswith("l_") else (q3 - q1) / t
            iqr_s = f"{iqr:.3f}dB" if name.startswith("l_") else f"{100 * iqr:.2f}%"
            print(
                f"{name:8s} {_dev(name, getattr(clean['mean'], name), t):>10s} "
                f"{_dev(name, getattr(clean['paper'], name), t):>11s} "
                f"{_dev(name, float(np.median(vals)), t):>11s} {iqr_s:>9s}"
            )
        implied = truth.f_c_ref * (truth.b_pll / truth.df_pll) ** 1.5
        print(f"VCO cut-off implied by the corners: {implied:.2f} Hz (preset {truth.f_c_vco} Hz)")


if __name__ == "__main__":
    main()
