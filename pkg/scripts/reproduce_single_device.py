"""Run the estimation chain on a synthetic trace of the worked UBX device.

Prints each intermediate estimate next to the published value and, with
--plot, writes the trace/section/model overlay as SVG.
"""

import argparse
from pathlib import Path

import numpy as np

from pllnoise import presets
from pllnoise.cli import _fit_plot
from pllnoise.estimation import FitConfig, fit_params, intersection_freq
from pllnoise.synthesis import synth_psd

REPORTED = {
    "f_c_ref": 0.58,
    "f_c_vco": 630.0,
    "l_pll": -107.9,
    "l_nf": -133.7,
    "df_pll": 1865.7,
    "b_pll": 197.9e3,
    "df_nf": 1439.8e3,
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--noise-db", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--normalization", choices=("mean", "paper"), default="mean")
    ap.add_argument("--plot", type=Path)
    args = ap.parse_args()

    trace = synth_psd(presets.UBX_SINGLE, noise_sigma_db=args.noise_db, seed=args.seed, label="UBX single")
    report = fit_params(trace, FitConfig(normalization=args.normalization))
    p = report.params

    print("sections:")
    for name, rng in report.sections.ranges.items():
        print(f"  {name.value:18s} " + ("absent" if rng is None else f"{rng[0]:10.4g} - {rng[1]:10.4g} Hz"))
    print(f"\n{'parameter':10s} {'estimate':>14s} {'reported':>14s} {'rel dev':>9s}")
    for name, ref in REPORTED.items():
        value = getattr(p, name)
        dev = value - ref if name.startswith("l_") else value / ref - 1
        unit = " dB" if name.startswith("l_") else "%"
        shown = f"{dev:+.2f}{unit}" if unit == " dB" else f"{100 * dev:+.2f}{unit}"
        print(f"{name:10s} {value:14.6g} {ref:14.6g} {shown:>9s}")
    print(f"\nc_ref {p.c_ref:.4g} s, c_vco {p.c_vco:.4g} s, residual rms {report.residual_rms_db:.3f} dB")

    # corners straight from the rounded published intermediates
    fc_ref = presets.UBX_SINGLE.f_c_ref
    fc_vco = presets.UBX_SINGLE.f_c_vco
    corners = intersection_freq(np.array([fc_ref, fc_vco, fc_vco]), np.array([-107.9, -107.9, -133.7]))
    print("corners from published intermediates: " + ", ".join(f"{c:.6g} Hz" for c in corners))
    for w in report.warnings:
        print("warning:", w)
    if args.plot:
        args.plot.write_text(_fit_plot(trace, report), encoding="utf-8")
        print(f"wrote {args.plot}")


if __name__ == "__main__":
    main()
