"""Shared trace builders for the test suite."""

import numpy as np

from pllnoise.ingest import PsdTrace


def line_trace(slope, intercept=0.0, f_lo=100.0, f_hi=1e5, n=64, f0=2e9, noise=0.0, seed=0):
    f = np.geomspace(f_lo, f_hi, n)
    levels = intercept + slope * np.log10(f)
    if noise:
        levels = levels + np.random.default_rng(seed).normal(0, noise, n)
    return PsdTrace(offsets=f, levels=levels, f0=f0)
