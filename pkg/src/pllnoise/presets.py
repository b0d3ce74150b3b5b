"""Reference parameter sets for the USRP X310 daughterboards at a 2 GHz carrier.

``UBX_MEAN``/``CBX_MEAN`` hold per-type population means and ``*_STD`` the
matching standard deviations (MAX2871 and MAX2870 synthesizers). The cut-off
frequencies are the primary values; oscillator constants are derived from
them so that each set is internally consistent.

``UBX_SINGLE`` is one UBX device worked through end to end; its cut-offs are
derived from the reported oscillator constants (4.58e-20 s, 5.01e-17 s).
"""

from .model import PllNoiseParams, cutoff_from_constant

CARRIER_HZ = 2e9

UBX_MEAN = PllNoiseParams(
    f0=CARRIER_HZ,
    f_c_ref=0.5853,
    f_c_vco=537.6,
    l_pll=-107.8,
    df_pll=1872.1,
    b_pll=177.3e3,
    l_nf=-134.0,
    df_nf=1319e3,
)

UBX_STD = {
    "f_c_ref": 0.0503,
    "c_ref": 0.4005e-20,
    "f_c_vco": 63.26,
    "c_vco": 0.5034e-17,
    "l_pll": 0.7843,
    "df_pll": 119.61,
    "b_pll": 20.04e3,
    "l_nf": 0.1847,
    "df_nf": 106.20e3,
}

CBX_MEAN = PllNoiseParams(
    f0=CARRIER_HZ,
    f_c_ref=0.5570,
    f_c_vco=193.4,
    l_pll=-91.9,
    df_pll=538.7,
    b_pll=26.6e3,
    l_nf=-144.4,
    df_nf=1487e3,
)

CBX_STD = {
    "f_c_ref": 0.0249,
    "c_ref": 0.1978e-20,
    "f_c_vco": 16.69,
    "c_vco": 0.1328e-17,
    "l_pll": 1.735,
    "df_pll": 64.25,
    "b_pll": 3.8e3,
    "l_nf": 0.2197,
    "df_nf": 92.89e3,
}

UBX_SINGLE = PllNoiseParams(
    f0=CARRIER_HZ,
    f_c_ref=cutoff_from_constant(4.58e-20, CARRIER_HZ),
    f_c_vco=cutoff_from_constant(5.01e-17, CARRIER_HZ),
    l_pll=-107.9,
    df_pll=1865.7,
    b_pll=197.9e3,
    l_nf=-133.7,
    df_nf=1439.8e3,
)

# spectrum-analyzer floor measured with a 50 ohm termination
ANALYZER_FLOOR_DBCHZ = -153.0
