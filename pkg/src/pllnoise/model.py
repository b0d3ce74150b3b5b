"""Pole-zero phase-noise PSD of a PLL synthesizer and its oscillator asymptotes.

The PLL output spectrum (offset ``df`` from the carrier, dBc/Hz) is

    L(df) = -10 log10(pi f_c_ref)
            + 10 log10[ (1 + (df/df_pll)^3) / (1 + (df/f_c_ref)^3)
                        * (1 + (df/df_nf)^3) / (1 + (df/b_pll)^3) ]

and each free-running oscillator (reference or VCO) follows the low-pass form

    L_i(df) = -10 log10(pi f_c) - 10 log10[1 + (df/f_c)^3].

Cut-off frequency and oscillator constant are tied by ``f_c = pi f0^2 c``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, fields
from typing import Any

import numpy as np

from .errors import DomainError, FormatError, IncompleteParamsError, ParameterWarning

__all__ = [
    "PllNoiseParams",
    "eval_full_model",
    "full_model_db",
    "eval_lp_model",
    "cutoff_from_constant",
    "constant_from_cutoff",
    "db_to_linear",
    "linear_to_db",
    "params_to_dict",
    "params_from_dict",
    "dump_params",
    "load_params",
]

_LN10 = math.log(10.0)
_PAIR_RTOL = 1e-12
MIN_CARRIER_HZ = 1e6


def db_to_linear(level_db):
    """dBc/Hz -> linear power ratio per Hz (1 Hz bandwidth implied)."""
    return 10.0 ** (np.asarray(level_db, dtype=float) / 10.0)


def linear_to_db(level_lin):
    return 10.0 * np.log10(level_lin)


def _log10_1p_cube(ratio):
    # 10*log10(1 + r^3) without losing precision for small r
    r3 = np.asarray(ratio, dtype=float) ** 3
    return 10.0 * np.log1p(r3) / _LN10


def _require_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return value


def cutoff_from_constant(c: float, f0: float) -> float:
    """3 dB cut-off frequency (Hz) of an oscillator with constant ``c`` (s) at ``f0`` (Hz)."""
    c = _require_positive("oscillator constant", c)
    f0 = _require_positive("carrier frequency", f0)
    return math.pi * f0 * f0 * c


def constant_from_cutoff(f_c: float, f0: float) -> float:
    """Oscillator constant (s) from a cut-off frequency (Hz); inverse of :func:`cutoff_from_constant`."""
    f_c = _require_positive("cut-off frequency", f_c)
    f0 = _require_positive("carrier frequency", f0)
    return f_c / (math.pi * f0 * f0)


@dataclass(frozen=True)
class PllNoiseParams:
    """Fitted parameter set of the PLL phase-noise model.

    Either member of each ``(f_c_*, c_*)`` pair may be given; the other is
    derived from ``f0``. Giving both requires them to agree to 1e-12.
    Fields other than ``f0`` may be ``None`` for partial fits.
    """

    f0: float
    f_c_ref: float | None = None
    c_ref: float | None = None
    f_c_vco: float | None = None
    c_vco: float | None = None
    df_pll: float | None = None
    b_pll: float | None = None
    df_nf: float | None = None
    l_pll: float | None = None
    l_nf: float | None = None

    def __post_init__(self):
        f0 = _require_positive("f0", self.f0)
        if f0 < MIN_CARRIER_HZ:
            raise DomainError(f"f0 must be >= {MIN_CARRIER_HZ:g} Hz, got {f0:g}")
        object.__setattr__(self, "f0", f0)
        for fc_name, c_name in (("f_c_ref", "c_ref"), ("f_c_vco", "c_vco")):
            fc, c = getattr(self, fc_name), getattr(self, c_name)
            if fc is not None:
                fc = _require_positive(fc_name, fc)
            if c is not None:
                c = _require_positive(c_name, c)
            if fc is None and c is not None:
                fc = cutoff_from_constant(c, f0)
            elif c is None and fc is not None:
                c = constant_from_cutoff(fc, f0)
            elif fc is not None and c is not None:
                implied = cutoff_from_constant(c, f0)
                if abs(implied - fc) > _PAIR_RTOL * fc:
                    raise DomainError(
                        f"{fc_name}={fc!r} inconsistent with {c_name}={c!r} "
                        f"(pi*f0^2*c = {implied!r})"
                    )
            object.__setattr__(self, fc_name, fc)
            object.__setattr__(self, c_name, c)
        for name in ("df_pll", "b_pll", "df_nf"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _require_positive(name, value))
        for name in ("l_pll", "l_nf"):
            value = getattr(self, name)
            if value is not None:
                value = float(value)
                if not math.isfinite(value):
                    raise DomainError(f"{name} must be finite, got {value!r}")
                object.__setattr__(self, name, value)

    @property
    def is_complete(self) -> bool:
        return all(getattr(self, f.name) is not None for f in fields(self))

    @property
    def corners(self) -> tuple[float, float, float, float]:
        """``(f_c_ref, df_pll, b_pll, df_nf)``; raises if any is absent."""
        missing = [n for n in ("f_c_ref", "df_pll", "b_pll", "df_nf") if getattr(self, n) is None]
        if missing:
            raise IncompleteParamsError(f"model needs {', '.join(missing)}")
        return self.f_c_ref, self.df_pll, self.b_pll, self.df_nf

    def ordering_ok(self) -> bool:
        """True when f_c_ref < df_pll < b_pll < df_nf (four-section shape)."""
        a, b, c, d = self.corners
        return a < b < c < d

    def replace(self, **changes) -> "PllNoiseParams":
        data = asdict(self)
        data.update(changes)
        # keep the (f_c, c) pairs consistent when only one side is changed
        for fc_name, c_name in (("f_c_ref", "c_ref"), ("f_c_vco", "c_vco")):
            if fc_name in changes and c_name not in changes:
                data[c_name] = None
            elif c_name in changes and fc_name not in changes:
                data[fc_name] = None
        if "f0" in changes:
            for c_name in ("c_ref", "c_vco"):
                if c_name not in changes:
                    data[c_name] = None
        return PllNoiseParams(**data)


def eval_full_model(params: PllNoiseParams, df):
    """SSB phase noise of the PLL output at offset(s) ``df`` in dBc/Hz.

    Accepts a scalar or array; scalars return a float. Parameters violating
    the corner ordering are evaluated anyway with a :class:`ParameterWarning`.
    """
    f_c_ref, df_pll, b_pll, df_nf = params.corners
    if not (f_c_ref < df_pll < b_pll < df_nf):
        warnings.warn(
            "corner ordering f_c_ref < df_pll < b_pll < df_nf violated; "
            "four-section interpretation does not apply",
            ParameterWarning,
            stacklevel=2,
        )
    return full_model_db(f_c_ref, df_pll, b_pll, df_nf, df)


def full_model_db(f_c_ref: float, df_pll: float, b_pll: float, df_nf: float, df):
    """:func:`eval_full_model` on bare corner frequencies, without the ordering check."""
    x = np.asarray(df, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("offset frequency must be positive and finite")
    level = (
        -10.0 * np.log10(math.pi * f_c_ref)
        + _log10_1p_cube(x / df_pll)
        - _log10_1p_cube(x / f_c_ref)
        + _log10_1p_cube(x / df_nf)
        - _log10_1p_cube(x / b_pll)
    )
    return float(level) if level.ndim == 0 else level


def eval_lp_model(f_c: float, df):
    """Low-pass oscillator model with 3 dB cut-off ``f_c``; ``df >= 0``."""
    f_c = _require_positive("cut-off frequency", f_c)
    x = np.asarray(df, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise DomainError("offset frequency must be non-negative and finite")
    level = -10.0 * math.log10(math.pi * f_c) - _log10_1p_cube(x / f_c)
    return float(level) if np.ndim(level) == 0 else level


# -- serialization -----------------------------------------------------------

_JSON_KEYS = {
    "f0": "f0_hz",
    "f_c_ref": "f_c_ref_hz",
    "c_ref": "c_ref_s",
    "f_c_vco": "f_c_vco_hz",
    "c_vco": "c_vco_s",
    "df_pll": "df_pll_hz",
    "b_pll": "b_pll_hz",
    "df_nf": "df_nf_hz",
    "l_pll": "l_pll_dbchz",
    "l_nf": "l_nf_dbchz",
}

UNITS = {
    "f0": "Hz",
    "f_c_ref": "Hz",
    "c_ref": "s",
    "f_c_vco": "Hz",
    "c_vco": "s",
    "df_pll": "Hz",
    "b_pll": "Hz",
    "df_nf": "Hz",
    "l_pll": "dBc/Hz",
    "l_nf": "dBc/Hz",
}


def params_to_dict(params: PllNoiseParams) -> dict[str, float | None]:
    return {key: getattr(params, name) for name, key in _JSON_KEYS.items()}


def params_from_dict(data: dict[str, Any]) -> PllNoiseParams:
    unknown = set(data) - set(_JSON_KEYS.values())
    if unknown:
        raise FormatError(f"unknown parameter keys: {sorted(unknown)}")
    if "f0_hz" not in data or data["f0_hz"] is None:
        raise FormatError("parameter object lacks f0_hz")
    kwargs = {}
    for name, key in _JSON_KEYS.items():
        value = data.get(key)
        if value is not None and (isinstance(value, bool) or not isinstance(value, (int, float))):
            raise FormatError(f"{key} must be a number or null, got {value!r}")
        kwargs[name] = None if value is None else float(value)
    return PllNoiseParams(**kwargs)


def dump_params(params: PllNoiseParams, fp=None, indent: int = 2) -> str:
    text = json.dumps(params_to_dict(params), indent=indent, allow_nan=False)
    if fp is not None:
        fp.write(text + "\n")
    return text


def load_params(source) -> PllNoiseParams:
    """Read a parameter object from a path, file object or JSON string."""
    if hasattr(source, "read"):
        data = json.load(source)
    elif isinstance(source, str) and source.lstrip().startswith("{"):
        data = json.loads(source)
    else:
        with open(source, encoding="utf-8") as fh:
            data = json.load(fh)
    return params_from_dict(data)
