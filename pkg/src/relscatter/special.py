"""Complex log-Gamma via the Lanczos approximation.

Uses the g = 7, 9-term coefficient set (Godfrey) in the right half plane and the
reflection formula for Re z < 1/2. The branch matches the standard analytic
continuation of log Gamma from the positive real axis (branch cut along the
negative real axis), i.e. ``log_gamma(z + 1) = log_gamma(z) + log(z)``.
"""
from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import PoleError

_G = 7.0
_COEF = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)
_LOG_PI = np.log(np.pi)


def _lanczos(z):
    # valid for Re z >= 1/2
    zm = z - 1.0
    series = np.full_like(zm, _COEF[0])
    for k in range(1, len(_COEF)):
        series = series + _COEF[k] / (zm + k)
    t = zm + _G + 0.5
    return _HALF_LOG_2PI + (zm + 0.5) * np.log(t) - t + np.log(series)


def _sinpi(z):
    x, y = z.real, z.imag
    # reduce x modulo 2 so sin/cos of pi*x stay accurate
    xr = np.fmod(x, 2.0)
    return (np.sin(np.pi * xr) * np.cosh(np.pi * y)
            + 1j * np.cos(np.pi * xr) * np.sinh(np.pi * y))


def log_gamma(z):
    """Principal-branch log Gamma(z) for complex z (scalar or array)."""
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if not np.all(np.isfinite(z)):
        raise ValueError("log_gamma argument must be finite")
    poles = (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))
    if np.any(poles):
        raise PoleError(f"Gamma has a pole at {z[poles][0].real:g}")
    out = np.empty_like(z)
    right = z.real >= 0.5
    if np.any(right):
        out[right] = _lanczos(z[right])
    left = ~right
    if np.any(left):
        zl = z[left]
        # log Gamma(z) = log pi - log sin(pi z) - log Gamma(1 - z) + 2 pi i k;
        # k restores the continuous branch away from the real axis
        k = np.copysign(1.0, zl.imag) * np.floor(0.5 * zl.real + 0.25)
        res = _LOG_PI - np.log(_sinpi(zl)) - _lanczos(1.0 - zl)
        res = res + 2j * np.pi * k
        on_axis = zl.imag == 0
        if np.any(on_axis):
            # negative real axis: take the real part, keep the sign of Gamma as
            # an i*pi*floor term consistent with the analytic continuation above
            res[on_axis] = res[on_axis].real + 1j * np.pi * np.floor(zl.real[on_axis])
        out[left] = res
    return out[0] if scalar else out


def gamma(z):
    return np.exp(log_gamma(z))


def gamma_ratio(numerators: Iterable, denominators: Iterable):
    """prod Gamma(num) / prod Gamma(den), evaluated through log Gamma."""
    total = 0j
    for a in numerators:
        total = total + log_gamma(a)
    for b in denominators:
        total = total - log_gamma(b)
    return np.exp(total)
