"""Closed forms for Gaussian integrals with complex coefficients."""

from __future__ import annotations

import numpy as np
from scipy.special import wofz

__all__ = ["gaussian_segment_integral"]

_SQRT_PI = np.sqrt(np.pi)


def _erfc_scaled(t, c):
    """exp(c) * erfc(t), evaluated through the Faddeeva function.

    erfc(t) = exp(-t^2) w(i t) is used when Re t >= 0 and the reflection
    erfc(t) = 2 - erfc(-t) otherwise, so w is only ever called in the closed
    upper half plane where it is bounded.
    """
    t = np.asarray(t, dtype=complex)
    c = np.asarray(c, dtype=complex)
    pos = t.real >= 0
    direct = np.exp(c - t * t) * wofz(np.where(pos, 1j * t, -1j * t))
    return np.where(pos, direct, 2 * np.exp(c) - direct)


def gaussian_segment_integral(a, b, lo, hi, shift=0.0):
    """int_lo^hi exp(-a k^2 + b k + shift) dk for complex a (Re a > 0), b.

    ``lo`` and ``hi`` may be infinite.  Broadcasts over all arguments.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if np.any(a.real <= 0):
        raise ValueError("quadratic coefficient must have positive real part")
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    ra = np.sqrt(a)
    k0 = b / (2 * a)
    c = b * b / (4 * a) + shift
    with np.errstate(invalid="ignore"):
        t1 = ra * (lo - k0)
        t2 = ra * (hi - k0)
    lo_inf = np.isneginf(lo)
    hi_inf = np.isposinf(hi)
    e1 = np.where(lo_inf, 2 * np.exp(c), _erfc_scaled(np.where(lo_inf, 0, t1), c))
    e2 = np.where(hi_inf, 0, _erfc_scaled(np.where(hi_inf, 0, t2), c))
    # when both ends lie left of the centre the 2 exp(c) terms cancel exactly
    both_left = (~lo_inf) & (~hi_inf) & (t1.real < 0) & (t2.real < 0)
    if np.any(both_left):
        w1 = np.exp(c - t1 * t1) * wofz(-1j * t1)
        w2 = np.exp(c - t2 * t2) * wofz(-1j * t2)
        diff = np.where(both_left, w2 - w1, e1 - e2)
    else:
        diff = e1 - e2
    return 0.5 * _SQRT_PI / ra * diff
