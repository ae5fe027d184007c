"""Coherent-state symbols of the constraint operators P|P|^gamma and P^n.

The symbol of P|P|^gamma is the Gaussian average

    phi_gamma(p) = (pi hbar)^{-1/2} int k|k|^gamma exp(-(k-p)^2/hbar) dk,

which is odd in p, behaves like p|p|^gamma for |p| >> sqrt(hbar) and
vanishes linearly, with slope hbar^{gamma/2} k_o, near p = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gamma as gamma_fn

from .coherent_states import as_hbar
from .errors import InvalidGamma, UnsupportedPower
from .quadrature import QuadratureSpec, Scheme, integrate_adaptive, integrate_gauss_hermite

__all__ = [
    "SymbolProfile",
    "phi_gamma",
    "slope_constant",
    "numeric_slope",
    "phi_gamma_approx",
    "even_symbol",
    "regularity_report",
    "sweep_rows",
]

# Gaussian tail cut-off in units of sqrt(hbar): exp(-81) ~ 6e-36.
_TAIL = 9.0
_SPEC = QuadratureSpec(scheme=Scheme.ADAPTIVE_INTERVAL, abs_tol=1e-15, rel_tol=1e-13)


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not gamma > -1 or not math.isfinite(gamma):
        raise InvalidGamma(f"gamma must be a finite number > -1, got {gamma!r}")
    return gamma


def _is_polynomial(gamma: float) -> bool:
    return gamma >= 0 and gamma == int(gamma) and int(gamma) % 2 == 0


@dataclass(frozen=True)
class SymbolProfile:
    gamma: float
    hbar: float
    k_o: float
    slope_at_zero: float

    @property
    def crossover(self) -> float:
        """|p| scale sqrt(hbar) separating the linear and power-law regimes."""
        return math.sqrt(self.hbar)


def _half_line(power: float, center: float, h: float, sign: float) -> float:
    """int_0^inf k^power exp(-(k - sign*center)^2/h) dk.

    Substituting k = t^4 removes the non-analytic endpoint behaviour of
    k^power at the origin; the k = 0 node is never evaluated.
    """
    mu = sign * center
    top = max(mu, 0.0) + _TAIL * math.sqrt(h)

    def integrand(t):
        t = np.asarray(t, dtype=float)
        k = t ** 4
        with np.errstate(divide="ignore"):
            logk = np.log(k)
        val = np.exp(power * logk - (k - mu) ** 2 / h) * 4 * t ** 3
        return np.where(k > 0, val, 0.0)

    return float(np.real(integrate_adaptive(integrand, 0.0, top ** 0.25, _SPEC)))


def phi_gamma(p: float, gamma: float, hbar=1.0, form: str = "shifted_gaussian") -> float:
    """Coherent-state symbol of P|P|^gamma.

    Even integer gamma gives a polynomial integrand, handled exactly by
    Gauss-Hermite quadrature.  Otherwise the integral is split at the
    non-analytic point and each half-line is integrated adaptively.

    ``form`` selects the integrand: ``"shifted_gaussian"`` integrates
    k|k|^gamma against a Gaussian centred at p, ``"shifted_argument"``
    integrates (k+p)|k+p|^gamma against a Gaussian centred at 0 (the split
    then sits at k = -p).
    """
    gamma = _check_gamma(gamma)
    h = as_hbar(hbar)
    p = float(p)
    if form not in ("shifted_gaussian", "shifted_argument"):
        raise ValueError(f"unknown form {form!r}")
    if _is_polynomial(gamma):
        n = int(gamma) + 1
        # the rule is exact at this order; the absolute floor only matters at p = 0
        scale = (abs(p) + math.sqrt(h)) ** n
        spec = QuadratureSpec(order=max(2, n // 2 + 2), abs_tol=1e-15 * scale, rel_tol=1e-14)
        if form == "shifted_gaussian":
            return float(np.real(integrate_gauss_hermite(lambda k: k ** n, p, math.sqrt(h), spec)))
        return float(np.real(integrate_gauss_hermite(lambda k: (k + p) ** n, 0.0, math.sqrt(h), spec)))
    power = gamma + 1
    if form == "shifted_gaussian":
        # k > 0 and k < 0 halves, the latter reflected onto k > 0
        pos = _half_line(power, p, h, +1.0)
        neg = _half_line(power, p, h, -1.0)
    else:
        pos = _shifted_half(power, p, h, +1.0)
        neg = _shifted_half(power, p, h, -1.0)
    return (pos - neg) / math.sqrt(math.pi * h)


def _shifted_half(power: float, p: float, h: float, sign: float) -> float:
    """int of |k+p|^power exp(-k^2/h) over the side of k = -p given by ``sign``.

    Integrated directly in k (no substitution) so that it is an independent
    route from :func:`_half_line`; the endpoint k = -p is never a node.
    """
    width = _TAIL * math.sqrt(h)
    lo, hi = (-p, max(-p, 0.0) + width) if sign > 0 else (min(-p, 0.0) - width, -p)

    def integrand(k):
        k = np.asarray(k, dtype=float)
        s = np.abs(k + p)
        with np.errstate(divide="ignore"):
            val = np.exp(power * np.log(s) - k * k / h)
        return np.where(s > 0, val, 0.0)

    return float(np.real(integrate_adaptive(integrand, lo, hi, _SPEC)))


def slope_constant(gamma: float, hbar=1.0) -> SymbolProfile:
    """k_o = 2 Gamma((gamma+3)/2)/sqrt(pi) and slope hbar^{gamma/2} k_o."""
    gamma = _check_gamma(gamma)
    h = as_hbar(hbar)
    k_o = 2 * gamma_fn((gamma + 3) / 2) / math.sqrt(math.pi)
    return SymbolProfile(gamma, h, float(k_o), float(h ** (gamma / 2) * k_o))


def numeric_slope(gamma: float, hbar=1.0, step: float = 1e-2) -> float:
    """Five-point central difference of phi_gamma at p = 0 (step in units of sqrt(hbar))."""
    h = as_hbar(hbar)
    dx = step * math.sqrt(h)
    f = [phi_gamma(s * dx, gamma, h) for s in (-2, -1, 1, 2)]
    return (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * dx)


def phi_gamma_approx(p: float, gamma: float, hbar=1.0) -> float:
    """Interpolation k_o p (hbar + p^2 k_o^{-2/gamma})^{gamma/2} between both regimes."""
    gamma = _check_gamma(gamma)
    if gamma == 0:
        raise InvalidGamma("the interpolation formula needs gamma != 0")
    h = as_hbar(hbar)
    k_o = slope_constant(gamma, h).k_o
    return float(k_o * p * (h + p * p * k_o ** (-2 / gamma)) ** (gamma / 2))


def even_symbol(n: int, p: float, hbar=1.0) -> float:
    """Symbol of P^n for n in {2, 4}: p^2 + hbar/2 or p^4 + 3 hbar p^2 + 3 hbar^2/4."""
    h = as_hbar(hbar)
    if n == 2:
        return p * p + 0.5 * h
    if n == 4:
        return p ** 4 + 3 * h * p * p + 0.75 * h * h
    raise UnsupportedPower(f"even_symbol supports n in {{2, 4}}, got {n!r}")


def regularity_report(gamma: float, hbar_values: Sequence[float]) -> dict:
    """Slope at zero and crossover scale for each hbar, with the hbar -> 0 trend.

    A symbol is classified regular when its slope at its zero is finite and
    nonzero.  The trend is ``"vanishing"`` for gamma > 0, ``"divergent"`` for
    gamma < 0 and ``"constant"`` for gamma = 0.
    """
    gamma = _check_gamma(gamma)
    hs = [as_hbar(h) for h in hbar_values]
    if len(hs) < 3:
        raise ValueError("need at least three hbar values")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ValueError("hbar values must be strictly decreasing")
    rows = []
    for h in hs:
        prof = slope_constant(gamma, h)
        s = prof.slope_at_zero
        rows.append({
            "hbar": h,
            "slope_at_zero": s,
            "crossover": prof.crossover,
            "regular": bool(math.isfinite(s) and s > 0),
        })
    slopes = [r["slope_at_zero"] for r in rows]
    if gamma > 0:
        trend = "vanishing"
        monotone = all(b < a for a, b in zip(slopes, slopes[1:]))
    elif gamma < 0:
        trend = "divergent"
        monotone = all(b > a for a, b in zip(slopes, slopes[1:]))
    else:
        trend = "constant"
        monotone = all(math.isclose(s, slopes[0], rel_tol=1e-12) for s in slopes)
    return {
        "gamma": gamma,
        "k_o": slope_constant(gamma).k_o,
        "rows": rows,
        "regular_for_all_hbar": all(r["regular"] for r in rows),
        "trend": trend,
        "trend_consistent": monotone,
    }


def sweep_rows(gammas, hbars, ps):
    """Rows (gamma, hbar, p, phi_exact, phi_approx, slope_formula, slope_numeric)."""
    rows = []
    for g in gammas:
        for h in hbars:
            slope = slope_constant(g, h).slope_at_zero
            num = numeric_slope(g, h)
            for p in ps:
                approx = phi_gamma_approx(p, g, h) if g != 0 else float(p)
                rows.append((float(g), float(h), float(p), phi_gamma(p, g, h), approx, slope, num))
    return rows
