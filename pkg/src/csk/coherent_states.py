"""Canonical coherent states |p,q> = exp(-i q.P) exp(i p.Q) |0>.

The fiducial vector |0> is the unit-frequency oscillator ground state, so in
momentum space <k|p,q> = (pi hbar)^(-1/4) exp(-(k-p)^2/(2 hbar) - i k q/hbar)
per degree of freedom.  All phase conventions below follow from that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import DimensionMismatch

__all__ = [
    "PhasePoint",
    "HbarContext",
    "GroundStateMoments",
    "as_hbar",
    "overlap",
    "lower_symbol_poly",
    "operator_for_symbol",
    "symbol_of_operator",
    "quartic_penalty_factor",
    "momentum_wavefunction",
]


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """A point (p, q) of a 2J-dimensional phase space."""

    p: np.ndarray
    q: np.ndarray

    def __init__(self, p, q=None):
        p = np.atleast_1d(np.asarray(p, dtype=float)).copy()
        q = np.zeros_like(p) if q is None else np.atleast_1d(np.asarray(q, dtype=float)).copy()
        if p.ndim != 1 or q.ndim != 1 or p.size == 0:
            raise DimensionMismatch("p and q must be non-empty vectors")
        if p.shape != q.shape:
            raise DimensionMismatch(f"p has length {p.size} but q has length {q.size}")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise ValueError("phase-space coordinates must be finite")
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def J(self) -> int:
        return self.p.size

    @classmethod
    def origin(cls, J: int = 1) -> "PhasePoint":
        return cls(np.zeros(J), np.zeros(J))

    def __eq__(self, other):
        if not isinstance(other, PhasePoint):
            return NotImplemented
        return np.array_equal(self.p, other.p) and np.array_equal(self.q, other.q)

    def __hash__(self):
        return hash((self.p.tobytes(), self.q.tobytes()))

    def __repr__(self):
        if self.J == 1:
            return f"PhasePoint(p={self.p[0]:g}, q={self.q[0]:g})"
        return f"PhasePoint(p={self.p.tolist()}, q={self.q.tolist()})"


@dataclass(frozen=True)
class HbarContext:
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise ValueError(f"hbar must be positive and finite, got {self.hbar!r}")


def as_hbar(hbar) -> float:
    """Accept a float or :class:`HbarContext` and return a validated float."""
    if isinstance(hbar, HbarContext):
        return hbar.hbar
    return HbarContext(float(hbar)).hbar


@dataclass(frozen=True)
class GroundStateMoments:
    """Momentum moments <0|P^n|0> of the oscillator ground state."""

    hbar: float = 1.0

    def __post_init__(self):
        as_hbar(self.hbar)

    @property
    def second(self) -> float:
        return self.hbar / 2

    @property
    def fourth(self) -> float:
        return 3 * self.second ** 2

    def m(self, n: int) -> float:
        if n < 0:
            raise ValueError("moment order must be non-negative")
        if n % 2:
            return 0.0
        return _double_factorial(n - 1) * (self.hbar / 2) ** (n // 2)


def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def _pair(a: PhasePoint, b: PhasePoint):
    if a.J != b.J:
        raise DimensionMismatch(f"points have J={a.J} and J={b.J}")


def overlap(a: PhasePoint, b: PhasePoint, hbar=1.0) -> complex:
    """<a|b> for canonical coherent states."""
    _pair(a, b)
    h = as_hbar(hbar)
    dp = a.p - b.p
    dq = a.q - b.q
    expo = np.sum(0.5j * (a.p + b.p) * dq - 0.25 * dp * dp - 0.25 * dq * dq) / h
    return complex(np.exp(expo))


def momentum_wavefunction(point: PhasePoint, k, hbar=1.0):
    """<k|p,q> for a single degree of freedom, vectorized in ``k``."""
    if point.J != 1:
        raise DimensionMismatch("momentum_wavefunction is defined per degree of freedom")
    h = as_hbar(hbar)
    p, q = point.p[0], point.q[0]
    k = np.asarray(k, dtype=float)
    return (math.pi * h) ** -0.25 * np.exp(-(k - p) ** 2 / (2 * h) - 1j * k * q / h)


def _momentum(point) -> float:
    if isinstance(point, PhasePoint):
        if point.J != 1:
            raise DimensionMismatch("expected a single degree of freedom")
        return float(point.p[0])
    return float(point)


def lower_symbol_poly(n: int, point, hbar=1.0) -> float:
    """<p,q|P^n|p,q> = <0|(P+p)^n|0>; independent of q."""
    if int(n) != n or n < 1:
        raise ValueError(f"power must be a positive integer, got {n!r}")
    p = _momentum(point)
    mom = GroundStateMoments(as_hbar(hbar))
    return float(sum(comb(n, k) * p ** (n - k) * mom.m(k) for k in range(0, n + 1, 2)))


def symbol_of_operator(coeffs, hbar=1.0) -> np.ndarray:
    """Coefficients of the diagonal symbol of sum_n coeffs[n] P^n.

    Both input and output are ascending power-series coefficients.
    """
    c = np.asarray(coeffs, dtype=float)
    return _smear(c, as_hbar(hbar) / 2)


def operator_for_symbol(coeffs, hbar=1.0) -> np.ndarray:
    """Inverse of :func:`symbol_of_operator`.

    Returns the coefficients of the polynomial in P whose coherent-state
    expectation is the given polynomial in p.  Gaussian smearing with
    variance hbar/2 is inverted by smearing with variance -hbar/2.
    """
    c = np.asarray(coeffs, dtype=float)
    return _smear(c, -as_hbar(hbar) / 2)


def _smear(c: np.ndarray, variance: float) -> np.ndarray:
    out = np.zeros_like(c)
    for n, cn in enumerate(c):
        if cn == 0:
            continue
        for k in range(0, n + 1, 2):
            out[n - k] += cn * comb(n, k) * _double_factorial(k - 1) * variance ** (k // 2)
    return out


def quartic_penalty_factor(p: float, A: float, hbar=1.0) -> float:
    """(A/4) <p,q|P^4|p,q> = (A/4)(p^4 + 3 hbar p^2 + 3 hbar^2 / 4)."""
    if not A > 0:
        raise ValueError("penalty strength A must be positive")
    h = as_hbar(hbar)
    return 0.25 * A * (p ** 4 + 3 * h * p ** 2 + 0.75 * h ** 2)
