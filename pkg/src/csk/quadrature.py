"""One-dimensional integration and limit extrapolation.

Three integrators share a :class:`QuadratureSpec`:

* Gauss-Hermite for Gaussian-weighted integrals (exact on polynomials),
* a vectorized adaptive composite Gauss-Legendre rule for finite intervals,
* a regulated rule for oscillatory integrals over the real line, which damps
  the integrand with ``exp(-eps k^2)`` and extrapolates ``eps -> 0``.

:func:`extrapolate_limit` is a Neville-Richardson tableau in ``h**order``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import InsufficientSamples, NoConvergence, NonFinite, ToleranceNotMet

__all__ = [
    "Scheme",
    "QuadratureSpec",
    "Extrapolation",
    "RegulatedResult",
    "integrate_gauss_hermite",
    "integrate_adaptive",
    "integrate_regulated",
    "extrapolate_limit",
    "gauss_legendre",
]

# Gaussian tails are cut where exp(-x) < 1e-17.
_TAIL_EXPONENT = 40.0
_MAX_HERMITE_ORDER = 512
_MAX_PANELS = 1 << 21
_MAX_GENERATIONS = 200
_CHUNK = 1 << 20
_NOISE_WIDTH = 1e-7


class Scheme(str, enum.Enum):
    GAUSS_HERMITE = "gauss_hermite"
    ADAPTIVE_INTERVAL = "adaptive_interval"
    REGULATED_OSCILLATORY = "regulated_oscillatory"


@dataclass(frozen=True)
class QuadratureSpec:
    """Integration settings.

    ``order`` is the Gauss-Hermite node count (or the Gauss-Legendre panel
    node count for the other schemes).  ``regulator_epsilon`` is the largest
    damping constant of the regulated scheme; successive levels halve it.
    """

    scheme: Scheme = Scheme.GAUSS_HERMITE
    order: int = 64
    abs_tol: float = 1e-10
    rel_tol: float = 0.0
    regulator_epsilon: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if int(self.order) != self.order or self.order < 2:
            raise ValueError(f"order must be an integer >= 2, got {self.order!r}")
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ValueError("tolerances must be non-negative")
        if self.abs_tol == 0 and self.rel_tol == 0:
            raise ValueError("abs_tol and rel_tol cannot both be zero")
        if self.scheme is Scheme.REGULATED_OSCILLATORY:
            eps = 0.8 if self.regulator_epsilon is None else self.regulator_epsilon
            if not eps > 0:
                raise ValueError("regulator_epsilon must be positive")
            object.__setattr__(self, "regulator_epsilon", float(eps))

    def tolerance(self, value) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


class Extrapolation(NamedTuple):
    limit: complex
    residual: float


class RegulatedResult(NamedTuple):
    value: complex
    residual: float
    regulator_epsilon: float
    epsilons: tuple
    levels: tuple


def _evaluate(f: Callable, x: np.ndarray) -> np.ndarray:
    """Call ``f`` on an array, falling back to elementwise calls."""
    try:
        with np.errstate(all="ignore"):
            y = np.asarray(f(x))
        if y.shape != x.shape:
            y = np.broadcast_to(y, x.shape)
    except (TypeError, ValueError):
        y = np.array([f(float(t)) for t in x.ravel()]).reshape(x.shape)
    if not np.all(np.isfinite(y)):
        bad = x[~np.isfinite(y)].ravel()[0]
        raise NonFinite(f"integrand is not finite at k = {bad!r}")
    return y


@lru_cache(maxsize=64)
def _hermgauss(n: int):
    x, w = np.polynomial.hermite.hermgauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=64)
def gauss_legendre(n: int):
    """Cached Gauss-Legendre nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _scalar(z):
    z = complex(z)
    return z.real if z.imag == 0 else z


def integrate_gauss_hermite(f, center: float = 0.0, width: float = 1.0,
                            spec: QuadratureSpec | None = None):
    """Average of ``f`` under the normalized weight ``exp(-((k-center)/width)^2)``.

    Returns ``int f(k) exp(-((k-center)/width)**2) dk / (width*sqrt(pi))``.
    The rule at ``spec.order`` nodes is checked against the rule with twice as
    many nodes; orders keep doubling until the two agree to tolerance.
    Polynomials of degree <= 2*order-1 are integrated exactly.
    """
    spec = spec or QuadratureSpec()
    if not width > 0:
        raise ValueError("width must be positive")
    n = int(spec.order)

    def rule(order):
        x, w = _hermgauss(order)
        y = _evaluate(f, center + width * x)
        return np.dot(w, y) / math.sqrt(math.pi)

    coarse = rule(n)
    while True:
        if 2 * n > _MAX_HERMITE_ORDER:
            raise ToleranceNotMet(
                f"Gauss-Hermite refinement stalled at order {n}")
        fine = rule(2 * n)
        if abs(fine - coarse) <= spec.tolerance(fine):
            return _scalar(fine)
        coarse, n = fine, 2 * n


def _panel_sums(f, lo, hi, x, w):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    out = np.empty(lo.shape, dtype=complex)
    step = max(1, _CHUNK // x.size)
    for s in range(0, lo.size, step):
        nodes = mid[s:s + step, None] + half[s:s + step, None] * x[None, :]
        vals = _evaluate(f, nodes)
        out[s:s + step] = half[s:s + step] * (vals @ w)
    return out


def _adaptive(f, a: float, b: float, spec: QuadratureSpec, panels: int = 16):
    """Globally budgeted bisection of Gauss-Legendre panels.

    Each panel is compared against the sum over its two halves; a panel is
    accepted once the difference is below its length-proportional share of
    the tolerance.  Returns ``(value, error_estimate)``.
    """
    x, w = gauss_legendre(min(int(spec.order), 16))
    edges = np.linspace(a, b, panels + 1)
    lo, hi = edges[:-1], edges[1:]
    whole = _panel_sums(f, lo, hi, x, w)
    scale = abs(whole.sum())
    tol = spec.tolerance(scale)
    length = b - a
    total = 0.0 + 0.0j
    err_total = 0.0
    for _ in range(_MAX_GENERATIONS):
        mid = 0.5 * (lo + hi)
        left = _panel_sums(f, lo, mid, x, w)
        right = _panel_sums(f, mid, hi, x, w)
        fine = left + right
        err = np.abs(whole - fine)
        # keep a floor so that panels at rounding level are accepted
        budget = np.maximum(tol * (hi - lo) / length,
                            64 * np.finfo(float).eps * np.abs(fine))
        # below this width the estimate is dominated by integrand round-off
        ok = (err <= budget) | (hi - lo < _NOISE_WIDTH * length)
        total += fine[ok].sum()
        err_total += err[ok].sum()
        keep = ~ok
        if not keep.any():
            return _scalar(total), float(err_total)
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        whole = np.concatenate([left[keep], right[keep]])
        if lo.size > _MAX_PANELS:
            break
    raise ToleranceNotMet(
        f"adaptive refinement on [{a}, {b}] stalled with {lo.size} open panels")


def integrate_adaptive(f, a: float, b: float, spec: QuadratureSpec | None = None):
    """Integrate ``f`` over the finite interval ``[a, b]``.

    The error estimate is kept below ``max(abs_tol, rel_tol*|result|)``.
    """
    spec = spec or QuadratureSpec(scheme=Scheme.ADAPTIVE_INTERVAL)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("integration limits must be finite")
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    value, _ = _adaptive(f, float(a), float(b), spec)
    return value


def integrate_regulated(f, spec: QuadratureSpec | None = None, *,
                        halfwidth: float | None = None, levels: int = 6) -> RegulatedResult:
    """``lim_{eps->0} int f(k) exp(-eps k^2) dk`` over the real line.

    The damped integral is computed at ``eps_j = regulator_epsilon / 2**j``
    for ``j < levels`` on ``|k| <= sqrt(40/eps_j)`` (optionally capped by
    ``halfwidth`` when ``f`` decays on its own) and the sequence is
    Richardson-extrapolated in ``eps``.  The damped integral is analytic in
    ``eps`` so the extrapolation is polynomial in ``eps``.

    Raises NoConvergence when the extrapolation residual exceeds the spec
    tolerance.
    """
    spec = spec or QuadratureSpec(scheme=Scheme.REGULATED_OSCILLATORY,
                                  abs_tol=1e-6, rel_tol=1e-6)
    if spec.scheme is not Scheme.REGULATED_OSCILLATORY:
        spec = replace(spec, scheme=Scheme.REGULATED_OSCILLATORY)
    if levels < 3:
        raise InsufficientSamples("need at least 3 regulator levels")
    eps0 = spec.regulator_epsilon
    epsilons = tuple(eps0 / 2 ** j for j in range(levels))
    # each level is integrated well below the extrapolation tolerance
    inner = replace(spec, scheme=Scheme.ADAPTIVE_INTERVAL,
                    abs_tol=spec.abs_tol * 1e-3, rel_tol=spec.rel_tol * 1e-3)
    values = []
    for eps in epsilons:
        cut = math.sqrt(_TAIL_EXPONENT / eps)
        if halfwidth is not None:
            cut = min(cut, halfwidth)
        g = (lambda k, e=eps: f(k) * np.exp(-e * k * k))
        values.append(complex(integrate_adaptive(g, -cut, cut, inner)))
    limit, residual = extrapolate_limit(list(zip(epsilons, values)), 1,
                                        check_trend=False)
    if residual > spec.tolerance(limit):
        raise NoConvergence(
            f"regulated integral did not settle: residual {residual:.3e}")
    return RegulatedResult(_scalar(limit), residual, eps0, epsilons, tuple(values))


def extrapolate_limit(samples: Sequence[tuple[float, complex]], order_hypothesis: int,
                      *, check_trend: bool = True) -> Extrapolation:
    """Richardson-extrapolate ``value(h)`` to ``h = 0``.

    Assumes ``value = limit + C1*x + C2*x**2 + ...`` with ``x = h**order``
    and runs Neville's scheme at ``x = 0``.  The residual is the distance
    between the extrapolant using all samples and the one using all but the
    coarsest sample.

    Raises:
        InsufficientSamples: fewer than three samples or ``h`` not strictly
            decreasing and positive.
        NoConvergence: the per-level corrections grow as ``h`` shrinks.
    """
    if len(samples) < 3:
        raise InsufficientSamples("need at least three (h, value) samples")
    h = np.array([float(s[0]) for s in samples])
    v = np.array([complex(s[1]) for s in samples])
    if np.any(h <= 0) or np.any(np.diff(h) >= 0):
        raise InsufficientSamples("step sizes must be positive and strictly decreasing")
    if order_hypothesis < 1:
        raise ValueError("order_hypothesis must be a positive integer")
    x = h ** order_hypothesis
    n = len(v)
    table = [[v[i]] for i in range(n)]
    for i in range(1, n):
        for j in range(1, i + 1):
            prev, left = table[i][j - 1], table[i - 1][j - 1]
            table[i].append(prev + (prev - left) * x[i] / (x[i - j] - x[i]))
    limit = table[-1][-1]
    residual = float(abs(table[-1][-1] - table[-1][-2]))
    if check_trend:
        corrections = np.array([abs(table[i][i] - table[i][i - 1]) for i in range(1, n)])
        floor = 1e3 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(v))))
        if corrections.size >= 2 and corrections[-1] > corrections[-2] and corrections[-1] > floor:
            raise NoConvergence(
                "extrapolation corrections grow as h shrinks: "
                + ", ".join(f"{c:.2e}" for c in corrections))
    return Extrapolation(_scalar(limit), residual)
