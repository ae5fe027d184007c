"""Coherent-state matrix elements of penalty evolutions exp(-i T A W).

For W = P^2/2 and W = P^4/4 the matrix element between coherent states is a
single momentum integral.  Scaled by a suitable A-dependent prefactor it
tends, as A -> infinity, to the projected kernel exp(-(p''^2 + p'^2)/2) of
the constraint P = 0.  For matrices W with W = 0 in the discrete spectrum
the time-averaged evolution tends to the projector onto ker W.
"""

from __future__ import annotations

import cmath
import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.special import gamma as gamma_fn

from .coherent_states import PhasePoint
from .errors import DimensionMismatch, NoConvergence, NoNullSpace
from .quadrature import (
    QuadratureSpec,
    Scheme,
    extrapolate_limit,
    integrate_adaptive,
    integrate_regulated,
)

__all__ = [
    "WKind",
    "PenaltyConfig",
    "quadratic_scaling",
    "quartic_scaling",
    "quadratic_penalty_element",
    "quadratic_penalty_quadrature",
    "quartic_penalty_element",
    "quartic_penalty_contour",
    "quartic_limit_constant",
    "measured_quartic_constant",
    "projected_kernel",
    "LimitComparison",
    "projected_limit_comparison",
    "discrete_spectrum_projector_limit",
    "oscillator_circle_penalty",
    "sweep_rows",
]

_SQRT_PI = math.sqrt(math.pi)


class WKind(str, enum.Enum):
    P_SQUARED_HALF = "p_squared_half"
    P_FOURTH_QUARTER = "p_fourth_quarter"


def quadratic_scaling(A: float, T: float) -> complex:
    """sqrt(i A T / 2 pi) on the principal branch, i = exp(i pi/2)."""
    return cmath.exp(0.25j * math.pi) * math.sqrt(A * T / (2 * math.pi))


def quartic_scaling(A: float, T: float) -> complex:
    """A^{1/4}; the constant k is measured separately."""
    return complex(A ** 0.25)


@dataclass(frozen=True)
class PenaltyConfig:
    A: float
    T: float = 1.0
    W_kind: WKind = WKind.P_SQUARED_HALF
    scaling_rule: Callable[[float, float], complex] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (self.A > 0 and math.isfinite(self.A)):
            raise ValueError(f"A must be positive and finite, got {self.A!r}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"T must be positive and finite, got {self.T!r}")
        object.__setattr__(self, "W_kind", WKind(self.W_kind))
        if self.scaling_rule is None:
            rule = quadratic_scaling if self.W_kind is WKind.P_SQUARED_HALF else quartic_scaling
            object.__setattr__(self, "scaling_rule", rule)

    @property
    def prefactor(self) -> complex:
        return complex(self.scaling_rule(self.A, self.T))

    def with_A(self, A: float) -> "PenaltyConfig":
        return PenaltyConfig(A, self.T, self.W_kind, self.scaling_rule)


def _scalars(a: PhasePoint, b: PhasePoint):
    if a.J != 1 or b.J != 1:
        raise DimensionMismatch("penalty elements are defined for one degree of freedom")
    return float(a.p[0]), float(a.q[0]), float(b.p[0]), float(b.q[0])


def projected_kernel(a: PhasePoint, b: PhasePoint) -> float:
    """exp(-(p''^2 + p'^2)/2), the kernel of the constraint P = 0."""
    pa, _, pb, _ = _scalars(a, b)
    return math.exp(-0.5 * (pa * pa + pb * pb))


def _quadratic_unscaled(pa, qa, pb, qb, A, T) -> complex:
    # pi^{-1/2} int exp(-a k^2 + b k - (pa^2 + pb^2)/2) dk with a = 1 + iTA/2
    a = 1 + 0.5j * T * A
    b = pa + pb + 1j * (qa - qb)
    return cmath.exp(b * b / (4 * a) - 0.5 * (pa * pa + pb * pb)) / cmath.sqrt(a)


def quadratic_penalty_element(a: PhasePoint, b: PhasePoint, cfg: PenaltyConfig,
                              *, scaled: bool = True) -> complex:
    """<a| exp(-i T A P^2/2) |b>, optionally scaled for the A -> infinity limit.

    The scaled element is K_A sqrt(pi) <a|U|b>, i.e. K_A times the momentum
    integral without the state normalization pi^{-1/2}.  With
    K_A = sqrt(iAT/2pi) the combined prefactor sqrt(iAT/2)/sqrt(1 + iAT/2)
    tends to 1, so the scaled element tends to exp(-(p''^2 + p'^2)/2).
    """
    if cfg.W_kind is not WKind.P_SQUARED_HALF:
        raise ValueError("quadratic_penalty_element needs W_kind p_squared_half")
    pa, qa, pb, qb = _scalars(a, b)
    val = _quadratic_unscaled(pa, qa, pb, qb, cfg.A, cfg.T)
    return val * cfg.prefactor * _SQRT_PI if scaled else val


def quadratic_penalty_quadrature(a: PhasePoint, b: PhasePoint, cfg: PenaltyConfig,
                                 *, scaled: bool = True, tol: float = 1e-9) -> complex:
    """Same element by regulated quadrature of the momentum integral."""
    pa, qa, pb, qb = _scalars(a, b)
    dq = qa - qb
    A, T = cfg.A, cfg.T

    def f(k):
        k = np.asarray(k, dtype=float)
        return np.exp(-0.5 * (k - pa) ** 2 - 0.5 * (k - pb) ** 2 + 1j * k * dq - 0.5j * T * A * k * k)

    # the envelope exp(-(k - (pa+pb)/2)^2) is below 1e-18 past 6.5
    half = abs(0.5 * (pa + pb)) + 6.5
    spec = QuadratureSpec(scheme=Scheme.REGULATED_OSCILLATORY, abs_tol=tol, rel_tol=0.0,
                          regulator_epsilon=0.01)
    val = integrate_regulated(f, spec, halfwidth=half, levels=6).value / _SQRT_PI
    return val * cfg.prefactor * _SQRT_PI if scaled else val


def _quartic_u_integrand(pa, qa, pb, qb, A, T):
    s = A ** -0.25
    dq = qa - qb

    def f(u):
        k = s * u
        return np.exp(-0.5 * (k - pa) ** 2 - 0.5 * (k - pb) ** 2 + 1j * k * dq - 0.25j * T * u ** 4)

    return f, s


def quartic_penalty_element(a: PhasePoint, b: PhasePoint, cfg: PenaltyConfig,
                            *, scaled: bool = True, spec: QuadratureSpec | None = None) -> complex:
    """<a| exp(-i T A P^4/4) |b> by regulated quadrature.

    With k = A^{-1/4} u the quartic phase becomes T u^4/4, independent of A,
    and A^{1/4} <a|U|b> = pi^{-1/2} int exp(-(su-p'')^2/2 - (su-p')^2/2
    + i s u dq - i T u^4/4) du with s = A^{-1/4}.  Raises NoConvergence if
    the regulator extrapolation does not settle.
    """
    if cfg.W_kind is not WKind.P_FOURTH_QUARTER:
        raise ValueError("quartic_penalty_element needs W_kind p_fourth_quarter")
    pa, qa, pb, qb = _scalars(a, b)
    f, s = _quartic_u_integrand(pa, qa, pb, qb, cfg.A, cfg.T)
    spec = spec or QuadratureSpec(scheme=Scheme.REGULATED_OSCILLATORY, abs_tol=1e-6, rel_tol=1e-6)
    half = (abs(0.5 * (pa + pb)) + 6.5) / s
    val = integrate_regulated(f, spec, halfwidth=half).value / _SQRT_PI
    # val is A^{1/4} <a|U|b>
    return val * cfg.prefactor / cfg.A ** 0.25 if scaled else val / cfg.A ** 0.25


def quartic_penalty_contour(a: PhasePoint, b: PhasePoint, cfg: PenaltyConfig,
                            *, scaled: bool = True) -> complex:
    """Same element on the rotated contour u = exp(-i pi/8) v.

    On that ray the phase -i T u^4/4 becomes the decaying -T v^4/4 and the
    integrand is absolutely integrable, so no regulator is needed.
    """
    pa, qa, pb, qb = _scalars(a, b)
    f, s = _quartic_u_integrand(pa, qa, pb, qb, cfg.A, cfg.T)
    rot = cmath.exp(-0.125j * math.pi)
    cut = (160.0 / cfg.T) ** 0.25
    # the Gaussian part decays along the ray as well; take whichever is closer
    cut = min(cut, (abs(0.5 * (pa + pb)) + abs(qa - qb) + 12.0) / (s * math.cos(math.pi / 8))) if s > 0 else cut
    g = lambda v: f(rot * np.asarray(v, dtype=float)) * rot
    spec = QuadratureSpec(scheme=Scheme.ADAPTIVE_INTERVAL, abs_tol=1e-13, rel_tol=1e-12)
    val = complex(integrate_adaptive(g, -cut, cut, spec)) / _SQRT_PI
    return val * cfg.prefactor / cfg.A ** 0.25 if scaled else val / cfg.A ** 0.25


def quartic_limit_constant(T: float = 1.0) -> complex:
    """Reciprocal of pi^{-1/2} int exp(-i T u^4/4) du = pi^{-1/2} 2 Gamma(5/4) (iT/4)^{-1/4}."""
    return 1.0 / (2 * gamma_fn(1.25) * (0.25j * T) ** -0.25 / _SQRT_PI)


def measured_quartic_constant(T: float = 1.0, A_ladder: Sequence[float] = (1e4, 1e5, 1e6, 1e7),
                              use_contour: bool = False) -> tuple[complex, float]:
    """Extrapolate 1/(A^{1/4} <0|U|0>) to A -> infinity.

    Corrections are powers of A^{-1/2}, so Richardson runs in h = A^{-1/2}.
    Returns (constant, extrapolation residual).
    """
    origin = PhasePoint(0.0, 0.0)
    elem = quartic_penalty_contour if use_contour else quartic_penalty_element
    samples = []
    for A in sorted(A_ladder):
        cfg = PenaltyConfig(A, T, WKind.P_FOURTH_QUARTER)
        samples.append((A ** -0.5, 1.0 / elem(origin, origin, cfg)))
    lim, res = extrapolate_limit(samples, 1)
    return complex(lim), float(res)


class LimitComparison(NamedTuple):
    max_error: float
    A: float
    extrapolated_error: float
    residual: float
    errors: tuple


def _scaled_values(pairs, cfg, ratio):
    if cfg.W_kind is WKind.P_SQUARED_HALF:
        vals = [quadratic_penalty_element(a, b, cfg) for a, b in pairs]
        if ratio:
            o = PhasePoint(0.0, 0.0)
            vals = [v / quadratic_penalty_element(o, o, cfg) for v in vals]
        return vals
    vals = [quartic_penalty_element(a, b, cfg) for a, b in pairs]
    if ratio:
        o = PhasePoint(0.0, 0.0)
        ref = quartic_penalty_element(o, o, cfg)
        vals = [v / ref for v in vals]
    return vals


def projected_limit_comparison(cfg: PenaltyConfig, probe_pairs, *, target: float | None = None,
                               ratio: bool | None = None, max_A: float = 1e8) -> LimitComparison:
    """Compare scaled penalty elements with the projected kernel.

    A climbs a decade ladder from ``cfg.A`` until the largest raw error is
    below ``target`` and the Richardson extrapolation (in 1/A for the
    quadratic case, A^{-1/2} for the quartic one) has settled below it.
    The quartic case is ratio-normalized by the origin element by default,
    which removes the unknown constant.
    """
    quartic = cfg.W_kind is WKind.P_FOURTH_QUARTER
    if target is None:
        target = 1e-2 if quartic else 1e-3
    if ratio is None:
        ratio = quartic
    pairs = list(probe_pairs)
    if not pairs:
        raise ValueError("need at least one probe pair")
    exact = np.array([projected_kernel(a, b) for a, b in pairs])
    power = 0.5 if quartic else 1.0
    ladder, history = [], []
    A = cfg.A
    while A <= max_A * (1 + 1e-12):
        vals = np.array(_scaled_values(pairs, cfg.with_A(A), ratio))
        ladder.append(A)
        history.append(vals)
        errs = np.abs(vals - exact)
        if len(ladder) >= 3:
            hs = [x ** -power for x in ladder[-3:]]
            ext = [extrapolate_limit(list(zip(hs, [h[i] for h in history[-3:]])), 1, check_trend=False)
                   for i in range(len(pairs))]
            ext_err = max(abs(e.limit - x) for e, x in zip(ext, exact))
            res = max(e.residual for e in ext)
            if errs.max() < target and res < target:
                return LimitComparison(float(errs.max()), A, float(ext_err), float(res), tuple(errs))
        A *= 10
    raise NoConvergence(f"scaled penalty elements did not reach {target:g} by A = {max_A:g}")


def discrete_spectrum_projector_limit(W, T: float, A_ladder: Sequence[float], *,
                                      null_tol: float = 1e-12, history: bool = False):
    """Time average (1/T) int_0^T exp(-i t A W) dt at the largest A of the ladder.

    Per eigenvalue w the average is (1 - exp(-i T A w))/(i T A w), which is 1
    on ker W and O(1/(T A w)) elsewhere, so the result tends to the
    orthogonal projector onto ker W.  Emits NoNullSpace when ker W is
    trivial.  With ``history=True`` the per-A matrices are returned too.
    """
    W = np.asarray(W, dtype=complex)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionMismatch("W must be a square matrix")
    if not np.allclose(W, W.conj().T, atol=1e-12):
        raise ValueError("W must be Hermitian")
    if not T > 0:
        raise ValueError("T must be positive")
    ladder = sorted(float(a) for a in A_ladder)
    if not ladder or ladder[0] <= 0:
        raise ValueError("A ladder must be non-empty and positive")
    w, V = np.linalg.eigh(W)
    scale = max(1.0, float(np.max(np.abs(w))))
    if np.any(w < -null_tol * scale):
        raise ValueError("W must have a non-negative spectrum")
    null = np.abs(w) <= null_tol * scale
    if not np.any(null):
        warnings.warn("W has no null space; the averaged evolution tends to 0", NoNullSpace)
    out = []
    for A in ladder:
        x = T * A * np.where(null, 1.0, w)
        avg = np.where(null, 1.0 + 0j, (1 - np.exp(-1j * x)) / (1j * x))
        out.append((V * avg) @ V.conj().T)
    return (out[-1], out) if history else out[-1]


def oscillator_circle_penalty(dim: int, hbar: float = 1.0) -> np.ndarray:
    """W = (:P^2 + Q^2: - 1)^2 / 2 on the first ``dim`` oscillator levels.

    Normal ordering gives :P^2 + Q^2: = 2 hbar N, so W is diagonal with
    entries (2 hbar n - 1)^2 / 2; it has a null vector only if 2 hbar n = 1.
    """
    if dim < 1:
        raise ValueError("dim must be positive")
    n = np.arange(dim, dtype=float)
    return np.diag(0.5 * (2 * hbar * n - 1) ** 2)


def sweep_rows(cfg: PenaltyConfig, pairs, A_values, constant: complex = 1.0):
    """Rows (A, T, p'', q'', p', q', re_scaled, im_scaled, abs_error_vs_limit).

    ``constant`` multiplies every scaled element; pass the measured quartic
    constant to compare quartic elements with the limit directly.
    """
    rows = []
    for A in A_values:
        c = cfg.with_A(A)
        for a, b in pairs:
            if c.W_kind is WKind.P_SQUARED_HALF:
                v = quadratic_penalty_element(a, b, c)
            else:
                v = quartic_penalty_element(a, b, c)
            v = v * constant
            rows.append((float(A), c.T, float(a.p[0]), float(a.q[0]), float(b.p[0]), float(b.q[0]),
                         v.real, v.imag, abs(v - projected_kernel(a, b))))
    return rows
