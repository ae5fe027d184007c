"""Reproducing kernels K(p'',q'';p',q') = <p'',q''|E|p',q'> and their reductions.

A :class:`Kernel` wraps a vectorized function ``fn(pa, qa, pb, qb)`` whose
arguments carry the degrees of freedom on their last axis.  Kernels built
from a momentum-band projector also record the band per degree of freedom,
which gives them a momentum-space representation

    K(a;b) = scale * prod_j int_{band_j} conj(<k|a_j>) <k|b_j> dk

used by the reproducing-identity and inner-product checks.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .coherent_states import PhasePoint, as_hbar
from .errors import DimensionMismatch, NoConvergence, PSDViolation
from .projectors import SpectralBand
from .quadrature import QuadratureSpec, Scheme, extrapolate_limit, gauss_legendre, integrate_adaptive
from .special import gaussian_segment_integral

__all__ = [
    "Kernel",
    "GramMatrix",
    "overlap_kernel",
    "banded_kernel",
    "banded_kernel_quadrature",
    "product_band_kernel",
    "band_limit_kernel",
    "example1_c_kernel",
    "gram",
    "rank",
    "check_reproducing",
    "reduce_restrict",
    "reduce_weighted",
    "reduce_scaled_limit",
    "inner_product_dual_check",
    "rank_one_factorization_residual",
    "kernel_axiom_report",
    "kernel_table_csv",
    "random_points",
]

PSD_TOL = 1e-10
RANK_TOL = 1e-8
DEFAULT_HALFWIDTH = 8.0


def _coords(points: Sequence[PhasePoint]):
    J = points[0].J
    if any(x.J != J for x in points):
        raise DimensionMismatch("all points must share the same number of degrees of freedom")
    return np.stack([x.p for x in points]), np.stack([x.q for x in points])


@dataclass(frozen=True, eq=False)
class Kernel:
    """An immutable reproducing kernel on J degrees of freedom."""

    fn: Callable
    J: int
    descriptor: tuple = ()
    hbar: float = 1.0
    bands: tuple | None = None
    scale: float = 1.0
    q_dependent: bool = True

    def evaluate(self, a: PhasePoint, b: PhasePoint) -> complex:
        if a.J != self.J or b.J != self.J:
            raise DimensionMismatch(f"kernel has J={self.J}, points have J={a.J}, {b.J}")
        return complex(self.fn(a.p, a.q, b.p, b.q))

    __call__ = evaluate

    def matrix(self, rows: Sequence[PhasePoint], cols: Sequence[PhasePoint] | None = None) -> np.ndarray:
        cols = rows if cols is None else cols
        pr, qr = _coords(rows)
        pc, qc = _coords(cols)
        if pr.shape[1] != self.J or pc.shape[1] != self.J:
            raise DimensionMismatch(f"kernel has J={self.J}")
        out = self.fn(pr[:, None, :], qr[:, None, :], pc[None, :, :], qc[None, :, :])
        return np.broadcast_to(np.asarray(out, dtype=complex), (len(rows), len(cols))).copy()

    def scaled(self, factor: float) -> "Kernel":
        """factor * K, e.g. as a deliberately mis-normalized control."""
        fn = self.fn
        return replace(self, fn=lambda pa, qa, pb, qb: factor * fn(pa, qa, pb, qb),
                       scale=self.scale * factor,
                       descriptor=self.descriptor + (f"scaled({factor:g})",))


class GramMatrix(NamedTuple):
    points: tuple
    entries: np.ndarray
    eigenvalues: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])


# --------------------------------------------------------------------------
# constructors


def _band_factor(lo, hi, pa, qa, pb, qb):
    """pi^{-1/2} int_lo^hi exp[-(k-pa)^2/2 + i k (qa-qb) - (k-pb)^2/2] dk, hbar = 1."""
    b = pa + pb + 1j * (qa - qb)
    return gaussian_segment_integral(1.0, b, lo, hi, -(pa * pa + pb * pb) / 2) / math.sqrt(math.pi)


def _make_band_fn(bands, hbar):
    root = math.sqrt(hbar)

    def fn(pa, qa, pb, qb):
        pa, qa, pb, qb = (np.asarray(x, dtype=float) / root for x in (pa, qa, pb, qb))
        out = 1.0 + 0j
        for j, band in enumerate(bands):
            out = out * _band_factor(band.lo / root, band.hi / root,
                                     pa[..., j], qa[..., j], pb[..., j], qb[..., j])
        return out

    return fn


def overlap_kernel(J: int = 1, hbar=1.0) -> Kernel:
    """K = <a|b>, i.e. E = identity."""
    h = as_hbar(hbar)

    def fn(pa, qa, pb, qb):
        pa, qa, pb, qb = (np.asarray(x, dtype=float) for x in (pa, qa, pb, qb))
        dp, dq = pa - pb, qa - qb
        return np.exp(np.sum(0.5j * (pa + pb) * dq - 0.25 * dp * dp - 0.25 * dq * dq, axis=-1) / h)

    full = SpectralBand(-math.inf, math.inf)
    return Kernel(fn, J, ("overlap",), h, (full,) * J)


def banded_kernel(delta: float, hbar=1.0) -> Kernel:
    """<p'',q''|E(-delta < P < delta)|p',q'> for one degree of freedom.

    Evaluated in closed form through the complex error function; ``delta``
    may be ``inf`` (E = identity).
    """
    return product_band_kernel(delta, J=1, hbar=hbar)


def product_band_kernel(delta: float, J: int = 2, hbar=1.0) -> Kernel:
    """Kernel of the product projector prod_j E(-delta < P_j < delta)."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    h = as_hbar(hbar)
    bands = (SpectralBand(-delta, delta),) * J
    return Kernel(_make_band_fn(bands, h), J, (f"band(delta={delta:g})",), h, bands)


def banded_kernel_quadrature(delta: float, hbar=1.0, spec: QuadratureSpec | None = None) -> Kernel:
    """Same kernel as :func:`banded_kernel`, by adaptive quadrature over k."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    h = as_hbar(hbar)
    spec = spec or QuadratureSpec(scheme=Scheme.ADAPTIVE_INTERVAL, abs_tol=1e-13)
    band = SpectralBand(-delta, delta)

    def one(pa, qa, pb, qb):
        def integrand(k):
            return np.exp(-(k - pa) ** 2 / (2 * h) + 1j * k * (qa - qb) / h - (k - pb) ** 2 / (2 * h))
        # the integrand is negligible beyond ~10 widths of either centre
        lo = max(-delta, min(pa, pb) - 12 * math.sqrt(h))
        hi = min(delta, max(pa, pb) + 12 * math.sqrt(h))
        if lo >= hi:
            return 0j
        return integrate_adaptive(integrand, lo, hi, spec) / math.sqrt(math.pi * h)

    vec = np.vectorize(one, otypes=[complex])

    def fn(pa, qa, pb, qb):
        return vec(np.asarray(pa)[..., 0], np.asarray(qa)[..., 0],
                   np.asarray(pb)[..., 0], np.asarray(qb)[..., 0])

    return Kernel(fn, 1, (f"band-quadrature(delta={delta:g})",), h, (band,))


def band_limit_kernel(J: int = 1) -> Kernel:
    """exp[-(|p''|^2 + |p'|^2)/2], the rank-one limit of scaled band kernels."""

    def fn(pa, qa, pb, qb):
        pa, pb = np.asarray(pa, dtype=float), np.asarray(pb, dtype=float)
        return np.exp(-0.5 * np.sum(pa * pa + pb * pb, axis=-1)) + 0j

    return Kernel(fn, J, ("band-limit",), q_dependent=False)


def example1_c_kernel(c: float) -> Kernel:
    """exp[-(p''1^2 + p''2^2 + i c p''1)/2] exp[-(p'1^2 + p'2^2 - i c p'1)/2] (J = 2)."""
    c = float(c)

    def fn(pa, qa, pb, qb):
        pa, pb = np.asarray(pa, dtype=float), np.asarray(pb, dtype=float)
        left = -0.5 * (pa[..., 0] ** 2 + pa[..., 1] ** 2 + 1j * c * pa[..., 0])
        right = -0.5 * (pb[..., 0] ** 2 + pb[..., 1] ** 2 - 1j * c * pb[..., 0])
        return np.exp(left + right)

    return Kernel(fn, 2, (f"example1(c={c:g})",), q_dependent=False)


# --------------------------------------------------------------------------
# Gram matrices and rank


def gram(kernel: Kernel, points: Sequence[PhasePoint], psd_tol: float = PSD_TOL) -> GramMatrix:
    """Gram matrix of ``kernel`` on ``points``; raises PSDViolation if not PSD."""
    points = tuple(points)
    if not points:
        raise ValueError("need at least one point")
    G = kernel.matrix(points)
    herm = 0.5 * (G + G.conj().T)
    lam = np.linalg.eigvalsh(herm)
    if lam[0] < -psd_tol:
        raise PSDViolation(f"Gram matrix has eigenvalue {lam[0]:.3e} < -{psd_tol:g}")
    return GramMatrix(points, G, lam)


def rank(kernel: Kernel, probe_points: Sequence[PhasePoint], tol: float = RANK_TOL) -> int:
    """Numerical rank: singular values above ``tol`` times the largest."""
    if len(probe_points) < 2:
        raise ValueError("need at least two probe points")
    s = np.linalg.svd(kernel.matrix(tuple(probe_points)), compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def rank_one_factorization_residual(kernel: Kernel, points: Sequence[PhasePoint]) -> float:
    """max |K(a;b) - f(a) conj(f(b))| with f(a) = K(a;x0)/sqrt(K(x0;x0))."""
    G = kernel.matrix(tuple(points))
    i = int(np.argmax(np.abs(np.diag(G))))
    f = G[:, i] / np.sqrt(G[i, i].real)
    return float(np.max(np.abs(G - np.outer(f, f.conj()))))


# --------------------------------------------------------------------------
# reproducing identity and inner products


def _panel_rule(lo, hi, panels, nodes=24):
    x, w = gauss_legendre(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def _k_window(band: SpectralBand, centers, h):
    """Part of the band where Gaussians centred at ``centers`` are not negligible."""
    width = 12 * math.sqrt(h)
    lo = max(band.lo, min(centers) - width)
    hi = min(band.hi, max(centers) + width)
    return lo, hi


def _ground_density(k, pm, h):
    """|<k|p_m,q_m>|^2 = (pi h)^{-1/2} exp(-(k-p_m)^2/h)."""
    return np.exp(-(k - pm) ** 2 / h) / math.sqrt(math.pi * h)


def _momentum_amplitude(k, p, q, h):
    return (math.pi * h) ** -0.25 * np.exp(-(k - p) ** 2 / (2 * h) - 1j * k * q / h)


def _truncated_mu_weight(k, halfwidth, h):
    """int_{|p_m| < L} |<k|p_m>|^2 dp_m by Gauss-Legendre (resolution of unity on the square)."""
    L = halfwidth * math.sqrt(h)
    pm, wm = _panel_rule(-L, L, max(8, int(4 * halfwidth)))
    return _ground_density(k[:, None], pm[None, :], h) @ wm


def check_reproducing(kernel: Kernel, a: PhasePoint, b: PhasePoint,
                      domain_halfwidth: float = DEFAULT_HALFWIDTH) -> float:
    """|K(a;b) - int K(a;m) K(m;b) dmu(m)| over the square |p_m|,|q_m| < L.

    Band-projected kernels use their momentum representation: the q_m
    integral is done analytically (it yields delta(k - k')), leaving a
    (p_m, k) integral.  Other J = 1 kernels are integrated directly over
    the (p_m, q_m) square.
    """
    target = kernel.evaluate(a, b)
    h = kernel.hbar
    if kernel.bands is not None:
        total = kernel.scale ** 2
        for j, band in enumerate(kernel.bands):
            lo, hi = _k_window(band, (a.p[j], b.p[j]), h)
            if lo >= hi:
                return abs(target)
            k, wk = _panel_rule(lo, hi, max(4, int(math.ceil((hi - lo) / math.sqrt(h)))))
            amp = np.conj(_momentum_amplitude(k, a.p[j], a.q[j], h)) * _momentum_amplitude(k, b.p[j], b.q[j], h)
            total = total * np.sum(wk * amp * _truncated_mu_weight(k, domain_halfwidth, h))
        return float(abs(target - total))
    if kernel.J != 1:
        raise DimensionMismatch("direct reproducing check is implemented for J = 1")
    L = domain_halfwidth * math.sqrt(h)
    x, wx = _panel_rule(-L, L, max(8, int(4 * domain_halfwidth)))
    P, Q = np.meshgrid(x, x, indexing="ij")
    W = np.outer(wx, wx) / (2 * math.pi * h)
    pm, qm = P[..., None], Q[..., None]
    left = kernel.fn(a.p, a.q, pm, qm)
    right = kernel.fn(pm, qm, b.p, b.q)
    return float(abs(target - np.sum(W * left * right)))


def inner_product_dual_check(kernel: Kernel, coeffs, centers: Sequence[PhasePoint],
                             domain_halfwidth: float = DEFAULT_HALFWIDTH,
                             measure: Callable | None = None) -> tuple[float, float]:
    """The two forms of (psi, psi) for psi = sum_k coeffs[k] K(.; centers[k]).

    Returns ``(sum_form, integral_form)``.  ``measure`` replaces dmu by a
    density in p alone (for q-independent, reduced kernels).
    """
    alpha = np.asarray(coeffs, dtype=complex)
    centers = tuple(centers)
    if alpha.size != len(centers):
        raise DimensionMismatch("one coefficient per centre is required")
    G = kernel.matrix(centers)
    sum_form = float(np.real(alpha.conj() @ G @ alpha))
    h = kernel.hbar
    L = domain_halfwidth * math.sqrt(h)
    cp, cq = _coords(centers)
    if measure is not None:
        if kernel.J != 1:
            raise DimensionMismatch("reduced-measure check is implemented for J = 1")
        x, wx = _panel_rule(-L, L, max(8, int(4 * domain_halfwidth)))
        pts = x[:, None, None]
        psi = kernel.fn(pts, np.zeros_like(pts), cp[None], cq[None]) @ alpha
        integral = float(np.sum(wx * np.abs(psi) ** 2 * measure(x)))
        return sum_form, integral
    if kernel.J != 1:
        raise DimensionMismatch("integral form is implemented for J = 1")
    if kernel.bands is not None:
        band = kernel.bands[0]
        lo, hi = _k_window(band, cp[:, 0], h)
        k, wk = _panel_rule(lo, hi, max(4, int(math.ceil((hi - lo) / math.sqrt(h)))))
        amp = _momentum_amplitude(k[:, None], cp[None, :, 0], cq[None, :, 0], h) @ alpha
        big_psi = kernel.scale * amp
        integral = float(np.sum(wk * np.abs(big_psi) ** 2 * _truncated_mu_weight(k, domain_halfwidth, h)))
        return sum_form, integral
    x, wx = _panel_rule(-L, L, max(8, int(4 * domain_halfwidth)))
    P, Q = np.meshgrid(x, x, indexing="ij")
    W = np.outer(wx, wx) / (2 * math.pi * h)
    psi = kernel.fn(P[..., None, None], Q[..., None, None], cp[None, None], cq[None, None]) @ alpha
    return sum_form, float(np.sum(W * np.abs(psi) ** 2))


# --------------------------------------------------------------------------
# reductions


def reduce_restrict(kernel: Kernel, fixed_q) -> Kernel:
    """K1(p'';p') = K(p'', c; p', c)."""
    c = np.atleast_1d(np.asarray(fixed_q, dtype=float))
    if c.size != kernel.J:
        raise DimensionMismatch(f"fixed_q has length {c.size}, kernel has J={kernel.J}")
    fn = kernel.fn

    def restricted(pa, qa, pb, qb):
        return fn(pa, c, pb, c)

    return Kernel(restricted, kernel.J, kernel.descriptor + (f"restrict(q={c.tolist()})",),
                  kernel.hbar, q_dependent=False)


def reduce_weighted(kernel: Kernel, weight: Callable, *, center: float = 0.0,
                    halfwidth: float = DEFAULT_HALFWIDTH, panels: int = 16, nodes: int = 24) -> Kernel:
    """K2(p'';p') = int int conj(w(q'')) w(q') K(p'',q'';p',q') dq'' dq'  (J = 1).

    The q-integrals run over ``[center - halfwidth, center + halfwidth]``
    with a composite Gauss-Legendre rule; ``weight`` must be negligible
    outside that window.
    """
    if kernel.J != 1:
        raise DimensionMismatch("weighted reduction is implemented for J = 1")
    x, wx = _panel_rule(center - halfwidth, center + halfwidth, panels, nodes)
    wq = wx * np.asarray(weight(x), dtype=complex)
    fn = kernel.fn

    def reduced(pa, qa, pb, qb):
        pa = np.asarray(pa, dtype=float)[..., None, None, :]
        pb = np.asarray(pb, dtype=float)[..., None, None, :]
        vals = fn(pa, x[:, None, None], pb, x[None, :, None])
        return np.einsum("...ij,i,j->...", vals, wq.conj(), wq)

    return Kernel(reduced, 1, kernel.descriptor + ("weighted",), kernel.hbar, q_dependent=False)


def reduce_scaled_limit(kernel_family: Callable[[float], Kernel], scaling: Callable[[float], float],
                        deltas: Sequence[float], order: int = 2, tol: float = 1e-8) -> Kernel:
    """K3 = lim_{delta->0} scaling(delta) * kernel_family(delta), by Richardson extrapolation.

    ``deltas`` must decrease.  The resulting kernel raises NoConvergence at
    evaluation time if the extrapolation residual exceeds ``tol`` relative
    to the magnitude of the limit (absolute below unit magnitude).
    """
    deltas = tuple(float(d) for d in deltas)
    members = [(d, scaling(d), kernel_family(d)) for d in deltas]
    J = members[0][2].J

    def one(pa, qa, pb, qb):
        samples = [(d, s * k.fn(pa, qa, pb, qb)) for d, s, k in members]
        limit, residual = extrapolate_limit(samples, order)
        if residual > tol * max(1.0, abs(limit)):
            raise NoConvergence(f"scaled limit residual {residual:.2e} exceeds {tol:g}")
        return complex(limit)

    def fn(pa, qa, pb, qb):
        pa, qa, pb, qb = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (pa, qa, pb, qb)))
        shape = pa.shape[:-1]
        out = np.empty(shape, dtype=complex)
        for idx in np.ndindex(shape):
            out[idx] = one(pa[idx], qa[idx], pb[idx], qb[idx])
        return out if shape else out[()]

    return Kernel(fn, J, members[0][2].descriptor + (f"scaled-limit(order={order})",),
                  members[0][2].hbar, q_dependent=False)


# --------------------------------------------------------------------------
# diagnostics and export


def random_points(n: int, J: int = 1, box: float = 2.0, seed: int = 0) -> list[PhasePoint]:
    """Reproducible uniform points in [-box, box]^{2J} (PCG64 generator)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    xy = rng.uniform(-box, box, size=(n, 2, J))
    return [PhasePoint(v[0], v[1]) for v in xy]


def kernel_axiom_report(kernel: Kernel, points: Sequence[PhasePoint], pairs: int = 20, seed: int = 0) -> dict:
    """Hermiticity, positivity and boundedness measured on sample points."""
    points = tuple(points)
    G = kernel.matrix(points)
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = rng.integers(0, len(points), size=(pairs, 2))
    herm = max(abs(G[i, j] - np.conj(G[j, i])) for i, j in idx)
    diag = np.real(np.diag(G))
    bound = np.abs(G) - np.sqrt(np.outer(np.maximum(diag, 0), np.maximum(diag, 0)))
    lam = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
    return {
        "hermiticity": float(herm),
        "min_eigenvalue": float(lam[0]),
        "bound_excess": float(np.max(bound)),
    }


def kernel_table_csv(kernel: Kernel, pairs: Sequence[tuple[PhasePoint, PhasePoint]],
                     header: Sequence[str] = ()) -> str:
    """CSV rows (p1'',q1'',...,p1',q1',...,re,im) with '#' comment header lines."""
    J = kernel.J
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    names = [f"{v}{j + 1}{s}" for s in ("''", "'") for j in range(J) for v in ("p", "q")]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names + ["re", "im"])
    for a, b in pairs:
        z = kernel.evaluate(a, b)
        row = [x for j in range(J) for x in (a.p[j], a.q[j])] + [x for j in range(J) for x in (b.p[j], b.q[j])]
        w.writerow([repr(float(x)) for x in row] + [repr(z.real), repr(z.imag)])
    return buf.getvalue()
