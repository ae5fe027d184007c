"""Acceptance checks shared by ``csk verify-all`` and the test-suite.

Each check returns a :class:`CriterionResult` with the measured values next
to their targets.  ``kernel_scale`` multiplies the kernels fed to the RKHS
axiom check; it exists so a deliberately mis-scaled kernel can be shown to
fail.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import constraint_symbols as cs
from . import dynamics as dyn
from . import penalty as pen
from . import projectors as pj
from . import rkhs
from .coherent_states import PhasePoint

__all__ = ["CriterionResult", "CRITERIA", "run_criteria", "format_line"]

RUNTIME_LIMIT = 300.0


@dataclass
class CriterionResult:
    number: int
    name: str
    group: str
    passed: bool
    measured: dict = field(default_factory=dict)
    target: str = ""
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "group": self.group,
                "passed": self.passed, "measured": self.measured, "target": self.target,
                "seconds": round(self.seconds, 3)}


def _grid(n=5, box=2.0):
    return np.linspace(-box, box, n)


def reduction_limit(**_) -> CriterionResult:
    t0 = time.perf_counter()
    xs = _grid()
    scale = lambda d: math.sqrt(math.pi) / (2 * d)
    exact = np.exp(-0.5 * (xs[:, None] ** 2 + xs[None, :] ** 2))
    fam = lambda d: rkhs.banded_kernel(d)
    at = scale(0.01) * np.array([[fam(0.01)(PhasePoint(a, 0.0), PhasePoint(b, 0.0)) for b in xs] for a in xs])
    err = float(np.max(np.abs(at - exact)))
    lim = rkhs.reduce_scaled_limit(fam, scale, (0.08, 0.04, 0.02, 0.01), order=2)
    ext = np.array([[lim(PhasePoint(a, 0.0), PhasePoint(b, 0.0)) for b in xs] for a in xs])
    ext_err = float(np.max(np.abs(ext - exact)))
    # error ratio under delta halving, about 4 for an O(delta^2) approach
    at2 = scale(0.02) * np.array([[fam(0.02)(PhasePoint(a, 0.0), PhasePoint(b, 0.0)) for b in xs] for a in xs])
    ratio = float(np.max(np.abs(at2 - exact)) / err)
    dt = time.perf_counter() - t0
    ok = err < 1e-3 and ext_err < 1e-8 and 3.5 < ratio < 4.5 and dt < 1.0
    return CriterionResult(1, "reduction limit", "reduce", ok,
                           {"max_error_delta_0.01": err, "richardson_error": ext_err,
                            "halving_ratio": ratio, "runtime_s": dt},
                           "error < 1e-3, Richardson < 1e-8, ratio ~4, runtime < 1 s")


def lower_symbols(**_) -> CriterionResult:
    v3 = cs.phi_gamma(1.0, 2.0, 1.0)
    p2 = [cs.even_symbol(2, p, 1.0) - (p * p + 0.5) for p in (-1.5, 0.0, 0.7, 2.0)]
    c4 = cs.even_symbol(4, 0.0, 1.0)
    ok = abs(v3 - 2.5) <= 1e-12 and max(map(abs, p2)) <= 1e-12 and abs(c4 - 0.75) <= 1e-12
    return CriterionResult(2, "lower symbols", "symbol", ok,
                           {"P3_at_1": v3, "P2_max_dev": max(map(abs, p2)), "P4_constant": c4},
                           "P^3 -> 2.5, P^2 -> p^2 + 0.5, P^4 constant 0.75 (1e-12)")


def slope_constant(**_) -> CriterionResult:
    rel = {}
    for g in (-0.5, 1 / 3, 1.0, 2.0, 3.0):
        num = cs.numeric_slope(g, 1.0)
        ref = 2 / math.sqrt(math.pi) * math.gamma((g + 3) / 2)
        rel[f"{g:.4g}"] = abs(num - ref) / ref
    s2 = cs.slope_constant(2.0, 1.0).slope_at_zero
    ok = max(rel.values()) < 5e-3 and abs(s2 - 1.5) < 1e-10
    return CriterionResult(3, "slope constant", "symbol", ok,
                           {"max_relative_error": max(rel.values()), "per_gamma": rel, "gamma2_slope": s2},
                           "relative error < 0.5%, gamma=2 slope 1.5 to 1e-10")


def band_identities(**_) -> CriterionResult:
    rng = np.random.Generator(np.random.PCG64(4))
    bad = 0
    for g, d in zip(rng.uniform(-0.9, 4.0, 10), rng.uniform(0.01, 5.0, 10)):
        for spec in (pj.ConstraintFunctionSpec.odd_power_law(g), pj.ConstraintFunctionSpec.even_power(2)):
            band = pj.band_for_constraint(spec, d)
            if not (band.lo == -d and band.hi == d):
                bad += 1
    return CriterionResult(4, "band identities", "project", bad == 0, {"mismatches": bad},
                           "(-delta, delta) exactly for 10 random (gamma, delta)")


def rkhs_axioms(kernel_scale: float = 1.0, **_) -> CriterionResult:
    t0 = time.perf_counter()
    pts = rkhs.random_points(8, 1, 2.0, seed=7)
    mins = {}
    for d in (0.5, 1.0, math.inf):
        k = rkhs.banded_kernel(d).scaled(kernel_scale)
        mins[str(d)] = rkhs.gram(k, pts, psd_tol=math.inf).min_eigenvalue
    pairs = [(PhasePoint(0.0, 0.0), PhasePoint(1.0, 1.0)),
             (PhasePoint(0.3, -1.0), PhasePoint(1.5, 2.0)),
             (PhasePoint(-2.0, 2.0), PhasePoint(2.0, -2.0))]
    k1 = rkhs.banded_kernel(1.0).scaled(kernel_scale)
    res = [rkhs.check_reproducing(k1, a, b, 8.0) for a, b in pairs]
    dt = time.perf_counter() - t0
    ok = min(mins.values()) >= -1e-10 and max(res) < 1e-6 and dt < 10
    return CriterionResult(5, "RKHS axioms", "kernel", ok,
                           {"min_eigenvalues": mins, "max_reproducing_residual": max(res),
                            "kernel_scale": kernel_scale, "runtime_s": dt},
                           "min eig >= -1e-10, reproducing residual < 1e-6, runtime < 10 s")


def example_one(**_) -> CriterionResult:
    probes = rkhs.random_points(6, 2, 1.5, seed=11)
    scale = lambda d: math.pi / (2 * d) ** 2
    lim = rkhs.reduce_scaled_limit(lambda d: rkhs.product_band_kernel(d, 2), scale, (0.08, 0.04, 0.02, 0.01))
    ref = rkhs.band_limit_kernel(2)
    prod_err = float(np.max(np.abs(lim.matrix(probes) - ref.matrix(probes))))
    ranks, norms = {}, []
    for c in (0.0, 1.0, 5.0):
        k = rkhs.example1_c_kernel(c)
        ranks[str(c)] = rkhs.rank(k, probes)
        G = k.matrix(probes)
        d = np.sqrt(np.real(np.diag(G)))
        norms.append(np.abs(G) / np.outer(d, d))
    spread = float(max(np.max(np.abs(n - norms[0])) for n in norms))
    ok = prod_err < 1e-8 and all(r == 1 for r in ranks.values()) and spread < 1e-12
    return CriterionResult(6, "two-constraint kernels", "reduce", ok,
                           {"product_form_error": prod_err, "ranks": ranks, "abs_normalized_spread": spread},
                           "product form 1e-8, rank 1, |normalized| c-independent 1e-12")


def _probe_pairs(n, box, seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    return [(PhasePoint(v[0], v[1]), PhasePoint(v[2], v[3])) for v in rng.uniform(-box, box, (n, 4))]


def quadratic_penalty(**_) -> CriterionResult:
    pairs = _probe_pairs(5, 2.0, 11)
    errs = {}
    for A in (1e3, 1e4):
        cfg = pen.PenaltyConfig(A, 1.0)
        errs[A] = max(abs(pen.quadratic_penalty_element(a, b, cfg) - pen.projected_kernel(a, b)) for a, b in pairs)
    ratio = errs[1e3] / errs[1e4]
    ok = errs[1e4] < 1e-3 and 8 < ratio < 12
    return CriterionResult(7, "quadratic penalty limit", "penalty", ok,
                           {"max_error_A1e4": errs[1e4], "max_error_A1e3": errs[1e3], "ratio": ratio},
                           "error < 1e-3 at A=1e4, ratio ~10")


QUARTIC_PAIRS = ((PhasePoint(0.5, 1.0), PhasePoint(-0.7, 0.3)),
                 (PhasePoint(1.0, 0.0), PhasePoint(0.2, -1.0)),
                 (PhasePoint(-0.4, 2.0), PhasePoint(0.8, 0.0)))


def quartic_penalty(**_) -> CriterionResult:
    origin = PhasePoint(0.0, 0.0)
    cfg = pen.PenaltyConfig(1e6, 1.0, pen.WKind.P_FOURTH_QUARTER)
    ref = pen.quartic_penalty_element(origin, origin, cfg)
    errs = [abs(pen.quartic_penalty_element(a, b, cfg) / ref - pen.projected_kernel(a, b))
            for a, b in QUARTIC_PAIRS]
    plateau = [pen.quartic_penalty_element(origin, origin, cfg.with_A(A)) for A in (1e4, 1e5, 1e6)]
    mags = np.array(plateau)
    spread = float(np.max(np.abs(mags - mags[-1])) / abs(mags[-1]))
    ok = max(errs) < 1e-2 and spread < 2e-2
    return CriterionResult(8, "quartic penalty limit", "penalty", ok,
                           {"max_ratio_error": max(errs), "plateau_relative_spread": spread},
                           "ratio error < 1e-2, plateau spread < 2%")


def matrix_projector(**_) -> CriterionResult:
    phi = np.diag([0.0, 1.0, -1.0]).astype(complex)
    cset = pj.MatrixConstraintSet([phi])
    E = pj.group_average_projector(cset)
    e_err = float(np.max(np.abs(E - np.diag([1.0, 0.0, 0.0]))))
    idem = float(np.max(np.abs(E @ E - E)))
    kill = float(np.max(np.abs(phi @ E)))
    gauge = max(pj.check_gauge_invariance(E, cset, [t]) for t in (0.7, 1.3, math.pi))
    H = np.diag([2.0, 5.0, 5.0]).astype(complex)
    pj.sandwich_hamiltonian(E, H, cset)
    sand = max(pj.sandwich_residual(E, H, T) for T in (1.0, 10.0))
    ok = e_err < 1e-12 and max(idem, kill, gauge) < 1e-10 and sand < 1e-8
    return CriterionResult(9, "matrix projector", "project", ok,
                           {"E_error": e_err, "idempotence": idem, "Phi_E": kill,
                            "gauge_residual": gauge, "sandwich_residual": sand},
                           "E exact 1e-12; E^2=E, Phi E=0, gauge 1e-10; sandwich < 1e-8")


def dynamics(**_) -> CriterionResult:
    gauges = [(lambda t: 1.0, lambda t: 1.0), (lambda t: 1.0 + 0.5 * math.sin(t), lambda t: math.cos(t))]
    g = dyn.gauge_equivalence_check(3.0, gauges, 5.0, 0.01)
    ai = dyn.a_independence_experiment("quadratic", (1e2, 1e3, 1e4), 1.0)
    A, c = 50.0, 1.0
    start = PhasePoint(0.0, math.sqrt(1 + c / (2 * A)))
    rec = dyn.integrate_penalty("circle", A, start, 5.0, 0.005)
    c_fit, fit_res = dyn.fit_rotation(rec)
    drift = dyn.drift_order_experiment()
    ok = (g["max_abs_p"] < 1e-10 and ai["q_final_spread"] < 1e-8 and ai["max_q_error"] < 1e-8
          and rec.invariant_drift["radius"] < 1e-8 and fit_res < 1e-6 and abs(drift["ratio"] - 16) <= 3)
    return CriterionResult(10, "dynamics", "dynamics", ok,
                           {"example1_max_abs_p": g["max_abs_p"], "quadratic_q_spread": ai["q_final_spread"],
                            "circle_radius_drift": rec.invariant_drift["radius"], "circle_rate": c_fit,
                            "circle_fit_residual": fit_res, "drift_ratio": drift["ratio"]},
                           "|p| < 1e-10; spread < 1e-8; radius drift < 1e-8; fit < 1e-6; ratio 16 +- 3")


CRITERIA: tuple[tuple[str, Callable[..., CriterionResult]], ...] = (
    ("reduce", reduction_limit),
    ("symbol", lower_symbols),
    ("symbol", slope_constant),
    ("project", band_identities),
    ("kernel", rkhs_axioms),
    ("reduce", example_one),
    ("penalty", quadratic_penalty),
    ("penalty", quartic_penalty),
    ("project", matrix_projector),
    ("dynamics", dynamics),
)

GROUPS = ("reduce", "symbol", "project", "kernel", "penalty", "dynamics")


def _run_one(number: int, group: str, fn, **kw) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        res = fn(**kw)
    except Exception as exc:  # a crash fails that criterion, not the whole run
        res = CriterionResult(number, fn.__name__.replace("_", " "), group, False,
                              {"error": f"{type(exc).__name__}: {exc}"})
    res.seconds = time.perf_counter() - t0
    return res


def run_criteria(filter_group: str | None = None, kernel_scale: float = 1.0) -> list[CriterionResult]:
    """Run the criteria (optionally one group) and, for a full run, the runtime criterion."""
    if filter_group is not None and filter_group not in GROUPS:
        raise ValueError(f"unknown group {filter_group!r}; choose from {', '.join(GROUPS)}")
    t0 = time.perf_counter()
    out = [_run_one(i + 1, group, fn, kernel_scale=kernel_scale)
           for i, (group, fn) in enumerate(CRITERIA)
           if filter_group is None or group == filter_group]
    if filter_group is None:
        total = time.perf_counter() - t0
        ok = total < RUNTIME_LIMIT and all(r.passed for r in out)
        out.append(CriterionResult(11, "verify-all", "cli", ok,
                                   {"runtime_s": total, "failed": [r.number for r in out if not r.passed]},
                                   "all criteria PASS in < 300 s", total))
    return out


def format_line(res: CriterionResult, timings: bool = True) -> str:
    """One PASS/FAIL line; ``timings=False`` drops wall-clock values for reproducible output."""
    status = "PASS" if res.passed else "FAIL"
    parts = []
    for k, v in res.measured.items():
        if not timings and k.endswith("_s"):
            continue
        if isinstance(v, float):
            parts.append(f"{k}={v:.3e}")
        elif isinstance(v, dict):
            continue
        else:
            parts.append(f"{k}={v}")
    return f"{status} [{res.number:2d}] {res.name}: {', '.join(parts)} (target: {res.target})"
