"""Classical constrained dynamics with Lagrange multipliers and penalty terms.

The equations of motion are

    dq/dt =  dH/dp + lambda_a(t) dphi_a/dp,
    dp/dt = -dH/dq - lambda_a(t) dphi_a/dq,

integrated with the classic fourth-order Runge-Kutta rule at fixed step.
Gradients are supplied as functions (p, q) -> 2J-vector [d/dp..., d/dq...].
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .coherent_states import PhasePoint, quartic_penalty_factor
from .errors import DimensionMismatch, NotOnSurface, StepRejected
from .quadrature import gauss_legendre

__all__ = [
    "ConstrainedSystem",
    "TrajectoryRecord",
    "poisson_bracket",
    "first_class_residual",
    "integrate_constrained",
    "example1_system",
    "gauge_equivalence_check",
    "integrate_penalty",
    "fit_rotation",
    "a_independence_experiment",
    "pendulum_shell_system",
    "drift_order_experiment",
    "trajectory_csv",
    "report_json",
]

SURFACE_TOL = 1e-10

Grad = Callable[[np.ndarray, np.ndarray], np.ndarray]
Scalar = Callable[[np.ndarray, np.ndarray], float]


def _zero_grad(J):
    return lambda p, q: np.zeros(2 * J)


@dataclass
class ConstrainedSystem:
    J: int
    hamiltonian: Scalar
    hamiltonian_gradient: Grad
    constraints: Sequence[Scalar] = ()
    constraint_gradients: Sequence[Grad] = ()
    multipliers: Sequence[Callable[[float], float]] = ()
    name: str = ""

    def __post_init__(self):
        n = len(self.constraints)
        if len(self.constraint_gradients) != n or len(self.multipliers) != n:
            raise DimensionMismatch(
                "constraints, constraint_gradients and multipliers must have equal length")

    @classmethod
    def free(cls, J: int, constraints=(), gradients=(), multipliers=(), name=""):
        """System with H = 0, so the flow is generated by the constraints alone."""
        return cls(J, lambda p, q: 0.0, _zero_grad(J), list(constraints), list(gradients),
                   list(multipliers), name)

    def constraint_values(self, p, q) -> np.ndarray:
        return np.array([float(phi(p, q)) for phi in self.constraints])

    def rhs(self, t: float, p: np.ndarray, q: np.ndarray):
        g = np.asarray(self.hamiltonian_gradient(p, q), dtype=float).copy()
        for lam, grad in zip(self.multipliers, self.constraint_gradients):
            g += float(lam(t)) * np.asarray(grad(p, q), dtype=float)
        J = self.J
        return -g[J:], g[:J]


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    p: np.ndarray
    q: np.ndarray
    constraint_drift: np.ndarray
    energy: np.ndarray
    invariant_drift: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.p.shape != self.q.shape or self.p.shape[0] != self.times.size:
            raise DimensionMismatch("state arrays do not match the time grid")

    @property
    def J(self) -> int:
        return self.p.shape[1]

    @property
    def states(self) -> list[PhasePoint]:
        return [PhasePoint(p, q) for p, q in zip(self.p, self.q)]

    @property
    def final(self) -> PhasePoint:
        return PhasePoint(self.p[-1], self.q[-1])


def poisson_bracket(grad_f: np.ndarray, grad_g: np.ndarray) -> float:
    """{f, g} = df/dq dg/dp - df/dp dg/dq from 2J-vector gradients [d/dp, d/dq]."""
    grad_f = np.asarray(grad_f, dtype=float)
    grad_g = np.asarray(grad_g, dtype=float)
    J = grad_f.size // 2
    return float(grad_f[J:] @ grad_g[:J] - grad_f[:J] @ grad_g[J:])


def first_class_residual(sys: ConstrainedSystem, points: Sequence[PhasePoint]) -> float:
    """Largest |{phi_a, phi_b}| or |{phi_a, H}| over the given surface points."""
    worst = 0.0
    for pt in points:
        p, q = pt.p, pt.q
        grads = [np.asarray(g(p, q)) for g in sys.constraint_gradients]
        gh = np.asarray(sys.hamiltonian_gradient(p, q))
        for i, gi in enumerate(grads):
            worst = max(worst, abs(poisson_bracket(gi, gh)))
            for gj in grads[i + 1:]:
                worst = max(worst, abs(poisson_bracket(gi, gj)))
    return worst


def _rk4(sys: ConstrainedSystem, p0, q0, t_final: float, dt: float, t0: float = 0.0):
    if not (dt > 0 and t_final > 0):
        raise ValueError("dt and t_final must be positive")
    n = max(1, int(round(t_final / dt)))
    h = t_final / n
    J = sys.J
    P = np.empty((n + 1, J))
    Q = np.empty((n + 1, J))
    P[0], Q[0] = p0, q0
    p, q = P[0].copy(), Q[0].copy()
    # overflow is reported as StepRejected below, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            t = t0 + i * h
            k1p, k1q = sys.rhs(t, p, q)
            k2p, k2q = sys.rhs(t + h / 2, p + h / 2 * k1p, q + h / 2 * k1q)
            k3p, k3q = sys.rhs(t + h / 2, p + h / 2 * k2p, q + h / 2 * k2q)
            k4p, k4q = sys.rhs(t + h, p + h * k3p, q + h * k3q)
            p = p + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
            q = q + h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q)
            if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
                raise StepRejected(f"non-finite state at t = {t + h:g}")
            P[i + 1], Q[i + 1] = p, q
    return t0 + h * np.arange(n + 1), P, Q


def integrate_constrained(sys: ConstrainedSystem, initial: PhasePoint, t_final: float,
                          dt: float, *, surface_tol: float = SURFACE_TOL) -> TrajectoryRecord:
    """Integrate the multiplier equations from a point on the constraint surface.

    ``dt`` is adjusted down so that a whole number of steps reaches t_final.
    Raises NotOnSurface if some |phi_a(initial)| >= surface_tol.
    """
    if initial.J != sys.J:
        raise DimensionMismatch(f"initial point has J={initial.J}, system has J={sys.J}")
    phi0 = sys.constraint_values(initial.p, initial.q)
    if phi0.size and np.max(np.abs(phi0)) >= surface_tol:
        raise NotOnSurface(f"initial constraint values {phi0.tolist()} exceed {surface_tol:g}")
    times, P, Q = _rk4(sys, initial.p, initial.q, t_final, dt)
    drift = np.array([np.max(np.abs(sys.constraint_values(p, q))) if sys.constraints else 0.0
                      for p, q in zip(P, Q)])
    energy = np.array([float(sys.hamiltonian(p, q)) for p, q in zip(P, Q)])
    inv = {"constraint": float(drift.max()), "energy": float(np.max(np.abs(energy - energy[0])))}
    return TrajectoryRecord(times, P, Q, drift, energy, inv)


def example1_system(version: int, lambdas: Sequence[Callable[[float], float]], c: float = 0.0):
    """Two degrees of freedom, H = 0, constraints p1 and either p2 or exp(c q1) p2."""
    phi1 = lambda p, q: p[0]
    g1 = lambda p, q: np.array([1.0, 0.0, 0.0, 0.0])
    if version == 1:
        phi2 = lambda p, q: p[1]
        g2 = lambda p, q: np.array([0.0, 1.0, 0.0, 0.0])
    elif version == 2:
        phi2 = lambda p, q: math.exp(c * q[0]) * p[1]
        g2 = lambda p, q: np.array([0.0, math.exp(c * q[0]),
                                    c * math.exp(c * q[0]) * p[1], 0.0])
    else:
        raise ValueError("version must be 1 or 2")
    return ConstrainedSystem.free(2, [phi1, phi2], [g1, g2], list(lambdas), f"example1-v{version}")


def _antiderivative(f: Callable[[float], float], t: float, nodes: int = 48) -> float:
    if t == 0:
        return 0.0
    x, w = gauss_legendre(nodes)
    s = 0.5 * t * (x + 1)
    return 0.5 * t * float(np.sum(w * np.array([f(v) for v in s])))


def gauge_equivalence_check(c: float, lambda_choices, t_final: float = 5.0, dt: float = 0.01,
                            initial: PhasePoint | None = None) -> dict:
    """Compare both formulations of the p1 = p2 = 0 system under several gauges.

    Each entry of ``lambda_choices`` is a pair (lambda1, lambda2).  For every
    gauge both formulations are integrated; the second formulation is also
    run with the compensating gauge lambda2(t) exp(-c q1(t)), which must
    reproduce the first formulation's trajectory, so both reach the same
    endpoints.
    """
    initial = initial or PhasePoint.origin(2)
    if initial.J != 2:
        raise DimensionMismatch("the p1 = p2 = 0 system has two degrees of freedom")
    if np.max(np.abs(initial.p)) >= SURFACE_TOL:
        raise NotOnSurface("the gauge check starts on p1 = p2 = 0")
    gauges = []
    for lam1, lam2 in lambda_choices:
        t1 = integrate_constrained(example1_system(1, (lam1, lam2)), initial, t_final, dt)
        t2 = integrate_constrained(example1_system(2, (lam1, lam2), c), initial, t_final, dt)
        q10 = float(initial.q[0])
        comp = lambda t, lam1=lam1, lam2=lam2: lam2(t) * math.exp(-c * (q10 + _antiderivative(lam1, t)))
        t2c = integrate_constrained(example1_system(2, (lam1, comp), c), initial, t_final, dt)
        sys2 = example1_system(2, (lam1, lam2), c)
        bracket = max(abs(poisson_bracket(sys2.constraint_gradients[0](p, q),
                                          sys2.constraint_gradients[1](p, q)))
                      for p, q in zip(t2.p, t2.q))
        gauges.append({
            "max_abs_p_v1": float(np.max(np.abs(t1.p))),
            "max_abs_p_v2": float(np.max(np.abs(t2.p))),
            "endpoint_v1": t1.q[-1].tolist(),
            "endpoint_v2": t2.q[-1].tolist(),
            "endpoint_v2_compensated": t2c.q[-1].tolist(),
            "endpoint_mismatch": float(np.max(np.abs(t1.q[-1] - t2c.q[-1]))),
            "max_abs_bracket_v2": bracket,
        })
    max_p = max(max(g["max_abs_p_v1"], g["max_abs_p_v2"]) for g in gauges)
    mismatch = max(g["endpoint_mismatch"] for g in gauges)
    return {
        "c": float(c),
        "t_final": float(t_final),
        "gauges": gauges,
        "max_abs_p": max_p,
        "max_endpoint_mismatch": mismatch,
        "max_abs_bracket": max(g["max_abs_bracket_v2"] for g in gauges),
        "equivalent": bool(max_p < SURFACE_TOL and mismatch < 1e-8),
    }


def _penalty_system(kind: str, A: float) -> tuple[ConstrainedSystem, Callable]:
    if not A > 0:
        raise ValueError("A must be positive")
    if kind == "quadratic":
        H = lambda p, q: 0.5 * A * p[0] ** 2
        dH = lambda p, q: np.array([A * p[0], 0.0])
        phi = lambda p, q: p[0]
    elif kind == "circle":
        H = lambda p, q: 0.5 * A * (p[0] ** 2 + q[0] ** 2 - 1) ** 2
        dH = lambda p, q: 2 * A * (p[0] ** 2 + q[0] ** 2 - 1) * np.array([p[0], q[0]])
        phi = lambda p, q: p[0] ** 2 + q[0] ** 2 - 1
    elif kind == "quartic":
        H = lambda p, q: 0.25 * A * p[0] ** 4
        dH = lambda p, q: np.array([A * p[0] ** 3, 0.0])
        phi = lambda p, q: p[0]
    else:
        raise ValueError(f"unknown penalty kind {kind!r}")
    return ConstrainedSystem(1, H, dH, name=f"penalty-{kind}"), phi


def integrate_penalty(kind: str, A: float, initial: PhasePoint, t_final: float,
                      dt: float) -> TrajectoryRecord:
    """Integrate the penalty Hamiltonian A p^2/2, A(p^2+q^2-1)^2/2 or A p^4/4.

    ``constraint_drift`` holds |phi| for the constraint the penalty enforces
    (p, or p^2 + q^2 - 1 for the circle).
    """
    sys, phi = _penalty_system(kind, A)
    if initial.J != 1:
        raise DimensionMismatch("penalty systems have one degree of freedom")
    times, P, Q = _rk4(sys, initial.p, initial.q, t_final, dt)
    cons = np.array([phi(p, q) for p, q in zip(P, Q)])
    energy = np.array([sys.hamiltonian(p, q) for p, q in zip(P, Q)])
    inv = {"energy": float(np.max(np.abs(energy - energy[0])))}
    if kind == "circle":
        inv["radius"] = float(np.max(np.abs(cons - cons[0])))
    return TrajectoryRecord(times, P, Q, np.abs(cons), energy, inv)


def fit_rotation(rec: TrajectoryRecord) -> tuple[float, float]:
    """Fit the rigid rotation p = p' cos ct - q' sin ct, q = q' cos ct + p' sin ct.

    The rate c comes from a least-squares line through the unwrapped polar
    angle of (q, p).  Returns (c, max deviation from the fitted rotation).
    """
    p, q, t = rec.p[:, 0], rec.q[:, 0], rec.times - rec.times[0]
    theta = np.unwrap(np.arctan2(p, q))
    c = -float(np.polyfit(t, theta - theta[0], 1)[0]) if t.size > 1 else 0.0
    p0, q0 = p[0], q[0]
    pf = p0 * np.cos(c * t) - q0 * np.sin(c * t)
    qf = q0 * np.cos(c * t) + p0 * np.sin(c * t)
    return c, float(max(np.max(np.abs(pf - p)), np.max(np.abs(qf - q))))


def a_independence_experiment(kind: str, A_ladder: Sequence[float], target_velocity: float,
                              *, q0: float = 0.0, t_final: float = 1.0, dt: float = 0.01,
                              hbar: float = 1.0) -> dict:
    """Integrate penalty flows with p' tuned so the velocity is A-independent.

    p' = v/A (quadratic) or (v/A)^{1/3} (quartic) gives q(t) = v t + q'.
    Reports the classical energy, which vanishes as A grows, and the energy
    with the coherent-state zero-point term, which grows linearly in A.
    """
    ladder = [float(a) for a in A_ladder]
    if len(ladder) < 3 or any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("A ladder must be increasing with at least three entries")
    if ladder[-1] / ladder[0] < 100 * (1 - 1e-12):
        raise ValueError("A ladder must span at least two decades (three values)")
    rows = []
    for A in ladder:
        if kind == "quadratic":
            p0 = target_velocity / A
            energy = 0.5 * A * p0 ** 2
            augmented = 0.5 * A * (p0 ** 2 + hbar / 2)
        elif kind == "quartic":
            p0 = math.copysign(abs(target_velocity / A) ** (1 / 3), target_velocity)
            energy = 0.25 * A * p0 ** 4
            augmented = quartic_penalty_factor(p0, A, hbar)
        else:
            raise ValueError("a_independence_experiment supports quadratic and quartic")
        rec = integrate_penalty(kind, A, PhasePoint(p0, q0), t_final, dt)
        rows.append({
            "A": A,
            "p0": p0,
            "q_final": float(rec.q[-1, 0]),
            "q_expected": q0 + target_velocity * t_final,
            "max_abs_p_change": float(np.max(np.abs(rec.p[:, 0] - p0))),
            "energy": energy,
            "augmented_energy": augmented,
        })
    qf = [r["q_final"] for r in rows]
    en = [r["energy"] for r in rows]
    aug = [r["augmented_energy"] for r in rows]
    return {
        "kind": kind,
        "target_velocity": float(target_velocity),
        "hbar": float(hbar),
        "rows": rows,
        "q_final_spread": float(max(qf) - min(qf)),
        "max_q_error": float(max(abs(r["q_final"] - r["q_expected"]) for r in rows)),
        "energy_vanishing": bool(all(b < a for a, b in zip(en, en[1:]))),
        "augmented_diverging": bool(all(b > a for a, b in zip(aug, aug[1:]))),
    }


def pendulum_shell_system(E0: float = 1.5, lam: Callable[[float], float] | None = None):
    """H = 0 with the single constraint p^2/2 + (1 - cos q) - E0.

    A single constraint is always first class, and the flow it generates is
    nonlinear, so the integrator's constraint drift shows its true order.
    """
    lam = lam or (lambda t: 1.0 + 0.5 * math.sin(t))
    phi = lambda p, q: 0.5 * p[0] ** 2 + (1 - math.cos(q[0])) - E0
    grad = lambda p, q: np.array([p[0], math.sin(q[0])])
    return ConstrainedSystem.free(1, [phi], [grad], [lam], "pendulum-shell")


def drift_order_experiment(dt: float = 0.1, t_final: float = 5.0, E0: float = 1.5) -> dict:
    """Max constraint drift at dt and dt/2 and their ratio (about 16 for fourth order).

    Over long horizons the secular part of the drift, which for this flow
    starts at dt^5 t, overtakes the bounded dt^4 part and pushes the ratio
    toward 32; the default horizon stays in the dt^4 regime.
    """
    sys = pendulum_shell_system(E0)
    start = PhasePoint(math.sqrt(2 * E0), 0.0)
    d1 = integrate_constrained(sys, start, t_final, dt).constraint_drift.max()
    d2 = integrate_constrained(sys, start, t_final, dt / 2).constraint_drift.max()
    return {"dt": dt, "drift": float(d1), "drift_half": float(d2), "ratio": float(d1 / d2)}


def trajectory_csv(rec: TrajectoryRecord, header: Sequence[str] = ()) -> str:
    """CSV with columns t, p..., q..., max_abs_constraint, energy."""
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    J = rec.J
    w.writerow(["t"] + [f"p{j + 1}" for j in range(J)] + [f"q{j + 1}" for j in range(J)]
               + ["max_abs_constraint", "energy"])
    for i, t in enumerate(rec.times):
        w.writerow([repr(float(t))] + [repr(float(x)) for x in rec.p[i]]
                   + [repr(float(x)) for x in rec.q[i]]
                   + [repr(float(rec.constraint_drift[i])), repr(float(rec.energy[i]))])
    return buf.getvalue()


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
