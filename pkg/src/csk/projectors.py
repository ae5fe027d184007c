"""Projection operators onto quantum constraint subspaces.

Two constructions are provided.  Constraints that are functions of a single
momentum operator are projected with a spectral band E(lo < P < hi).  Finite
dimensional constraint algebras are projected by averaging exp(-i xi.Phi)
over the compact group they generate.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import DimensionMismatch, FirstClassViolation, InvalidGamma, NotClosedAlgebra, NotCompact

__all__ = [
    "SpectralBand",
    "ConstraintKind",
    "ConstraintFunctionSpec",
    "MatrixConstraintSet",
    "band_for_constraint",
    "preimage_band",
    "group_average_projector",
    "alternating_average_projector",
    "check_gauge_invariance",
    "sandwich_hamiltonian",
    "sandwich_residual",
    "spin_matrices",
]

HERMITIAN_TOL = 1e-12
CLOSURE_TOL = 1e-10


@dataclass(frozen=True)
class SpectralBand:
    """Open interval (lo, hi) of the momentum spectrum."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty band ({self.lo}, {self.hi})")

    @classmethod
    def symmetric(cls, delta: float) -> "SpectralBand":
        return cls(-delta, delta)

    @property
    def is_full_line(self) -> bool:
        return math.isinf(self.lo) and math.isinf(self.hi)

    def indicator(self, k):
        k = np.asarray(k, dtype=float)
        return ((k > self.lo) & (k < self.hi)).astype(float)


class ConstraintKind(str, enum.Enum):
    ODD_POWER_LAW = "odd_power_law"
    EVEN_POWER = "even_power"
    LINEAR = "linear"


@dataclass(frozen=True)
class ConstraintFunctionSpec:
    """A constraint operator that is a function of P alone.

    ``odd_power_law`` is P|P|^gamma with gamma > -1, ``even_power`` is P^n
    with n a positive even integer, and ``linear`` is P itself.
    """

    kind: ConstraintKind
    gamma: float | None = None
    n: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ConstraintKind(self.kind))
        if self.kind is ConstraintKind.ODD_POWER_LAW:
            if self.gamma is None or not self.gamma > -1:
                raise InvalidGamma(f"gamma must exceed -1, got {self.gamma!r}")
        elif self.kind is ConstraintKind.EVEN_POWER:
            if self.n is None or int(self.n) != self.n or self.n < 2 or self.n % 2:
                raise ValueError(f"even_power needs a positive even integer, got {self.n!r}")

    @classmethod
    def odd_power_law(cls, gamma: float):
        return cls(ConstraintKind.ODD_POWER_LAW, gamma=gamma)

    @classmethod
    def even_power(cls, n: int):
        return cls(ConstraintKind.EVEN_POWER, n=n)

    @classmethod
    def linear(cls):
        return cls(ConstraintKind.LINEAR)

    def __call__(self, p):
        """The constraint function evaluated on momentum values."""
        p = np.asarray(p, dtype=float)
        if self.kind is ConstraintKind.ODD_POWER_LAW:
            return np.sign(p) * np.abs(p) ** (self.gamma + 1)
        if self.kind is ConstraintKind.EVEN_POWER:
            return p ** self.n
        return p

    def threshold(self, delta: float) -> float:
        """Image of the momentum half-width delta under |constraint|."""
        if self.kind is ConstraintKind.ODD_POWER_LAW:
            return delta ** (self.gamma + 1)
        if self.kind is ConstraintKind.EVEN_POWER:
            return delta ** self.n
        return delta


def band_for_constraint(spec: ConstraintFunctionSpec, delta: float) -> SpectralBand:
    """Momentum band equal to E(-t < constraint < t) with t = spec.threshold(delta).

    Every supported constraint is a strictly increasing function of |P|, so
    the preimage of the threshold band is exactly (-delta, delta); the band
    therefore depends on delta only.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if spec.kind is ConstraintKind.ODD_POWER_LAW and not spec.gamma > -1:
        raise InvalidGamma(f"gamma must exceed -1, got {spec.gamma!r}")
    t = spec.threshold(delta)
    if not (t > 0 and math.isfinite(t)):
        raise ValueError(f"threshold {t!r} is not a usable band edge")
    return SpectralBand(-delta, delta)


def preimage_band(spec: ConstraintFunctionSpec, threshold: float) -> SpectralBand:
    """Numerically invert |constraint(P)| < threshold."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    if spec.kind is ConstraintKind.ODD_POWER_LAW:
        edge = threshold ** (1.0 / (spec.gamma + 1))
    elif spec.kind is ConstraintKind.EVEN_POWER:
        edge = threshold ** (1.0 / spec.n)
    else:
        edge = threshold
    return SpectralBand(-edge, edge)


def _commutator(a, b):
    return a @ b - b @ a


@dataclass(frozen=True, eq=False)
class MatrixConstraintSet:
    """Hermitian constraint matrices closing under commutation.

    On construction the generators are checked for hermiticity and the
    structure constants c_ab^c of [Phi_a, Phi_b] = i c_ab^c Phi_c are fitted
    by least squares; the fit residual must stay below ``closure_tol``.
    """

    generators: tuple
    structure_constants: np.ndarray = field(repr=False, default=None)
    closure_residual: float = 0.0
    closure_tol: float = CLOSURE_TOL

    def __init__(self, generators, closure_tol: float = CLOSURE_TOL):
        gens = tuple(np.array(g, dtype=complex) for g in generators)
        if not gens:
            raise ValueError("need at least one generator")
        d = gens[0].shape[0]
        for g in gens:
            if g.shape != (d, d):
                raise DimensionMismatch("generators must all be d x d")
            if np.max(np.abs(g - g.conj().T), initial=0.0) > HERMITIAN_TOL:
                raise ValueError("constraint generators must be Hermitian")
            g.setflags(write=False)
        c, res = _fit_structure(gens, [_commutator(a, b) for a in gens for b in gens])
        if res > closure_tol:
            raise NotClosedAlgebra(
                f"commutators do not close on the generators (residual {res:.2e})")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "structure_constants", c.reshape(len(gens), len(gens), len(gens)))
        object.__setattr__(self, "closure_residual", res)
        object.__setattr__(self, "closure_tol", closure_tol)

    @property
    def dimension(self) -> int:
        return self.generators[0].shape[0]

    def __len__(self):
        return len(self.generators)

    def combination(self, tau) -> np.ndarray:
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        if tau.size != len(self.generators):
            raise DimensionMismatch(f"need {len(self.generators)} group parameters, got {tau.size}")
        return sum(t * g for t, g in zip(tau, self.generators))

    @classmethod
    def from_json(cls, source) -> "MatrixConstraintSet":
        """Load ``{"dimension": d, "generators": [...]}``.

        Each generator is a list of d rows of ``[re, im]`` pairs, or a flat
        row-major list of d*d pairs.
        """
        if isinstance(source, str) and source.lstrip().startswith("{"):
            data = json.loads(source)
        elif isinstance(source, (str, Path)):
            data = json.loads(Path(source).read_text())
        else:
            data = source
        d = int(data["dimension"])
        gens = []
        for g in data["generators"]:
            arr = np.asarray(g, dtype=float)
            if arr.shape[-1] != 2:
                raise ValueError("matrix entries must be [re, im] pairs")
            z = arr[..., 0] + 1j * arr[..., 1]
            if z.shape == (d * d,):
                z = z.reshape(d, d)
            if z.shape != (d, d):
                raise DimensionMismatch(f"generator of shape {z.shape} in a dimension-{d} set")
            gens.append(z)
        return cls(gens)

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "generators": [[[[z.real, z.imag] for z in row] for row in g] for g in self.generators],
        }


def _fit_structure(basis, targets):
    """Least-squares fit of targets[k] = i * sum_c x[k, c] basis[c] with real x."""
    cols = np.stack([np.concatenate([(1j * b).real.ravel(), (1j * b).imag.ravel()])
                     for b in basis], axis=1)
    rhs = np.stack([np.concatenate([t.real.ravel(), t.imag.ravel()]) for t in targets], axis=1)
    x, *_ = np.linalg.lstsq(cols, rhs, rcond=None)
    residual = float(np.max(np.abs(cols @ x - rhs), initial=0.0))
    return x.T, residual


def _period(phi: np.ndarray, max_denominator: int = 64):
    """Period of xi -> exp(-i xi phi) and the largest frequency index.

    Returns ``(None, 0)`` for the zero generator.  Raises NotCompact when
    the spectrum is not commensurate, i.e. the orbit is not closed.
    """
    lam = linalg.eigvalsh(phi)
    scale = max(1.0, float(np.max(np.abs(lam))))
    nonzero = lam[np.abs(lam) > 1e-12 * scale]
    if nonzero.size == 0:
        return None, 0
    base = float(np.min(np.abs(nonzero)))
    denominators = []
    numerators = []
    for x in nonzero / base:
        fr = Fraction(float(x)).limit_denominator(max_denominator)
        if abs(float(fr) - x) > 1e-9 * max(1.0, abs(x)):
            raise NotCompact(
                f"generator spectrum {lam.tolist()} is not commensurate; orbit does not close")
        denominators.append(fr.denominator)
        numerators.append(fr)
    lcm = 1
    for den in denominators:
        lcm = lcm * den // math.gcd(lcm, den)
    omega = base / lcm
    period = 2 * math.pi / omega
    back = _orbit(phi, period)
    if np.max(np.abs(back - np.eye(phi.shape[0]))) > 1e-9:
        raise NotCompact("orbit sampling did not return to the identity after one period")
    top = int(round(float(np.max(np.abs(nonzero))) / omega))
    return period, top


def _orbit(phi, xi):
    lam, vec = linalg.eigh(phi)
    return (vec * np.exp(-1j * xi * lam)) @ vec.conj().T


def _one_parameter_average(phi: np.ndarray) -> np.ndarray:
    """Trapezoidal average of exp(-i xi phi) over one period (exact for
    trigonometric polynomials, which the orbit is)."""
    period, top = _period(phi)
    d = phi.shape[0]
    if period is None:
        return np.eye(d, dtype=complex)
    nodes = max(16, 2 * top + 2)
    lam, vec = linalg.eigh(phi)
    xi = period * np.arange(nodes) / nodes
    weights = np.exp(-1j * np.outer(xi, lam)).mean(axis=0)
    return (vec * weights) @ vec.conj().T


def group_average_projector(constraints: MatrixConstraintSet, *, null_tol: float = 1e-10) -> np.ndarray:
    """Projector E onto the common null space of the constraint generators.

    A single generator is averaged over its periodic orbit.  For several
    generators E is read off the eigenspace of sum_a Phi_a^2 with
    eigenvalues below ``null_tol``; :func:`alternating_average_projector`
    gives the averaging route for cross-checks.
    """
    gens = constraints.generators
    for g in gens:
        _period(g)
    if len(gens) == 1:
        E = _one_parameter_average(gens[0])
    else:
        casimir = sum(g @ g for g in gens)
        lam, vec = linalg.eigh(casimir)
        scale = max(1.0, float(np.max(np.abs(lam))))
        null = vec[:, lam < null_tol * scale]
        E = null @ null.conj().T
    return 0.5 * (E + E.conj().T)


def alternating_average_projector(constraints: MatrixConstraintSet, *, tol: float = 1e-12,
                                  max_squarings: int = 60) -> np.ndarray:
    """Group average obtained by iterating the mean of one-parameter averages.

    M = (1/A) sum_a E_a is a positive contraction whose eigenvalue-one
    eigenspace is the invariant subspace; repeated squaring drives M to the
    projector onto it.
    """
    parts = [_one_parameter_average(g) for g in constraints.generators]
    M = sum(parts) / len(parts)
    for _ in range(max_squarings):
        nxt = M @ M
        if np.max(np.abs(nxt - M)) < tol:
            return 0.5 * (nxt + nxt.conj().T)
        M = nxt
    raise NotCompact("averaged orbit operator did not converge to a projector")


def check_gauge_invariance(E: np.ndarray, constraints: MatrixConstraintSet, tau) -> float:
    """Operator norm of exp(-i tau.Phi) E - E."""
    E = np.asarray(E)
    if E.shape != (constraints.dimension,) * 2:
        raise DimensionMismatch(f"projector shape {E.shape} vs dimension {constraints.dimension}")
    U = linalg.expm(-1j * constraints.combination(tau))
    return float(np.linalg.norm(U @ E - E, 2))


def sandwich_hamiltonian(E: np.ndarray, H: np.ndarray,
                         constraints: MatrixConstraintSet | None = None) -> np.ndarray:
    """Return E H E after checking [H, Phi_a] = i h_a^b Phi_b (when constraints are given)."""
    E = np.asarray(E, dtype=complex)
    H = np.asarray(H, dtype=complex)
    if H.shape != E.shape:
        raise DimensionMismatch(f"H has shape {H.shape}, E has shape {E.shape}")
    if constraints is not None:
        gens = constraints.generators
        _, res = _fit_structure(gens, [_commutator(g, H) for g in gens])
        if res > constraints.closure_tol:
            raise FirstClassViolation(
                f"[Phi_a, H] is not a combination of the constraints (residual {res:.2e})")
    return E @ H @ E


def sandwich_residual(E: np.ndarray, H: np.ndarray, T: float) -> float:
    """|| exp(-iHT) E - E exp(-i EHE T) E || in operator norm."""
    E = np.asarray(E, dtype=complex)
    lhs = linalg.expm(-1j * T * H) @ E
    rhs = E @ linalg.expm(-1j * T * (E @ H @ E)) @ E
    return float(np.linalg.norm(lhs - rhs, 2))


def spin_matrices(j: float = 1.0):
    """Angular-momentum matrices (J_x, J_y, J_z) in the spin-j representation."""
    d = int(round(2 * j + 1))
    m = j - np.arange(d)
    jp = np.zeros((d, d), dtype=complex)
    for i in range(1, d):
        jp[i - 1, i] = math.sqrt(j * (j + 1) - m[i] * (m[i] + 1))
    jx = 0.5 * (jp + jp.conj().T)
    jy = -0.5j * (jp - jp.conj().T)
    jz = np.diag(m).astype(complex)
    return jx, jy, jz
