import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from csk.coherent_states import (
    GroundStateMoments,
    HbarContext,
    PhasePoint,
    as_hbar,
    lower_symbol_poly,
    momentum_wavefunction,
    operator_for_symbol,
    overlap,
    quartic_penalty_factor,
    symbol_of_operator,
)
from csk.errors import DimensionMismatch

coord = st.floats(-3, 3)


def test_phase_point_validation():
    with pytest.raises(DimensionMismatch):
        PhasePoint([1.0, 2.0], [0.0])
    with pytest.raises(ValueError):
        PhasePoint(np.nan, 0.0)
    a = PhasePoint(1.0, 2.0)
    assert a == PhasePoint([1.0], [2.0]) and hash(a) == hash(PhasePoint(1.0, 2.0))
    with pytest.raises(ValueError):
        a.p[0] = 3.0
    assert PhasePoint.origin(3).J == 3


def test_hbar_validation():
    with pytest.raises(ValueError):
        HbarContext(0.0)
    assert as_hbar(HbarContext(0.5)) == 0.5


def test_overlap_unit_diagonal():
    a = PhasePoint([0.3, -1.0], [2.0, 0.5])
    assert abs(overlap(a, a) - 1) < 1e-15


def test_overlap_value():
    # p'' = 1, p' = 0, q = 0: exp(-1/4)
    assert abs(overlap(PhasePoint(1.0, 0.0), PhasePoint(0.0, 0.0)) - math.exp(-0.25)) < 1e-15


def test_overlap_matches_momentum_integral():
    a, b = PhasePoint(0.3, -1.0), PhasePoint(1.5, 2.0)
    for h in (1.0, 0.3):
        f = lambda k: np.conj(momentum_wavefunction(a, k, h)) * momentum_wavefunction(b, k, h)
        re = integrate.quad(lambda k: f(k).real, -15, 15, limit=200)[0]
        im = integrate.quad(lambda k: f(k).imag, -15, 15, limit=200)[0]
        assert abs(overlap(a, b, h) - (re + 1j * im)) < 1e-10


@given(coord, coord, coord, coord)
def test_overlap_hermitian_and_bounded(pa, qa, pb, qb):
    a, b = PhasePoint(pa, qa), PhasePoint(pb, qb)
    assert abs(overlap(a, b) - np.conj(overlap(b, a))) < 1e-14
    assert abs(overlap(a, b)) <= 1 + 1e-14


def test_overlap_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        overlap(PhasePoint(0.0), PhasePoint([0.0, 1.0]))


def test_moments():
    m = GroundStateMoments(1.0)
    assert m.second == 0.5 and m.fourth == 0.75
    assert m.m(3) == 0 and m.m(6) == 15 * 0.125


def test_lower_symbols():
    assert abs(lower_symbol_poly(3, 1.0) - 2.5) < 1e-15
    assert abs(lower_symbol_poly(2, PhasePoint(0.0, 7.0)) - 0.5) < 1e-15
    assert abs(lower_symbol_poly(4, 0.0) - 0.75) < 1e-15
    assert abs(lower_symbol_poly(2, 3.0, 1e-15) - (9 + 5e-16)) < 1e-15


def test_lower_symbol_matches_quadrature():
    p, h = 0.7, 0.4
    f = lambda k: k ** 5 * np.exp(-(k - p) ** 2 / h) / math.sqrt(math.pi * h)
    ref = integrate.quad(f, -10, 10)[0]
    assert abs(lower_symbol_poly(5, p, h) - ref) < 1e-12


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=7), st.floats(0.05, 3))
def test_symbol_inversion_roundtrip(coeffs, h):
    c = np.array(coeffs)
    back = symbol_of_operator(operator_for_symbol(c, h), h)
    assert np.allclose(back, c, atol=1e-9 * max(1.0, np.max(np.abs(c))) * 10 ** len(c))


def test_operator_for_quadratic_symbol():
    # symbol p^2 comes from the operator P^2 - hbar/2
    assert np.allclose(operator_for_symbol([0, 0, 1], 1.0), [-0.5, 0, 1])


def test_quartic_penalty_factor():
    assert quartic_penalty_factor(0.0, 4.0) == 0.75
    with pytest.raises(ValueError):
        quartic_penalty_factor(0.0, -1.0)
