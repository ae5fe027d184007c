import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from csk.constraint_symbols import (
    even_symbol,
    numeric_slope,
    phi_gamma,
    phi_gamma_approx,
    regularity_report,
    slope_constant,
    sweep_rows,
)
from csk.errors import InvalidGamma, UnsupportedPower

# high-precision values of pi^{-1/2} int k|k|^gamma exp(-(k-p)^2) dk
PHI_ORACLE = [
    (1.0, 0.5, 1.18770760338796),
    (0.3, -0.5, 0.302328846008550),
    (2.0, 1.0, 4.49961717793938),
    (-1.2, 1 / 3, -1.38058779279305),
    (0.7, 3.0, 2.39087785837906),
]

gammas = st.floats(-0.9, 3.0)


def _hyp1f1_oracle(p, gamma, hbar):
    # closed form in terms of Kummer's function
    k_o = 2 * special.gamma((gamma + 3) / 2) / math.sqrt(math.pi)
    return hbar ** (gamma / 2) * k_o * p * special.hyp1f1(-gamma / 2, 1.5, -p * p / hbar)


@pytest.mark.parametrize("p,gamma,ref", PHI_ORACLE)
@pytest.mark.parametrize("form", ["shifted_gaussian", "shifted_argument"])
def test_phi_oracle(p, gamma, ref, form):
    assert abs(phi_gamma(p, gamma, form=form) - ref) < 1e-12


@given(st.floats(-3, 3), gammas, st.floats(0.1, 2))
def test_phi_matches_kummer(p, gamma, hbar):
    ref = _hyp1f1_oracle(p, gamma, hbar)
    assert abs(phi_gamma(p, gamma, hbar) - ref) <= 1e-10 * max(1.0, abs(ref))


@given(st.floats(0, 3), gammas)
def test_phi_odd(p, gamma):
    assert abs(phi_gamma(p, gamma) + phi_gamma(-p, gamma)) < 1e-13


@given(gammas)
def test_phi_increasing(gamma):
    ps = np.linspace(-3, 3, 25)
    vals = [phi_gamma(p, gamma) for p in ps]
    assert np.all(np.diff(vals) > 0)


@given(st.floats(-2, 2), gammas, st.floats(0.2, 2))
def test_two_forms_agree(p, gamma, hbar):
    a = phi_gamma(p, gamma, hbar, form="shifted_gaussian")
    b = phi_gamma(p, gamma, hbar, form="shifted_argument")
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_even_gamma_is_polynomial():
    # gamma = 2: E[k^3] = p^3 + 3 p hbar/2
    for p, h in [(0.7, 1.0), (-1.3, 0.2)]:
        assert abs(phi_gamma(p, 2, h) - (p ** 3 + 1.5 * p * h)) < 1e-13
    assert abs(phi_gamma(1.3, 0.0) - 1.3) < 1e-14


def test_large_p_asymptote():
    for gamma in (-0.5, 0.5, 1.5):
        p = 8.0
        assert abs(phi_gamma(p, gamma) / (p * p ** gamma) - 1) < 5e-2


@pytest.mark.parametrize("gamma", [-0.5, 0.5, 1.0, 2.5])
@pytest.mark.parametrize("hbar", [1.0, 0.1])
def test_slope_formula_vs_numeric(gamma, hbar):
    prof = slope_constant(gamma, hbar)
    assert abs(numeric_slope(gamma, hbar) - prof.slope_at_zero) <= 1e-6 * prof.slope_at_zero
    assert prof.crossover == math.sqrt(hbar)


def test_slope_known_values():
    assert abs(slope_constant(0.0).k_o - 1.0) < 1e-15
    assert abs(slope_constant(2.0).k_o - 1.5) < 1e-15
    assert abs(slope_constant(1.0).k_o - 2 / math.sqrt(math.pi)) < 1e-15


@pytest.mark.parametrize("gamma", [-0.5, 0.5, 2.0])
def test_approx_within_factor_two(gamma):
    for p in np.linspace(-4, 4, 33):
        if p == 0:
            continue
        r = phi_gamma_approx(p, gamma) / phi_gamma(p, gamma)
        assert 0.5 < r < 2.0
    assert abs(phi_gamma_approx(40.0, gamma) / (40.0 * 40.0 ** gamma) - 1) < 1e-2


def test_approx_rejects_gamma_zero():
    with pytest.raises(InvalidGamma):
        phi_gamma_approx(1.0, 0.0)


def test_invalid_gamma():
    for g in (-1.0, -2.0, math.nan):
        with pytest.raises(InvalidGamma):
            phi_gamma(0.5, g)
    with pytest.raises(ValueError):
        phi_gamma(0.5, 0.5, form="other")


def test_even_symbols():
    assert even_symbol(2, 1.5, 0.4) == 1.5 ** 2 + 0.2
    assert abs(even_symbol(4, 0.0, 1.0) - 0.75) < 1e-15
    with pytest.raises(UnsupportedPower):
        even_symbol(6, 1.0)


def test_regularity_vanishing():
    rep = regularity_report(2.0, [1.0, 0.01, 0.0001])
    slopes = [r["slope_at_zero"] for r in rep["rows"]]
    np.testing.assert_allclose(slopes, [1.5, 0.015, 0.00015], rtol=1e-12)
    assert rep["trend"] == "vanishing" and rep["trend_consistent"] and rep["regular_for_all_hbar"]


def test_regularity_divergent_and_constant():
    rep = regularity_report(-0.5, [1.0, 0.1, 0.01])
    assert rep["trend"] == "divergent" and rep["trend_consistent"]
    assert regularity_report(0.0, [1.0, 0.5, 0.25])["trend"] == "constant"


def test_regularity_input_checks():
    with pytest.raises(ValueError):
        regularity_report(1.0, [1.0, 0.1])
    with pytest.raises(ValueError):
        regularity_report(1.0, [0.1, 1.0, 0.01])


def test_sweep_rows():
    rows = sweep_rows([0.5], [1.0], [0.0, 1.0])
    assert len(rows) == 2 and len(rows[0]) == 7
    assert abs(rows[1][3] - 1.18770760338796) < 1e-12
