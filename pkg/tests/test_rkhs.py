import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose
from scipy import special

from csk.coherent_states import PhasePoint, overlap
from csk.errors import DimensionMismatch, NoConvergence, PSDViolation
from csk.rkhs import (
    band_limit_kernel,
    banded_kernel,
    banded_kernel_quadrature,
    check_reproducing,
    example1_c_kernel,
    gram,
    inner_product_dual_check,
    kernel_axiom_report,
    kernel_table_csv,
    overlap_kernel,
    product_band_kernel,
    random_points,
    rank,
    rank_one_factorization_residual,
    reduce_restrict,
    reduce_scaled_limit,
    reduce_weighted,
)

# high-precision values of pi^{-1/2} int_{-d}^{d} exp(-(k-p'')^2/2 + ik(q''-q') - (k-p')^2/2) dk
BAND_ORACLE = [
    (1.0, (0.3, -1.0, 1.5, 2.0), 0.00328691445643823 - 0.178420361088369j),
    (0.5, (1.0, 1.0, -0.5, 0.2), 0.274306863263071 + 0.00860053409943741j),
    (2.0, (0.0, 0.0, 1.0, 1.0), 0.540456112469325 - 0.280923406569043j),
]

coord = st.floats(-3, 3)


@pytest.mark.parametrize("delta,pt,ref", BAND_ORACLE)
def test_band_kernel_oracle(delta, pt, ref):
    a, b = PhasePoint(pt[0], pt[1]), PhasePoint(pt[2], pt[3])
    assert abs(banded_kernel(delta)(a, b) - ref) < 1e-13
    assert abs(banded_kernel_quadrature(delta)(a, b) - ref) < 1e-12


def test_band_kernel_origin_erf():
    o = PhasePoint(0.0, 0.0)
    assert abs(banded_kernel(1.0)(o, o) - special.erf(1.0)) < 1e-15


def test_full_band_is_overlap():
    a, b = PhasePoint(0.4, -0.7), PhasePoint(-1.1, 2.2)
    assert abs(banded_kernel(math.inf)(a, b) - overlap(a, b)) < 1e-14
    assert abs(overlap_kernel()(a, b) - overlap(a, b)) < 1e-15


@given(coord, coord, coord, coord, st.floats(0.1, 4))
def test_band_kernel_hermitian_bounded(pa, qa, pb, qb, delta):
    k = banded_kernel(delta)
    a, b = PhasePoint(pa, qa), PhasePoint(pb, qb)
    assert abs(k(a, b) - np.conj(k(b, a))) < 1e-13
    assert abs(k(a, b)) ** 2 <= k(a, a).real * k(b, b).real + 1e-13


def test_gram_psd():
    pts = random_points(30, seed=3)
    g = gram(banded_kernel(0.7), pts)
    assert g.min_eigenvalue > -1e-12
    assert g.entries.shape == (30, 30)


def test_gram_detects_non_kernel():
    bad = overlap_kernel().scaled(-1.0)
    with pytest.raises(PSDViolation):
        gram(bad, random_points(5))


def test_product_kernel_factorizes():
    k2 = product_band_kernel(0.8, J=2)
    k1 = banded_kernel(0.8)
    a = PhasePoint([0.3, -0.4], [1.0, 0.2])
    b = PhasePoint([-0.6, 0.9], [0.0, -1.5])
    ref = k1(PhasePoint(0.3, 1.0), PhasePoint(-0.6, 0.0)) * k1(PhasePoint(-0.4, 0.2), PhasePoint(0.9, -1.5))
    assert abs(k2(a, b) - ref) < 1e-15


@pytest.mark.parametrize("kernel", [banded_kernel(1.0), overlap_kernel(), banded_kernel(0.5, hbar=0.3)],
                         ids=["band", "overlap", "band-hbar"])
def test_reproducing_identity(kernel):
    a, b = PhasePoint(0.3, -1.0), PhasePoint(0.8, 0.5)
    assert check_reproducing(kernel, a, b) < 1e-9


def test_reproducing_direct_route_for_plain_kernels():
    k = overlap_kernel()
    direct = k.__class__(k.fn, 1, ("plain",), bands=None)
    assert check_reproducing(direct, PhasePoint(0.3, -1.0), PhasePoint(0.8, 0.5)) < 1e-8


def test_reproducing_detects_misnormalization():
    k = banded_kernel(1.0).scaled(1.1)
    assert check_reproducing(k, PhasePoint(0.3, -1.0), PhasePoint(0.8, 0.5)) > 1e-3


def test_inner_product_two_forms():
    k = banded_kernel(1.0)
    centers = [PhasePoint(0.2, 0.1), PhasePoint(-0.5, 1.3), PhasePoint(0.9, -0.8)]
    s, i = inner_product_dual_check(k, [1.0, -0.5j, 0.3], centers)
    assert abs(s - i) < 1e-9 and s > 0


def test_weighted_reduction_oracle():
    w = lambda q: math.pi ** -0.25 * np.exp(-q * q / 2)
    red = reduce_weighted(overlap_kernel(), w, halfwidth=12.0)
    assert abs(red(PhasePoint(0.4, 0.0), PhasePoint(-0.3, 0.0)) - 2.21485853182013) < 1e-12
    assert abs(red(PhasePoint(1.0, 0.0), PhasePoint(1.0, 0.0)) - 1.52034690106628) < 1e-12


def test_restriction_ignores_q():
    red = reduce_restrict(banded_kernel(1.0), 0.7)
    a, b = PhasePoint(0.2, 5.0), PhasePoint(-0.4, -3.0)
    ref = banded_kernel(1.0)(PhasePoint(0.2, 0.7), PhasePoint(-0.4, 0.7))
    assert abs(red(a, b) - ref) < 1e-15
    with pytest.raises(DimensionMismatch):
        reduce_restrict(banded_kernel(1.0), [0.0, 1.0])


def test_scaled_limit_is_band_limit():
    lim = reduce_scaled_limit(banded_kernel, lambda d: math.sqrt(math.pi) / (2 * d),
                              [0.1, 0.05, 0.025, 0.0125])
    target = band_limit_kernel()
    for a, b in [(PhasePoint(0.3, -1.0), PhasePoint(1.5, 2.0)), (PhasePoint(0.0, 0.0), PhasePoint(-0.7, 0.4))]:
        assert abs(lim(a, b) - target(a, b)) < 1e-8


def test_scaled_limit_reports_failure():
    lim = reduce_scaled_limit(banded_kernel, lambda d: 1.0 / d, [1.0, 0.9, 0.8], tol=1e-14)
    with pytest.raises(NoConvergence):
        lim(PhasePoint(0.0, 0.0), PhasePoint(0.0, 0.0))


def test_rank_one_limits():
    pts = random_points(12, J=2, seed=5)
    assert rank(band_limit_kernel(2), pts) == 1
    assert rank(example1_c_kernel(1.3), pts) == 1
    assert rank_one_factorization_residual(example1_c_kernel(1.3), pts) < 1e-14
    assert rank(overlap_kernel(2), pts) == 12


def test_axiom_report():
    rep = kernel_axiom_report(banded_kernel(1.0), random_points(15))
    assert rep["hermiticity"] < 1e-14 and rep["min_eigenvalue"] > -1e-12 and rep["bound_excess"] < 1e-14


def test_csv_table():
    k = banded_kernel(1.0)
    a, b = PhasePoint(0.0, 0.0), PhasePoint(1.0, 0.5)
    text = kernel_table_csv(k, [(a, b)], header=["demo"])
    lines = text.splitlines()
    assert lines[0] == "# demo"
    assert lines[1].split(",")[-2:] == ["re", "im"]
    vals = [float(x) for x in lines[2].split(",")]
    assert abs(complex(vals[-2], vals[-1]) - k(a, b)) < 1e-15


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        banded_kernel(1.0)(PhasePoint([0.0, 0.0]), PhasePoint([0.0, 0.0]))
