import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose
from scipy import linalg, stats

from csk.errors import (
    DimensionMismatch,
    FirstClassViolation,
    InvalidGamma,
    NotClosedAlgebra,
    NotCompact,
)
from csk.projectors import (
    ConstraintFunctionSpec,
    MatrixConstraintSet,
    SpectralBand,
    alternating_average_projector,
    band_for_constraint,
    check_gauge_invariance,
    group_average_projector,
    preimage_band,
    sandwich_hamiltonian,
    sandwich_residual,
    spin_matrices,
)


def _null_projector(mats):
    ns = linalg.null_space(np.vstack(mats))
    return ns @ ns.conj().T


def test_spectral_band():
    with pytest.raises(ValueError):
        SpectralBand(1.0, 1.0)
    b = SpectralBand.symmetric(2.0)
    assert_allclose(b.indicator([-3, -1, 0, 1.9, 2]), [0, 1, 1, 1, 0])
    assert SpectralBand(-np.inf, np.inf).is_full_line


def test_constraint_spec_validation():
    with pytest.raises(InvalidGamma):
        ConstraintFunctionSpec.odd_power_law(-1.0)
    for n in (0, 3, 2.5):
        with pytest.raises(ValueError):
            ConstraintFunctionSpec.even_power(n)


@pytest.mark.parametrize("spec", [
    ConstraintFunctionSpec.linear(),
    ConstraintFunctionSpec.odd_power_law(0.5),
    ConstraintFunctionSpec.odd_power_law(-0.5),
    ConstraintFunctionSpec.even_power(4),
])
@pytest.mark.parametrize("delta", [0.3, 1.0, 2.5])
def test_band_for_constraint_is_symmetric_preimage(spec, delta):
    band = band_for_constraint(spec, delta)
    assert_allclose([band.lo, band.hi], [-delta, delta], rtol=1e-12)
    # brute-force preimage on a grid
    k = np.linspace(-4, 4, 8001)
    inside = np.abs(spec(k)) < spec.threshold(delta)
    assert_allclose([k[inside].min(), k[inside].max()], [-delta, delta], atol=1e-3)


def test_preimage_band_roundtrip():
    spec = ConstraintFunctionSpec.odd_power_law(1.0)
    band = preimage_band(spec, 4.0)
    assert_allclose([band.lo, band.hi], [-2, 2], rtol=1e-12)


def test_u1_single_generator():
    phi = np.diag([0.0, 1.0, 2.0, -1.0])
    E = group_average_projector(MatrixConstraintSet([phi]))
    assert_allclose(E, np.diag([1.0, 0, 0, 0]), atol=1e-12)


def test_zero_generator_gives_identity():
    E = group_average_projector(MatrixConstraintSet([np.zeros((3, 3))]))
    assert_allclose(E, np.eye(3), atol=1e-15)


def test_spin_one_has_no_invariant():
    E = group_average_projector(MatrixConstraintSet(spin_matrices(1.0)))
    assert np.max(np.abs(E)) < 1e-12
    E2 = alternating_average_projector(MatrixConstraintSet(spin_matrices(1.0)))
    assert np.max(np.abs(E2)) < 1e-10


def test_spin_matrices_commutation():
    jx, jy, jz = spin_matrices(1.5)
    assert_allclose(jx @ jy - jy @ jx, 1j * jz, atol=1e-12)
    assert_allclose(jx @ jx + jy @ jy + jz @ jz, 1.5 * 2.5 * np.eye(4), atol=1e-12)


def test_su2_on_two_spin_halves_singlet():
    s = [m / 1 for m in spin_matrices(0.5)]
    I2 = np.eye(2)
    total = [np.kron(m, I2) + np.kron(I2, m) for m in s]
    cset = MatrixConstraintSet(total)
    E = group_average_projector(cset)
    E2 = alternating_average_projector(cset)
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    assert_allclose(E, np.outer(singlet, singlet), atol=1e-10)
    assert_allclose(E2, E, atol=1e-9)
    for tau in ([0.3, -1.1, 2.0], [5.0, 0.0, 0.1]):
        assert check_gauge_invariance(E, cset, tau) < 1e-12


def test_commuting_pair_matches_null_space():
    rng = np.random.default_rng(1)
    Q = stats.unitary_group.rvs(5, random_state=rng)
    a = Q @ np.diag([0, 0, 1, 2, 1]) @ Q.conj().T
    b = Q @ np.diag([0, 3, 0, 1, -1]) @ Q.conj().T
    cset = MatrixConstraintSet([a, b])
    assert_allclose(group_average_projector(cset), _null_projector([a, b]), atol=1e-10)
    assert_allclose(alternating_average_projector(cset), _null_projector([a, b]), atol=1e-9)


@given(st.integers(0, 2 ** 31 - 1))
def test_unitary_covariance(seed):
    rng = np.random.default_rng(seed)
    Q = stats.unitary_group.rvs(4, random_state=rng)
    phi = np.diag(rng.integers(-2, 3, size=4).astype(float))
    E = group_average_projector(MatrixConstraintSet([phi]))
    E_rot = group_average_projector(MatrixConstraintSet([Q @ phi @ Q.conj().T]))
    assert_allclose(E_rot, Q @ E @ Q.conj().T, atol=1e-10)
    assert_allclose(E @ E, E, atol=1e-10)


def test_incommensurate_is_not_compact():
    with pytest.raises(NotCompact):
        group_average_projector(MatrixConstraintSet([np.diag([0.0, 1.0, np.sqrt(2)])]))


def test_not_closed_algebra():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.diag([1.0, 0.0]).astype(complex)
    with pytest.raises(NotClosedAlgebra):
        MatrixConstraintSet([x, y])


def test_constructor_validation():
    with pytest.raises(ValueError):
        MatrixConstraintSet([np.array([[0, 1], [0, 0]])])
    with pytest.raises(DimensionMismatch):
        MatrixConstraintSet([np.eye(2), np.eye(3)])
    with pytest.raises(ValueError):
        MatrixConstraintSet([])


def test_sandwich_first_class():
    phi = np.diag([0.0, 1.0, 1.0, 2.0])
    cset = MatrixConstraintSet([phi])
    E = group_average_projector(cset)
    H = np.diag([3.0, -1.0, 0.5, 2.0])
    H[1, 2] = H[2, 1] = 0.7
    assert_allclose(sandwich_hamiltonian(E, H, cset), E @ H @ E)
    assert sandwich_residual(E, H, 1.3) < 1e-12
    bad = H.copy()
    bad[0, 1] = bad[1, 0] = 0.4
    with pytest.raises(FirstClassViolation):
        sandwich_hamiltonian(E, bad, cset)
    # negative control: the residual detects leakage out of the constraint subspace
    assert sandwich_residual(E, bad, 1.3) > 1e-2


def test_json_roundtrip(tmp_path):
    cset = MatrixConstraintSet(spin_matrices(1.0))
    data = cset.to_json()
    path = tmp_path / "gens.json"
    path.write_text(json.dumps(data))
    for src in (data, json.dumps(data), str(path), path):
        back = MatrixConstraintSet.from_json(src)
        for g, h in zip(back.generators, cset.generators):
            assert_allclose(g, h)


def test_json_flat_layout_and_errors():
    flat = {"dimension": 2, "generators": [[[0, 0], [1, 0], [1, 0], [0, 0]]]}
    assert len(MatrixConstraintSet.from_json(flat)) == 1
    with pytest.raises(DimensionMismatch):
        MatrixConstraintSet.from_json({"dimension": 3, "generators": [[[0, 0], [1, 0], [1, 0], [0, 0]]]})
    with pytest.raises(ValueError):
        MatrixConstraintSet.from_json({"dimension": 1, "generators": [[[0, 0, 0]]]})


def test_gauge_invariance_dimension_check():
    cset = MatrixConstraintSet([np.eye(2)])
    with pytest.raises(DimensionMismatch):
        check_gauge_invariance(np.eye(3), cset, [0.1])
