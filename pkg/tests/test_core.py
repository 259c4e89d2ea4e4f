import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epdyn import (
    ConfigurationError,
    Grid,
    Hamiltonian1D,
    HermitianOperator,
    NormalizationError,
    OracleScaleError,
    PhysicalConstants,
    WaveField,
    assemble_existence,
    build_grid,
    build_kinetic,
    expectation_energy,
    full_spectrum,
)


def test_grid_spacing_and_points():
    grid = build_grid(5, 0.0, 1.0)
    assert grid.spacing == pytest.approx(0.25)
    np.testing.assert_allclose(grid.points, [0.0, 0.25, 0.5, 0.75, 1.0])


def test_grid_rejects_bad_bounds():
    with pytest.raises(ConfigurationError):
        Grid(n=1, min=0.0, max=1.0)
    with pytest.raises(ConfigurationError):
        Grid(n=4, min=1.0, max=0.0)


def test_constants_require_positive_values():
    with pytest.raises(ConfigurationError):
        PhysicalConstants(hbar=-1.0)
    assert PhysicalConstants(hbar=2.0).h == pytest.approx(4.0 * math.pi)


def test_hermitian_operator_rejects_non_hermitian():
    with pytest.raises(ConfigurationError):
        HermitianOperator([[0.0, 1.0], [0.0, 0.0]])


def test_hermitian_operator_rejects_non_square():
    with pytest.raises(ConfigurationError):
        HermitianOperator(np.zeros((2, 3)))


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=2**31))
def test_symmetrized_random_matrix_is_always_accepted(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = 0.5 * (a + a.conj().T)
    op = HermitianOperator(h)
    assert np.allclose(op.matrix, op.matrix.conj().T)
    evals = np.linalg.eigvalsh(op.matrix)
    assert np.all(np.isreal(evals))


def test_wavefield_norm_and_normalize():
    field = WaveField.normalize([1.0, 1.0, 1.0, 1.0], measure=0.25)
    assert field.norm() == pytest.approx(1.0)
    with pytest.raises(NormalizationError):
        WaveField.normalize(np.zeros(3))
    with pytest.raises(NormalizationError):
        WaveField([1.0, 1.0], normalized=True)


def test_kinetic_matches_box_spectrum():
    # hard-wall box: E_k = 2 coef (1 - cos(k pi / n+1)) for the discrete stencil
    grid = build_grid(50, 0.0, 1.0)
    consts = PhysicalConstants()
    ham = Hamiltonian1D(grid=grid, potential=np.zeros(grid.n), constants=consts)
    evals = full_spectrum(ham).eigenvalues
    coef = consts.hbar**2 / (2.0 * consts.mass * grid.spacing**2)
    k = np.arange(1, grid.n + 1)
    exact = 2.0 * coef * (1.0 - np.cos(k * math.pi / (grid.n + 1)))
    np.testing.assert_allclose(evals, np.sort(exact), rtol=1e-12)


def test_periodic_kinetic_has_constant_mode():
    grid = build_grid(32, 0.0, 1.0)
    op = build_kinetic(grid, PhysicalConstants(), bc="periodic")
    ones = np.ones(grid.n)
    assert np.linalg.norm(op @ ones) < 1e-12


def test_existence_problem_dimension_and_flattening():
    h_e = np.diag([1.0, 2.0])
    h_g = np.diag([10.0, 20.0, 30.0])
    coupling = np.zeros((2, 3))
    problem = assemble_existence(h_e, h_g, coupling)
    assert problem.dimension == 6
    # q-major flattening: diagonal of the full operator is e_i + g_j
    diag = np.diag(problem.full_operator.matrix).real
    np.testing.assert_allclose(diag, [11, 21, 31, 12, 22, 32])


def test_existence_problem_shape_validation():
    with pytest.raises(ConfigurationError):
        assemble_existence(np.eye(2), np.eye(3), np.zeros((3, 2)))


def test_uncoupled_spectrum_is_minkowski_sum():
    rng = np.random.default_rng(7)
    a = rng.standard_normal((3, 3))
    b = rng.standard_normal((4, 4))
    h_e, h_g = 0.5 * (a + a.T), 0.5 * (b + b.T)
    problem = assemble_existence(h_e, h_g, np.zeros((3, 4)))
    evals = full_spectrum(problem).eigenvalues
    ea = np.linalg.eigvalsh(h_e)
    eb = np.linalg.eigvalsh(h_g)
    expected = np.sort(np.add.outer(ea, eb).ravel())
    np.testing.assert_allclose(evals, expected, atol=1e-10)


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=2**31))
def test_minkowski_sum_property(seed):
    rng = np.random.default_rng(seed)
    na, nb = int(rng.integers(2, 5)), int(rng.integers(2, 5))
    a = rng.standard_normal((na, na))
    b = rng.standard_normal((nb, nb))
    problem = assemble_existence(0.5 * (a + a.T), 0.5 * (b + b.T),
                                 np.zeros((na, nb)))
    evals = full_spectrum(problem).eigenvalues
    expected = np.sort(np.add.outer(np.linalg.eigvalsh(0.5 * (a + a.T)),
                                    np.linalg.eigvalsh(0.5 * (b + b.T))).ravel())
    np.testing.assert_allclose(evals, expected, atol=1e-9)


def test_oracle_cap_enforced(monkeypatch):
    op = HermitianOperator(np.eye(8))
    with pytest.raises(OracleScaleError):
        full_spectrum(op, cap=4)
    monkeypatch.setenv("EPDYN_ORACLE_CAP", "4")
    with pytest.raises(OracleScaleError):
        full_spectrum(op)
    assert len(full_spectrum(op, cap=8)) == 8


def test_expectation_energy_matches_matrix_element():
    grid = build_grid(120, -6.0, 6.0)
    consts = PhysicalConstants()
    ham = Hamiltonian1D(grid=grid, potential=0.5 * grid.points**2, constants=consts)
    spectrum = full_spectrum(ham)
    for e, psi in list(spectrum)[:4]:
        kinetic, v_psi, total = expectation_energy(psi, ham)
        assert total == pytest.approx(e, rel=1e-10)
        assert kinetic > 0 and v_psi > 0


def test_expectation_energy_rejects_unnormalized():
    grid = build_grid(16, 0.0, 1.0)
    ham = Hamiltonian1D(grid=grid, potential=np.zeros(16),
                        constants=PhysicalConstants())
    with pytest.raises(NormalizationError):
        expectation_energy(np.ones(16), ham)
