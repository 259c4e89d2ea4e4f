import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epdyn import (
    ActionLedger,
    ConfigurationError,
    Hamiltonian1D,
    NodeSingularityError,
    PhysicalConstants,
    QuantizationRule,
    SpaceTimeField,
    StepSizeError,
    WaveField,
    assemble_schrodinger,
    build_grid,
    conservation_report,
    discrete_energy,
    discrete_momentum,
    full_spectrum,
    ledger_advance,
    wave_action,
)


def test_ledger_decrements_one_quantum_per_cycle():
    ledger = ActionLedger(action=10.0, quantum=2.0)
    after = ledger_advance(ledger, cycles=3)
    assert after.action == pytest.approx(4.0)
    assert after.cycle_count == 3
    assert after.history == (-2.0, -2.0, -2.0)
    with pytest.raises(ConfigurationError):
        ledger_advance(ledger, cycles=0)


def test_wave_action_pointwise():
    amps = np.array([1.0 + 1j, 2.0])
    np.testing.assert_allclose(wave_action(3.0, amps), 3.0 * amps)


def test_rule_coefficient():
    assert QuantizationRule(quantum=2.0, wave_like=True).coefficient == 2.0j
    assert QuantizationRule(quantum=2.0, wave_like=False).coefficient == 2.0
    with pytest.raises(ConfigurationError):
        QuantizationRule(quantum=0.0)


def _plane_wave(k, omega, dx=0.01, dt=0.005, n=32, n_t=5):
    x = np.arange(n) * dx
    t = np.arange(n_t) * dt
    return SpaceTimeField(np.exp(1j * (k * x[None, :] - omega * t[:, None])), dx=dx, dt=dt)


def test_plane_wave_momentum_and_energy():
    hbar = 1.0
    rule = QuantizationRule(quantum=hbar, wave_like=True)
    field = _plane_wave(k=2.0, omega=1.5)
    p = discrete_momentum(field, rule, x_index=8, t_index=2)
    e = discrete_energy(field, rule, x_index=8, t_index=2)
    assert p.real == pytest.approx(2.0, rel=1e-3)
    assert e.real == pytest.approx(1.5, rel=1e-3)


def test_squared_momentum_sign():
    # p^2 of a plane wave must be +(hbar k)^2, fixing the -hbar^2 psi''/psi sign
    rule = QuantizationRule(quantum=1.0, wave_like=True)
    field = _plane_wave(k=2.0, omega=1.5)
    p2 = discrete_momentum(field, rule, x_index=8, t_index=2, squared=True)
    assert p2.real == pytest.approx(4.0, rel=1e-3)
    assert p2.real > 0


@settings(max_examples=10, deadline=None)
@given(st.floats(min_value=0.5, max_value=3.0, allow_nan=False))
def test_momentum_error_scales_with_spacing_squared(k):
    rule = QuantizationRule(quantum=1.0, wave_like=True)
    errs = []
    for dx in (0.04, 0.02):
        field = _plane_wave(k=k, omega=1.0, dx=dx)
        p = discrete_momentum(field, rule, x_index=8, t_index=2)
        errs.append(abs(p - k))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_node_singularity_guard():
    rule = QuantizationRule(quantum=1.0)
    vals = np.ones((3, 5), dtype=complex)
    vals[1, 2] = 0.0
    field = SpaceTimeField(vals, dx=0.1, dt=0.1)
    with pytest.raises(NodeSingularityError):
        discrete_momentum(field, rule, x_index=2, t_index=1)


def test_boundary_requires_one_sided():
    rule = QuantizationRule(quantum=1.0)
    field = _plane_wave(k=1.0, omega=1.0)
    with pytest.raises(ConfigurationError):
        discrete_momentum(field, rule, x_index=0, t_index=2)
    p = discrete_momentum(field, rule, x_index=0, t_index=2, one_sided=True)
    assert p.real == pytest.approx(1.0, rel=0.05)


def _propagator(n=100):
    grid = build_grid(n, 0.0, 1.0)
    consts = PhysicalConstants()
    return grid, consts, assemble_schrodinger(grid, np.zeros(n), consts)


def test_propagator_preserves_norm():
    grid, consts, prop = _propagator()
    x = grid.points
    psi = WaveField.normalize(np.exp(-((x - 0.5) ** 2) / 0.01), measure=grid.spacing)
    out = prop.step(psi, dt=1e-5, n_steps=50)
    assert isinstance(out, WaveField)
    assert out.norm() == pytest.approx(1.0, abs=1e-12)


def test_eigenstate_acquires_pure_phase():
    grid, consts, prop = _propagator()
    spectrum = prop.stationary_spectrum()
    e0, psi0 = spectrum.eigenvalues[0], spectrum.eigenstates[0].amplitudes
    dt, n = 2e-5, 20
    out = prop.step(psi0, dt=dt, n_steps=n)
    # Cayley phase per step: -2 atan(E dt / 2 hbar), not exactly -E dt / hbar
    theta = -2.0 * math.atan(e0 * dt / (2.0 * consts.hbar))
    np.testing.assert_allclose(out, np.exp(1j * n * theta) * psi0, atol=1e-12)


def test_step_size_budget_enforced():
    _, _, prop = _propagator()
    with pytest.raises(StepSizeError) as err:
        prop.step(np.ones(100, dtype=complex), dt=1.0)
    assert err.value.suggested_dt < 1.0


def test_conservation_report_quanta_scaling():
    grid = build_grid(200, -8.0, 8.0)
    consts = PhysicalConstants(hbar=0.5, mass=2.0)
    ham = Hamiltonian1D(grid=grid, potential=0.5 * grid.points**2, constants=consts)
    psi = full_spectrum(ham).eigenstates[0]
    report = conservation_report(psi, ham)
    assert report["total"] == pytest.approx(report["kinetic"] + report["potential"])
    scale = consts.mass / consts.hbar**2
    assert report["q_squared"] == pytest.approx(scale * report["kinetic"])
