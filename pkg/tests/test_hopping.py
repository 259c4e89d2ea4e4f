import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epdyn import (
    ConfigurationError,
    DomainError,
    HopConfig,
    PhysicalConstants,
    RegimeMismatchWarning,
    empirical_frequencies,
    energy_partition_check,
    ensemble_from_probabilities,
    kinematic_observables,
    simulate_hops,
)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        HopConfig(regime="other")
    with pytest.raises(ConfigurationError):
        HopConfig(steps=0)
    with pytest.raises(ConfigurationError):
        HopConfig(tau=0.0)
    with pytest.raises(ConfigurationError):
        HopConfig(regime="measurement", localization_threshold=0.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**31),
       st.integers(min_value=0, max_value=1000))
def test_trajectories_are_seed_deterministic(seed, tid):
    ensemble = ensemble_from_probabilities([2, 1, 1])
    config = HopConfig(steps=200, seed=seed, trajectory_id=tid)
    a = simulate_hops(ensemble, config)
    b = simulate_hops(ensemble, config)
    np.testing.assert_array_equal(a.indices, b.indices)


def test_distinct_trajectory_ids_give_distinct_streams():
    ensemble = ensemble_from_probabilities([1, 1])
    a = simulate_hops(ensemble, HopConfig(steps=500, seed=1, trajectory_id=0))
    b = simulate_hops(ensemble, HopConfig(steps=500, seed=1, trajectory_id=1))
    assert not np.array_equal(a.indices, b.indices)


def test_chaos_regime_never_freezes():
    ensemble = ensemble_from_probabilities([1, 1])
    traj = simulate_hops(ensemble, HopConfig(steps=100, seed=4))
    assert traj.frozen_at is None
    assert traj.steps == 100


def _measurement_ensemble():
    coords = np.linspace(-1.0, 1.0, 11)
    dx = coords[1] - coords[0]
    rho_point = np.zeros(11)
    rho_point[5] = 1.0 / dx
    rho_flat = np.full(11, 1.0 / (11 * dx))
    return ensemble_from_probabilities(
        [1, 1], centroids=[0.0, 0.0], densities=[rho_point, rho_flat],
        coordinates=coords, measure=dx,
    )


def test_measurement_regime_freezes_on_localized_draw():
    ensemble = _measurement_ensemble()
    config = HopConfig(regime="measurement", steps=50, seed=2,
                       localization_threshold=0.05, trajectory_id=3)
    traj = simulate_hops(ensemble, config)
    assert traj.frozen_at is not None
    tail = traj.indices[traj.frozen_at - 1:]
    assert np.all(tail == tail[0])
    assert tail[0] == 0  # the localized realisation


def test_measurement_frequency_stats_warn():
    ensemble = _measurement_ensemble()
    config = HopConfig(regime="measurement", steps=50, seed=2,
                       localization_threshold=0.05)
    traj = simulate_hops(ensemble, config)
    with pytest.warns(RegimeMismatchWarning):
        empirical_frequencies(traj, ensemble)


def test_empirical_frequencies_count_correctly():
    ensemble = ensemble_from_probabilities([1, 3], centroids=[0.0, 1.0])
    traj = simulate_hops(ensemble, HopConfig(steps=4000, seed=8))
    stats = empirical_frequencies(traj, ensemble)
    assert stats.counts.sum() == 4000
    assert stats.frequencies.sum() == pytest.approx(1.0)
    assert abs(stats.frequencies[1] - 0.75) < 0.05


def test_kinematic_observables_scaling():
    ensemble = ensemble_from_probabilities([1, 1], centroids=[0.0, 1.0])
    config = HopConfig(steps=2000, seed=5, tau=0.5)
    stats = empirical_frequencies(simulate_hops(ensemble, config), ensemble)
    consts = PhysicalConstants()
    kin = kinematic_observables(stats, consts, config)
    assert kin.energy == pytest.approx(consts.h / 0.5)
    assert kin.momentum == pytest.approx(consts.h / stats.mean_jump_length)
    if math.isfinite(kin.consistency_ratio):
        assert kin.consistency_ratio == pytest.approx(1.0)


def test_energy_partition_rest_limit():
    rest, motion, lhs, rhs, residual = energy_partition_check(2.0, 0.0, 1.0)
    assert rest == pytest.approx(2.0)
    assert motion == 0.0
    assert residual == 0.0


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.0, max_value=0.999, allow_nan=False))
def test_energy_partition_identity_holds(v):
    *_, lhs, rhs, residual = energy_partition_check(1.5, v, 1.0)
    assert residual <= 1e-9 * rhs


def test_energy_partition_domain():
    with pytest.raises(DomainError):
        energy_partition_check(1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        energy_partition_check(1.0, -0.1, 1.0)
