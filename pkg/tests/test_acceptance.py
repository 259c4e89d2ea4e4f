"""Acceptance gate: one test per criterion, one printed pass/fail line each.

Tolerances and runtime budgets live inside the corresponding check in
epdyn.verify; a test here fails iff its check reports failure.
"""

from epdyn import verify


def _run(check):
    result = check()
    print(result.summary_line())
    assert result.passed, result.summary_line()


def test_criterion_01_ep_roots_match_dense_oracle():
    _run(verify.check_ep_oracle_equivalence)


def test_criterion_02_root_count_completeness():
    _run(verify.check_root_completeness)


def test_criterion_03_probabilities_sum_to_one_exactly():
    _run(verify.check_probability_normalization)


def test_criterion_04_hop_frequencies_converge():
    _run(verify.check_hop_frequency_convergence)


def test_criterion_05_measurement_freeze_follows_geometric_law():
    _run(verify.check_measurement_regime)


def test_criterion_06_energy_partition_identity():
    _run(verify.check_energy_partition_identity)


def test_criterion_07_dispersion_second_order_convergence():
    _run(verify.check_dispersion_convergence)


def test_criterion_08_energy_split_matches_eigenvalue():
    _run(verify.check_conservation_identity)


def test_criterion_09_propagator_conserves_norm_and_energy():
    _run(verify.check_propagator_unitarity)


def test_criterion_10_universal_family_reductions():
    _run(verify.check_universal_reduction)


def test_criterion_11_hamilton_jacobi_residuals():
    _run(verify.check_hj_residuals)


def test_criterion_12_seeded_cli_reruns_are_byte_identical():
    _run(verify.check_determinism)


def test_full_suite_runtime_budget():
    import time

    t0 = time.perf_counter()
    results = verify.run_suite()
    elapsed = time.perf_counter() - t0
    assert all(r.passed for r in results), \
        [r.summary_line() for r in results if not r.passed]
    assert elapsed < 120.0, f"verify suite took {elapsed:.1f}s, budget 120s"
