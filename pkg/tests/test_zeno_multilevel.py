"""Three-level leakage defect and the four-level protocol."""

import math

import numpy as np
import pytest

from zenolock import hilbert as h
from zenolock import zeno_multilevel as zm
from zenolock import zeno_two_level as z2


def four_level_small(delta_1=1.0, delta_2=0.5, n=2, cycle=0.02, final=0.2):
    return zm.four_level_config_from_deltas(delta_1, delta_2, cycle_time=cycle,
                                            final_time=final, photon_number=n)


class TestHamiltonians:
    def test_three_level_hermitian(self):
        config = zm.three_level_config(photon_number=3)
        assert zm.build_three_level_hamiltonian(config).hermitian

    def test_three_level_conserves_both_numbers(self):
        config = zm.three_level_config(photon_number=2)
        ham = zm.build_three_level_hamiltonian(config)
        basis = ham.basis
        c1, c2 = config.fock_cutoffs
        n1 = h.occupation_labels(basis, [[0, 1, 0], [0, 1, 0],
                                         list(range(c1 + 1)), [0] * (c2 + 1)])
        n2 = h.occupation_labels(basis, [[0, 0, 1], [0, 0, 1],
                                         [0] * (c1 + 1), list(range(c2 + 1))])
        for labels in (n1, n2):
            number = h.OperatorMatrix(basis, np.diag(labels.astype(complex)),
                                      hermitian=True)
            assert h.commutator_norm(ham, number) < 1e-12

    def test_three_level_identical_atoms_initial_state_stationary_uncoupled(self):
        config = zm.three_level_config(photon_number=2)
        ham = zm.build_three_level_hamiltonian(config, coupled=False)
        state = zm.initial_state_three(config)
        evolved = h.evolve(state, ham, 0.37)
        # identical atoms: both subradiant halves pick up pure phases
        populations = np.abs(evolved.amplitudes) ** 2
        np.testing.assert_allclose(populations, np.abs(state.amplitudes) ** 2,
                                   atol=1e-12)

    def test_four_level_hermitian_and_doubly_conserving(self):
        config = four_level_small()
        ham = zm.build_four_level_hamiltonian(config)
        assert ham.hermitian
        basis = ham.basis
        c1, c2 = config.fock_cutoffs
        n1 = h.occupation_labels(basis, [[0, 0, 1, 0], [0, 0, 1, 0],
                                         list(range(c1 + 1)), [0] * (c2 + 1)])
        n2 = h.occupation_labels(basis, [[0, 0, 0, 1], [0, 0, 0, 1],
                                         [0] * (c1 + 1), list(range(c2 + 1))])
        for labels in (n1, n2):
            number = h.OperatorMatrix(basis, np.diag(labels.astype(complex)),
                                      hermitian=True)
            assert h.commutator_norm(ham, number) < 1e-12

    def test_four_level_has_no_cross_matrix_elements(self):
        config = four_level_small()
        ham = zm.build_four_level_hamiltonian(config)
        basis = ham.basis
        # any <E1 paired with G2| H |...> exchange: E1 <-> G2 or E2 <-> G1
        c1, c2 = config.fock_cutoffs
        for (upper, lower) in ((zm.E1, zm.G2), (zm.E2, zm.G1)):
            for m1 in range(c1):
                col = basis.index([lower, zm.G1, m1 + 1, 0])
                row = basis.index([upper, zm.G1, m1, 0])
                assert ham.matrix[row, col] == 0.0
            for m2 in range(c2):
                col = basis.index([lower, zm.G1, 0, m2 + 1])
                row = basis.index([upper, zm.G1, 0, m2])
                assert ham.matrix[row, col] == 0.0

    def test_block_evolver_matches_dense(self):
        config = four_level_small(n=2)
        ham = zm.build_four_level_hamiltonian(config)
        evolver = h.BlockEvolver(ham, zm.four_level_labels(config))
        state = zm.initial_state_four(config)
        injected = h.replace_mode_state(h.replace_mode_state(state, 2, 2), 3, 2)
        for t in (0.01, 0.4):
            dense = h.evolve(injected, ham, t)
            blocked = evolver.evolve(injected, t)
            np.testing.assert_allclose(blocked.amplitudes, dense.amplitudes, atol=1e-10)

    def test_resonance_bookkeeping(self):
        config = four_level_small(delta_1=0.7, delta_2=0.3)
        assert config.delta(1) == pytest.approx(0.7)
        assert config.delta(2) == pytest.approx(0.3)
        assert config.mode_detunings() == pytest.approx((0.0, 0.0), abs=1e-12)
        assert config.clock_frequency() == pytest.approx(10.0)


class TestInitialStates:
    def test_normalized(self):
        assert zm.initial_state_three(zm.three_level_config()).norm() == pytest.approx(1.0, abs=1e-15)
        assert zm.initial_state_four(four_level_small()).norm() == pytest.approx(1.0, abs=1e-15)

    def test_halves_antisymmetric_under_exchange(self):
        config = four_level_small()
        state = zm.initial_state_four(config)
        basis = state.basis
        swapped = np.zeros_like(state.amplitudes)
        for i, amp in enumerate(state.amplitudes):
            a, b, m1, m2 = basis.occupations(i)
            swapped[basis.index([b, a, m1, m2])] = amp
        np.testing.assert_allclose(swapped, -state.amplitudes, atol=1e-15)

    def test_manifold_halves_are_orthogonal(self):
        config = four_level_small()
        basis = zm.four_level_basis(config)
        half_1 = zm._pair_superposition(basis, [(zm.E1, zm.G1)], (0, 0))
        half_2 = zm._pair_superposition(basis, [(zm.E2, zm.G2)], (0, 0))
        assert abs(half_1.overlap(half_2)) == 0.0
        full = zm.initial_state_four(config)
        assert abs(full.overlap(half_1)) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


class TestLeakage:
    def test_three_level_leaks(self):
        config = zm.three_level_config(coupling=2.0, photon_number=8)
        assert zm.three_level_leakage(config) > 1e-6

    def test_four_level_does_not(self):
        config = four_level_small(delta_1=0.0, delta_2=0.0, n=8)
        tau_m = z2.half_flop_time(2.0, 8)
        resonant = zm.FourLevelConfig(
            mode_frequencies=config.mode_frequencies, atom_a=config.atom_a,
            atom_b=config.atom_b, coupling=2.0, photon_number=8,
            free_interval=tau_m, measure_interval=tau_m, final_time=2 * tau_m)
        assert zm.four_level_leakage(resonant) < 1e-12

    def test_vacuum_modes_cannot_be_absorbed(self):
        config = zm.three_level_config(coupling=2.0, photon_number=8)
        assert zm.three_level_leakage(config, photon_number=0) < 1e-12

    def test_ordering_over_parameter_sweep(self):
        for n in (1, 2, 4, 8):
            for scale in (0.5, 1.0, 1.5):
                tau_m = scale * z2.half_flop_time(2.0, n)
                three = zm.three_level_config(coupling=2.0, photon_number=n,
                                              measure_interval=tau_m)
                four = four_level_small(0.0, 0.0, n=n)
                assert zm.three_level_leakage(three) > 1e-6
                assert zm.four_level_leakage(four, photon_number=n,
                                             measure_interval=tau_m) < 1e-12


class TestClosedForms:
    def test_equal_splittings_match_two_level_form(self):
        assert zm.pe_four_level(2.0, 2.0, 0.001) == pytest.approx(
            z2.pe_analytic(2.0, 0.001), rel=1e-12)

    def test_zero_splittings_survive(self):
        forms = zm.ps_four_level(0.0, 0.0, 0.01, 1e-4, 50.0)
        assert forms.product_form == 1.0
        assert forms.exponential_form == 1.0

    def test_reference_value(self):
        assert zm.pe_four_level(2.0, 0.0, 0.001) == pytest.approx(2e-6, rel=1e-12)

    def test_single_manifold_weights_recover_two_level_error(self):
        assert zm.pe_four_level(1.7, 0.0, 0.003, weights=(1.0, 0.0)) == pytest.approx(
            z2.pe_analytic(1.7, 0.003), rel=1e-12)

    def test_out_of_regime(self):
        with pytest.raises(zm.OutOfRegimeError):
            zm.pe_four_level(40.0, 40.0, 1.0)


class TestProtocol:
    def test_compiled_matches_stepwise(self):
        config = four_level_small()
        compiled = zm.run_four_level_protocol(config, method="compiled")
        stepwise = zm.run_four_level_protocol(config, method="stepwise")
        np.testing.assert_allclose(compiled.p_success, stepwise.p_success, atol=1e-10)
        np.testing.assert_allclose(compiled.final_state.amplitudes,
                                   stepwise.final_state.amplitudes, atol=1e-10)

    def test_matches_exponential_form(self):
        config = zm.four_level_config_from_deltas(2.0, 2.0, cycle_time=0.002,
                                                  final_time=0.5, photon_number=4)
        trace = zm.run_four_level_protocol(config)
        np.testing.assert_allclose(trace.p_success[1:], trace.analytic_p_s[1:],
                                   rtol=0.02)

    def test_per_cycle_error_matches_closed_form(self):
        config = zm.four_level_config_from_deltas(2.0, 1.0, cycle_time=0.002,
                                                  final_time=0.1, photon_number=4)
        trace = zm.run_four_level_protocol(config)
        expected = zm.pe_four_level(2.0, 1.0, config.free_interval)
        assert trace.p_error_per_cycle[1] == pytest.approx(expected, rel=0.02)

    def test_zero_splittings_survive(self):
        config = zm.four_level_config_from_deltas(0.0, 0.0, cycle_time=0.01,
                                                  final_time=0.3, photon_number=2)
        trace = zm.run_four_level_protocol(config)
        np.testing.assert_allclose(trace.p_success, 1.0, atol=1e-10)

    def test_branch_probabilities_sum_to_one(self):
        config = four_level_small()
        drift = zm.build_four_level_hamiltonian(config, coupled=False)
        coupled = zm.build_four_level_hamiltonian(config, coupled=True)
        evolver = h.BlockEvolver(coupled, zm.four_level_labels(config))
        state = h.evolve(zm.initial_state_four(config), drift, config.free_interval)
        state = h.replace_mode_state(state, 2, config.photon_number)
        state = h.replace_mode_state(state, 3, config.photon_number)
        state = evolver.evolve(state, config.measure_interval)
        dist_1 = h.photon_number_distribution(state, 2)
        dist_2 = h.photon_number_distribution(state, 3)
        assert dist_1.sum() == pytest.approx(1.0, abs=1e-12)
        assert dist_2.sum() == pytest.approx(1.0, abs=1e-12)
        joint = sum(
            h.project_photon_number(state, 2, k1).probability
            for k1 in range(config.fock_cutoffs[0] + 1))
        assert joint == pytest.approx(1.0, abs=1e-12)

    def test_cross_manifold_population_stays_zero(self):
        config = four_level_small()
        trace = zm.run_four_level_protocol(config, method="stepwise")
        assert zm.cross_manifold_population(trace.final_state) < 1e-12

    def test_survival_monotone_and_tail_empty(self):
        config = four_level_small()
        trace = zm.run_four_level_protocol(config)
        assert np.all(np.diff(trace.p_success) <= 1e-12)
        assert trace.max_mode_tail < 1e-8

    def test_residual_cosines_vanish_at_half_flop(self):
        config = four_level_small()
        residuals = zm.measurement_residual_cosines(config)
        assert residuals[0] == pytest.approx(0.0, abs=1e-12)
        assert residuals[1] == pytest.approx(0.0, abs=1e-12)
