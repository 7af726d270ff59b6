import math

import numpy as np
from django.test import SimpleTestCase

from mtlab.exceptions import DomainError
from mtlab.hilbert import linalg
from mtlab.hilbert.geometry import CLOSED, ChainGeometry
from mtlab.hilbert.operators import DensityMatrix, ghz_state
from mtlab.info.measures import mutual_information
from mtlab.thermal.correlation import correlation, correlation_length_fit, fit_decay
from mtlab.thermal.gibbs import gibbs_state, split_middle_interaction
from mtlab.thermal.hamiltonians import (
    PAULI_X, PAULI_Z, PRESETS, Hamiltonian, build_preset, local_term,
    restrict_hamiltonian,
)


def nearest_neighbour(n, rng, fields=False):
    g = ChainGeometry.qubits(n)
    terms = [local_term(g, [i, i + 1], linalg.random_hermitian(4, rng)) for i in range(n - 1)]
    if fields:
        terms += [local_term(g, [i], linalg.random_hermitian(2, rng)) for i in range(n)]
    return Hamiltonian(g, tuple(terms))


class HamiltonianTest(SimpleTestCase):
    def test_presets_registered(self):
        """All preset models are available by name."""
        self.assertEqual(
            list(PRESETS),
            ['tfim', 'heisenberg', 'random-nn', 'classical-ising', 'decoupled'],
        )
        for f in PRESETS.values():
            assert f.description

    def test_range_and_strength(self):
        """TFIM has range 1 and strength max(J, g)."""
        h = build_preset('tfim', ChainGeometry.qubits(4), {'g': 1.5})
        self.assertEqual(h.range, 1)
        self.assertAlmostEqual(h.strength, 1.5, places=12)

    def test_random_nn_is_seeded(self):
        """The random preset is reproducible and bounded by 1."""
        g = ChainGeometry.qubits(4)
        a = build_preset('random-nn', g, seed=3)
        b = build_preset('random-nn', g, seed=3)
        for s, t in zip(a.terms, b.terms):
            np.testing.assert_array_equal(s.matrix, t.matrix)
        assert a.strength <= 1 + 1e-12

    def test_ring_has_wrap_bond(self):
        """A closed chain gets the bond between the last and first site."""
        h = build_preset('heisenberg', ChainGeometry.qubits(4, CLOSED))
        self.assertEqual(len(h.terms), 4)
        self.assertEqual(h.range, 1)

    def test_unknown_preset(self):
        """Unknown names and parameters are domain errors."""
        g = ChainGeometry.qubits(3)
        with self.assertRaises(DomainError):
            build_preset('potts', g)
        with self.assertRaises(DomainError):
            build_preset('tfim', g, {'gamma': 1.0})

    def test_assembled_operator_hermitian(self):
        """The assembled operator is Hermitian and sums the embedded terms."""
        h = build_preset('tfim', ChainGeometry.qubits(2), {'g': 0.5})
        expected = -np.kron(PAULI_Z, PAULI_Z) - 0.5 * (
            np.kron(PAULI_X, np.eye(2)) + np.kron(np.eye(2), PAULI_X))
        np.testing.assert_allclose(h.operator.matrix, expected, atol=1e-14)
        assert h.operator.hermitian

    def test_non_contiguous_term_rejected(self):
        """Terms must live on contiguous supports."""
        g = ChainGeometry.qubits(4)
        with self.assertRaises(DomainError):
            Hamiltonian(g, (local_term(g, [0, 2], np.kron(PAULI_Z, PAULI_Z)),))

    def test_json_round_trip(self):
        """The JSON record rebuilds the same terms and preset provenance."""
        h = build_preset('random-nn', ChainGeometry.qubits(3), seed=5)
        back = Hamiltonian.from_json(h.to_json())
        self.assertEqual(back.preset, {'name': 'random-nn', 'params': {}, 'seed': 5})
        np.testing.assert_allclose(back.operator.matrix, h.operator.matrix, atol=1e-15)


class RestrictTest(SimpleTestCase):
    def test_full_chain(self):
        """Restricting to the whole chain keeps every term."""
        h = build_preset('tfim', ChainGeometry.qubits(4))
        self.assertEqual(len(restrict_hamiltonian(h, h.geometry.all_sites()).terms), len(h.terms))

    def test_pair(self):
        """Only h_01 survives on {0, 1} for a bond-only model."""
        h = build_preset('tfim', ChainGeometry.qubits(4), {'g': 0.0})
        r = restrict_hamiltonian(h, h.geometry.sites([0, 1]))
        self.assertEqual([t.support.indices for t in r.terms], [(0, 1)])
        self.assertEqual(r.operator.support, h.geometry.sites([0, 1]))

    def test_single_site(self):
        """On one site only the field term remains."""
        h = build_preset('tfim', ChainGeometry.qubits(4))
        r = restrict_hamiltonian(h, h.geometry.sites([2]))
        self.assertEqual(len(r.terms), 1)
        np.testing.assert_allclose(r.terms[0].matrix, -PAULI_X)

    def test_no_term_invented(self):
        """Restricted terms are a subset of the original terms."""
        h = nearest_neighbour(5, np.random.default_rng(1), fields=True)
        r = h.restrict(h.geometry.sites([1, 2, 3]))
        assert all(any(t is s for s in h.terms) for t in r.terms)


class GibbsTest(SimpleTestCase):
    def test_zero_hamiltonian(self):
        """H = 0 gives the maximally mixed state and ln Z = ln d."""
        g = ChainGeometry.qubits(3)
        gs = gibbs_state(Hamiltonian(g, ()), 1.0)
        np.testing.assert_allclose(gs.state.matrix, np.eye(8) / 8, atol=1e-14)
        self.assertAlmostEqual(gs.log_z, math.log(8), places=12)

    def test_single_qubit_z(self):
        """H = Z at β = 1 is diag(e^-1, e)/(e + e^-1)."""
        g = ChainGeometry.qubits(1)
        gs = gibbs_state(Hamiltonian(g, (local_term(g, [0], PAULI_Z),)), 1.0)
        z = math.e + 1 / math.e
        np.testing.assert_allclose(gs.state.matrix, np.diag([math.exp(-1) / z, math.e / z]), atol=1e-14)
        self.assertAlmostEqual(gs.log_z, math.log(z), places=12)
        self.assertAlmostEqual(gs.free_energy, -math.log(z), places=12)

    def test_low_temperature_ground_state(self):
        """At large β the Gibbs state approaches the unique ground state."""
        h = build_preset('tfim', ChainGeometry.qubits(4))
        w, v = np.linalg.eigh(h.operator.matrix)
        assert w[1] - w[0] > 0.1
        rho = gibbs_state(h, 200.0).state.matrix
        fidelity = float((v[:, 0].conj() @ rho @ v[:, 0]).real)
        assert fidelity >= 1 - 1e-6

    def test_constant_shift(self):
        """Adding c·1 leaves the Gibbs state unchanged."""
        h = nearest_neighbour(4, np.random.default_rng(2))
        shifted = Hamiltonian(h.geometry, h.terms + (local_term(h.geometry, [0], 7.5 * np.eye(2)),))
        a, b = gibbs_state(h, 1.3), gibbs_state(shifted, 1.3)
        np.testing.assert_allclose(a.state.matrix, b.state.matrix, atol=1e-10)
        self.assertAlmostEqual(b.log_z, a.log_z - 1.3 * 7.5, places=9)

    def test_full_rank(self):
        """Gibbs states of bounded Hamiltonians are positive definite."""
        h = build_preset('random-nn', ChainGeometry.qubits(4), seed=1)
        assert gibbs_state(h, 2.0).state.eigenvalues()[0] > 0

    def test_negative_beta(self):
        """Negative inverse temperatures are refused."""
        with self.assertRaises(DomainError):
            gibbs_state(build_preset('tfim', ChainGeometry.qubits(2)), -1.0)

    def test_region(self):
        """With a region the state is the Gibbs state of H_X on X."""
        h = build_preset('tfim', ChainGeometry.qubits(4))
        x = h.geometry.sites([1, 2])
        gs = gibbs_state(h, 1.0, region=x)
        self.assertEqual(gs.support, x)
        expected = gibbs_state(h.restrict(x), 1.0)
        np.testing.assert_allclose(gs.state.matrix, expected.state.matrix)

    def test_area_law(self):
        """I(A:Aᶜ) ≤ β J r per boundary bond for TFIM and Heisenberg chains."""
        for name in ('tfim', 'heisenberg'):
            h = build_preset(name, ChainGeometry.qubits(6))
            for beta in (0.5, 1.0, 2.0):
                rho = gibbs_state(h, beta).state
                for k in range(1, 6):
                    a = h.geometry.interval(0, k)
                    mi = mutual_information(rho, a, a.complement()).value
                    assert mi <= beta * h.strength * h.range + 1e-6, (name, beta, k)


class SplitTest(SimpleTestCase):
    def test_single_crossing_bond(self):
        """A nearest-neighbour H split on {2..5} crosses at h_34."""
        h = nearest_neighbour(8, np.random.default_rng(3), fields=True)
        split = split_middle_interaction(h, h.geometry.sites([2, 3, 4, 5]))
        self.assertEqual(split.b_left.indices, (2, 3))
        self.assertEqual(split.b_right.indices, (4, 5))
        self.assertEqual(split.crossing_terms, 1)
        bond = [t for t in h.terms if t.support.indices == (3, 4)][0]
        np.testing.assert_allclose(split.h_bm.matrix, bond.matrix)
        assert split.norm <= split.bound + 1e-12

    def test_odd_split(self):
        """The left half keeps the extra site."""
        h = nearest_neighbour(6, np.random.default_rng(4))
        split = split_middle_interaction(h, h.geometry.sites([1, 2, 3]))
        self.assertEqual(split.b_left.indices, (1, 2))
        self.assertEqual(split.b_right.indices, (3,))

    def test_range_two(self):
        """Range-2 terms give two crossing terms on {2..7}."""
        rng = np.random.default_rng(5)
        g = ChainGeometry.qubits(10)
        terms = tuple(
            local_term(g, [i, i + 1, i + 2], linalg.random_hermitian(8, rng)) for i in range(8)
        )
        h = Hamiltonian(g, terms)
        split = split_middle_interaction(h, g.interval(2, 8))
        self.assertEqual(split.crossing_terms, 2)
        self.assertEqual(split.h_bm.support.indices, (3, 4, 5, 6))
        assert split.norm <= split.bound + 1e-12

    def test_pair(self):
        """B = {2, 3} gives H_BM = h_23."""
        h = nearest_neighbour(5, np.random.default_rng(6))
        split = split_middle_interaction(h, h.geometry.sites([2, 3]))
        self.assertEqual(split.h_bm.support.indices, (2, 3))

    def test_not_contiguous(self):
        """A non-contiguous B is a domain error."""
        h = nearest_neighbour(5, np.random.default_rng(7))
        with self.assertRaises(DomainError):
            split_middle_interaction(h, h.geometry.sites([0, 2, 3]))

    def test_decoupled_has_zero_middle(self):
        """Without interactions the middle operator is zero on B."""
        h = build_preset('decoupled', ChainGeometry.qubits(4))
        split = split_middle_interaction(h, h.geometry.sites([1, 2]))
        self.assertEqual(split.crossing_terms, 0)
        self.assertEqual(split.norm, 0.0)


class CorrelationTest(SimpleTestCase):
    def test_product_state(self):
        """A product state has no correlation."""
        g = ChainGeometry.qubits(2)
        rng = np.random.default_rng(8)
        rho = DensityMatrix.product(*(
            DensityMatrix(g.sites([i]), linalg.random_density(2, rng)) for i in range(2)
        ))
        report = correlation(rho, g.sites([0]), g.sites([1]))
        assert report.cor_lower <= 1e-10
        assert report.cor_upper <= 1e-10

    def test_classical_pair(self):
        """½(|00⟩⟨00| + |11⟩⟨11|) has Cor = ⟨ZZ⟩ − ⟨Z⟩⟨Z⟩ = 1."""
        g = ChainGeometry.qubits(2)
        rho = DensityMatrix(g.all_sites(), np.diag([0.5, 0, 0, 0.5]))
        report = correlation(rho, g.sites([0]), g.sites([1]))
        self.assertAlmostEqual(report.cor_lower, 1.0, places=9)
        self.assertAlmostEqual(report.cor_upper, 1.0, places=12)

    def test_bell_state(self):
        """A Bell pair has Cor = 1 below the trace-norm bound 3/2."""
        g = ChainGeometry.qubits(2)
        report = correlation(ghz_state(g), g.sites([0]), g.sites([1]))
        self.assertAlmostEqual(report.cor_lower, 1.0, places=9)
        self.assertAlmostEqual(report.cor_upper, 1.5, places=12)

    def test_ordering(self):
        """cor_lower never exceeds cor_upper on Gibbs states."""
        h = build_preset('random-nn', ChainGeometry.qubits(5), seed=2)
        rho = gibbs_state(h, 1.0).state
        g = h.geometry
        for y in range(1, 5):
            report = correlation(rho, g.sites([0]), g.sites([y]), restarts=3)
            assert 0 <= report.cor_lower <= report.cor_upper + 1e-9

    def test_overlap_rejected(self):
        """X and Y must be disjoint."""
        g = ChainGeometry.qubits(2)
        with self.assertRaises(DomainError):
            correlation(ghz_state(g), g.sites([0]), g.sites([0, 1]))


class CorrelationLengthTest(SimpleTestCase):
    def test_infinite_temperature(self):
        """At β = 0 every correlation vanishes and the fit is flagged."""
        h = build_preset('tfim', ChainGeometry.qubits(5))
        g = h.geometry
        fit = correlation_length_fit(h, 0.0, [(g.sites([0]), g.sites([y])) for y in (1, 2, 3)])
        assert fit.degenerate
        self.assertEqual(fit.xi, 0.0)
        assert max(fit.values) <= 1e-12

    def test_decoupled(self):
        """An uncoupled chain is flagged as uncorrelated."""
        h = build_preset('decoupled', ChainGeometry.qubits(5), seed=1)
        g = h.geometry
        fit = correlation_length_fit(h, 1.0, [(g.sites([0]), g.sites([y])) for y in (1, 2, 3, 4)])
        assert fit.degenerate

    def test_tfim_decay(self):
        """TFIM at β = 1 has monotonically decreasing correlations and finite ξ."""
        h = build_preset('tfim', ChainGeometry.qubits(10))
        g = h.geometry
        fit = correlation_length_fit(h, 1.0, [(g.sites([0]), g.sites([y])) for y in range(1, 8)])
        assert all(a > b for a, b in zip(fit.values, fit.values[1:])), fit.values
        assert 0 < fit.xi < math.inf
        assert fit.rsq > 0.9

    def test_fit_decay(self):
        """An exact exponential is fitted exactly; a flat profile has ξ = ∞."""
        distances = [1, 2, 3, 4]
        fit = fit_decay(distances, [0.5 * math.exp(-d / 2) for d in distances])
        self.assertAlmostEqual(fit.xi, 2.0)
        self.assertAlmostEqual(fit.prefactor, 0.5)
        self.assertAlmostEqual(fit.rsq, 1.0)
        assert not fit.degenerate
        self.assertEqual(fit_decay(distances, [0.1] * 4).xi, math.inf)

    def test_needs_three_distances(self):
        """Two distances are not enough for a fit."""
        h = build_preset('tfim', ChainGeometry.qubits(4))
        g = h.geometry
        with self.assertRaises(DomainError):
            correlation_length_fit(h, 1.0, [(g.sites([0]), g.sites([y])) for y in (1, 2)])
