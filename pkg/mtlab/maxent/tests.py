import math

import numpy as np
from django.test import SimpleTestCase

from mtlab.exceptions import DomainError
from mtlab.hilbert import linalg
from mtlab.hilbert.geometry import CLOSED, ChainGeometry
from mtlab.hilbert.operators import DensityMatrix, GlobalOperator, ghz_state
from mtlab.info.measures import LN2, entropy, relative_entropy
from mtlab.info.states import canonical_markov_state, full_rank_mix, random_state
from mtlab.maxent.certificates import (
    gibbs_family_distance, local_reconstruction, thm1_certificate,
    thm2_certificate, thm3_delta,
)
from mtlab.maxent.family import HermitianBasis, MarginalFamily, pair_family_sets
from mtlab.maxent.solver import (
    family_gibbs, maxent_state, pythagorean_residual, warm_start,
)
from mtlab.thermal.gibbs import gibbs_state
from mtlab.thermal.hamiltonians import build_preset


def singletons(g):
    return [g.sites([i]) for i in range(g.n)]


def pairs_of(g, width=2):
    return [g.interval(i, i + width) for i in range(0, g.n, width)]


class FamilyTest(SimpleTestCase):
    def test_inconsistent_targets_rejected(self):
        """Targets that disagree on their overlap are refused."""
        rng = np.random.default_rng(1)
        g = ChainGeometry.qubits(3)
        with self.assertRaises(DomainError):
            MarginalFamily(
                (g.sites([0, 1]), g.sites([1, 2])),
                (random_state(g.sites([0, 1]), rng), random_state(g.sites([1, 2]), rng)),
            )

    def test_ring_pair_family(self):
        """On a ring the wrap-around pair is part of the family."""
        g = ChainGeometry.qubits(4, CLOSED)
        sets = pair_family_sets(singletons(g), closed=True)
        self.assertEqual(sets[-1].indices, (0, 3))
        self.assertEqual(len(sets), 4)

    def test_hermitian_basis(self):
        """Packing and unpacking Hermitian matrices is lossless."""
        rng = np.random.default_rng(2)
        basis = HermitianBasis([2, 4])
        mats = [linalg.random_hermitian(2, rng), linalg.random_hermitian(4, rng)]
        self.assertEqual(basis.size, 20)
        for a, b in zip(basis.unpack(basis.pack(mats)), mats):
            np.testing.assert_allclose(a, b, atol=1e-15)

    def test_gradient_coordinates(self):
        """The coordinate gradient matches finite differences of Tr(Gλ)."""
        rng = np.random.default_rng(3)
        basis = HermitianBasis([3])
        g = linalg.random_hermitian(3, rng)
        grad = basis.gradient([g])
        for k in range(basis.size):
            e = np.zeros(basis.size)
            e[k] = 1.0
            value = np.trace(g @ basis.unpack(e)[0]).real
            self.assertAlmostEqual(grad[k], value, places=12)


class MaxEntTest(SimpleTestCase):
    def test_full_support_marginal(self):
        """A single full-support marginal fixes the state."""
        rng = np.random.default_rng(4)
        g = ChainGeometry.qubits(3)
        rho = random_state(g.all_sites(), rng)
        sol = maxent_state(MarginalFamily.from_state(rho, [g.all_sites()]))
        assert sol.converged
        np.testing.assert_allclose(sol.sigma_max.matrix, rho.matrix, atol=1e-8)

    def test_maximally_mixed_singles(self):
        """Maximally mixed single-site marginals give 1/d and zero multipliers."""
        g = ChainGeometry.qubits(3)
        rho = DensityMatrix.maximally_mixed(g.all_sites())
        sol = maxent_state(MarginalFamily.from_state(rho, singletons(g)))
        np.testing.assert_allclose(sol.sigma_max.matrix, np.eye(8) / 8, atol=1e-12)
        assert sol.max_multiplier_norm <= 1e-10
        self.assertEqual(sol.iterations, 0)

    def test_gibbs_state_in_family(self):
        """Pair marginals of a nearest-neighbour Gibbs state recover it."""
        h = build_preset('random-nn', ChainGeometry.qubits(5), seed=4)
        rho = gibbs_state(h, 1.0).state
        sol = maxent_state(MarginalFamily.from_state(rho, pair_family_sets(singletons(h.geometry))))
        assert sol.converged
        assert sol.marginal_residual <= 1e-8
        assert relative_entropy(rho, sol.sigma_max).value <= 1e-6

    def test_dual_history_non_increasing(self):
        """The dual value never increases along the recorded iterations."""
        rng = np.random.default_rng(5)
        g = ChainGeometry.qubits(4)
        rho = random_state(g.all_sites(), rng)
        sol = maxent_state(MarginalFamily.from_state(rho, pair_family_sets(singletons(g))))
        history = np.asarray(sol.dual_history)
        assert len(history) >= 2
        assert np.all(np.diff(history) <= 1e-10), np.diff(history).max()

    def test_reconstruction_from_multipliers(self):
        """exp(Σ λ_i − ln Z) rebuilds σ_max after gauge fixing."""
        rng = np.random.default_rng(6)
        g = ChainGeometry.qubits(4)
        rho = random_state(g.all_sites(), rng)
        sol = maxent_state(MarginalFamily.from_state(rho, pair_family_sets(singletons(g))))
        rebuilt = family_gibbs(sol.multipliers, g.all_sites())
        np.testing.assert_allclose(rebuilt.state.matrix, sol.sigma_max.matrix, atol=1e-9)
        self.assertAlmostEqual(rebuilt.log_z, sol.log_z, places=8)
        for m in sol.multipliers:
            self.assertAlmostEqual(abs(m.trace()), 0.0, places=9)

    def test_warm_start_exact_for_markov_chain(self):
        """The junction warm start already matches a Markov chain's marginals."""
        rng = np.random.default_rng(7)
        g = ChainGeometry.qubits(6)
        rho = canonical_markov_state(g, 2, rng)
        family = MarginalFamily.from_state(rho, [g.interval(0, 4), g.interval(2, 6)])
        assert len(warm_start(family)) == 2
        sol = maxent_state(family)
        self.assertEqual(sol.iterations, 0)
        assert relative_entropy(rho, sol.sigma_max).value <= 1e-8


class PythagoreanTest(SimpleTestCase):
    def setUp(self):
        rng = np.random.default_rng(8)
        self.g = ChainGeometry.qubits(6)
        self.rho = random_state(self.g.all_sites(), rng)
        self.sets = pair_family_sets(pairs_of(self.g))
        self.sol = maxent_state(MarginalFamily.from_state(self.rho, self.sets))
        self.rng = rng

    def test_omega_is_sigma(self):
        """ω = σ_max leaves only the S(σ‖σ) defect."""
        record = pythagorean_residual(self.rho, self.sol, self.sol.sigma_max)
        assert record.finite
        assert record.residual <= 1e-8

    def test_maximally_mixed_omega(self):
        """ω = 1/d gives S(ρ‖σ_max) = S(σ_max) − S(ρ)."""
        omega = DensityMatrix.maximally_mixed(self.g.all_sites())
        assert pythagorean_residual(self.rho, self.sol, omega).residual <= 1e-6
        gap = entropy(self.sol.sigma_max).value - entropy(self.rho).value
        self.assertAlmostEqual(relative_entropy(self.rho, self.sol.sigma_max).value, gap, places=6)

    def test_random_in_family(self):
        """Random in-family Gibbs states satisfy the Pythagorean identity."""
        for _ in range(5):
            multipliers = [
                GlobalOperator(x, linalg.random_hermitian(x.dim, self.rng, 2.0), hermitian=True)
                for x in self.sets
            ]
            omega = family_gibbs(multipliers, self.g.all_sites()).state
            assert pythagorean_residual(self.rho, self.sol, omega).residual <= 1e-6

    def test_support_failure(self):
        """A singular ω outside the support of ρ reports an infinite residual."""
        omega = DensityMatrix.pure(self.g.all_sites(), np.eye(64)[0])
        record = pythagorean_residual(self.rho, self.sol, omega)
        assert not record.finite
        assert record.residual == math.inf


class Thm1Test(SimpleTestCase):
    def test_gibbs_state(self):
        """A nearest-neighbour Gibbs state passes with a small gap."""
        h = build_preset('random-nn', ChainGeometry.qubits(6), seed=9)
        rho = gibbs_state(h, 1.0).state
        cert = thm1_certificate(rho, pairs_of(h.geometry))
        assert cert.passed, cert.to_json()
        assert cert.entropy_gap <= cert.bound + 1e-5

    def test_markov_chain(self):
        """An exact Markov chain is fitted to within 1e-5."""
        rho = canonical_markov_state(ChainGeometry.qubits(6), 2, np.random.default_rng(10))
        cert = thm1_certificate(rho, pairs_of(rho.geometry))
        self.assertAlmostEqual(cert.epsilon, 0.0, places=9)
        assert cert.rel_entropy <= 1e-5
        assert cert.passed

    def test_ghz(self):
        """GHZ_6 has ε = ln 2 and an entropy gap within 5 ln 2."""
        g = ChainGeometry.qubits(6)
        cert = thm1_certificate(ghz_state(g), singletons(g))
        self.assertAlmostEqual(cert.epsilon, LN2, places=9)
        assert cert.entropy_gap <= 5 * LN2 + 1e-6
        assert cert.passed
        self.assertEqual(cert.to_json()['kind'], 'open')


class Thm2Test(SimpleTestCase):
    def test_gibbs_ring(self):
        """A nearest-neighbour Gibbs state on a ring passes both variants."""
        h = build_preset('tfim', ChainGeometry.qubits(4, CLOSED))
        rho = gibbs_state(h, 1.0).state
        for variant in ('i', 'ii'):
            cert = thm2_certificate(rho, singletons(h.geometry), variant)
            assert cert.passed, cert.to_json()
            assert cert.rel_entropy <= 1e-6

    def test_product_ring(self):
        """A product state on a ring has ε = ε′ = 0 and is fitted exactly."""
        rng = np.random.default_rng(11)
        g = ChainGeometry.qubits(4, CLOSED)
        rho = DensityMatrix.product(*(random_state(s, rng) for s in singletons(g)))
        cert = thm2_certificate(rho, singletons(g), 'ii')
        assert cert.epsilon <= 1e-10 and cert.epsilon_prime <= 1e-10
        assert cert.rel_entropy <= 1e-6

    def test_needs_four_blocks(self):
        """Three blocks on a ring are refused."""
        g = ChainGeometry.qubits(3, CLOSED)
        with self.assertRaises(DomainError):
            thm2_certificate(ghz_state(g), singletons(g))


class ReconstructionTest(SimpleTestCase):
    def test_classical_ising_exact(self):
        """The open form reproduces a commuting Ising Gibbs state."""
        h = build_preset('classical-ising', ChainGeometry.qubits(5))
        rho = gibbs_state(h, 1.0).state
        rec = local_reconstruction(rho, singletons(h.geometry), closed=False)
        assert relative_entropy(rho, rec.pi).value <= 1e-8

    def test_product_state(self):
        """A product state is its own reconstruction."""
        rng = np.random.default_rng(12)
        g = ChainGeometry.qubits(4, CLOSED)
        rho = DensityMatrix.product(*(random_state(s, rng) for s in singletons(g)))
        rec = local_reconstruction(rho, singletons(g))
        np.testing.assert_allclose(rec.pi.matrix, rho.matrix, atol=1e-10)

    def test_rank_deficient_refused(self):
        """Pure GHZ needs full-rank mixing first; the mixed state reconstructs."""
        g = ChainGeometry.qubits(6, CLOSED)
        with self.assertRaises(DomainError):
            local_reconstruction(ghz_state(g), singletons(g))
        mixed = full_rank_mix(ghz_state(g))
        rec = local_reconstruction(mixed, singletons(g))
        assert math.isfinite(relative_entropy(mixed, rec.pi).value)
        assert rec.max_term_norm > 0


class FamilyDistanceTest(SimpleTestCase):
    def test_in_family(self):
        """A nearest-neighbour Gibbs state is at distance 0."""
        h = build_preset('heisenberg', ChainGeometry.qubits(5))
        rho = gibbs_state(h, 0.7).state
        distance = gibbs_family_distance(rho, singletons(h.geometry))
        self.assertAlmostEqual(distance.min_rel_entropy, 0.0, places=6)

    def test_maximally_mixed(self):
        """1/d belongs to every Gibbs family."""
        g = ChainGeometry.qubits(4)
        distance = gibbs_family_distance(DensityMatrix.maximally_mixed(g.all_sites()), singletons(g))
        self.assertAlmostEqual(distance.min_rel_entropy, 0.0, places=9)


class Thm3Test(SimpleTestCase):
    def test_in_family(self):
        """For an in-family state δ = −I(A:C|B)."""
        h = build_preset('tfim', ChainGeometry.qubits(5))
        rho = gibbs_state(h, 1.0).state
        g = h.geometry
        record = thm3_delta(rho, singletons(g), g.sites([0]), g.sites([1]), g.interval(2, 5))
        self.assertAlmostEqual(record.delta, -record.cmi, places=6)
        assert record.precondition_met

    def test_non_shielding(self):
        """B must separate A from C."""
        g = ChainGeometry.qubits(4)
        rho = ghz_state(g)
        with self.assertRaises(DomainError):
            thm3_delta(rho, singletons(g), g.sites([0]), g.sites([2]), g.sites([1]))
