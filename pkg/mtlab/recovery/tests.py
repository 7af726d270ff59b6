import math

import numpy as np
from django.test import SimpleTestCase

from mtlab.exceptions import DomainError
from mtlab.hilbert.channels import channel_validate, choi_matrix
from mtlab.hilbert.geometry import ChainGeometry
from mtlab.hilbert.operators import DensityMatrix, ghz_state, partial_trace, trace_distance
from mtlab.info.measures import cmi
from mtlab.info.states import canonical_markov_state, full_rank_mix, random_state
from mtlab.recovery.decay import cmi_decay_experiment
from mtlab.recovery.kappa import bp_recovery_kappa, normalize_instrument
from mtlab.recovery.ledger import APPROX, GE, LedgerEntry
from mtlab.recovery.petz import petz_recovery, petz_report
from mtlab.recovery.preparation import depth_two_layout, depth_two_prepare
from mtlab.recovery.reconstruction import thm3_states
from mtlab.recovery.rus import rus_layout, rus_recovery
from mtlab.thermal.gibbs import gibbs_state
from mtlab.thermal.hamiltonians import build_preset


def tfim(n, **params):
    return build_preset('tfim', ChainGeometry.qubits(n), params)


def decoupled(n, seed=0):
    return build_preset('decoupled', ChainGeometry.qubits(n), seed=seed)


def classical_markov_chain(n, rng):
    """Diagonal state of a Markov chain p(x_0)p(x_1|x_0)…p(x_{n−1}|x_{n−2})."""
    p = rng.dirichlet(np.ones(2))
    for _ in range(n - 1):
        transition = rng.dirichlet(np.ones(2), size=2)
        p = np.einsum('...i,ij->...ij', p, transition)
    g = ChainGeometry.qubits(n)
    return DensityMatrix(g.all_sites(), np.diag(p.reshape(-1)))


class LedgerTest(SimpleTestCase):
    def test_margin(self):
        """The margin is positive exactly when the inequality holds."""
        ok = LedgerEntry('x', 1.0, 2.0)
        self.assertTrue(ok.satisfied)
        self.assertAlmostEqual(ok.margin, 1.0 + 1e-9)
        bad = LedgerEntry('y', 1.0, 2.0, relation=GE)
        self.assertFalse(bad.satisfied)
        self.assertFalse(LedgerEntry('z', math.nan, 1.0).satisfied)

    def test_approximate_equality(self):
        """A ~= row passes when both sides agree within the slack."""
        self.assertTrue(LedgerEntry('x', 1.0, 1.0 + 1e-10, relation=APPROX).satisfied)
        self.assertFalse(LedgerEntry('x', 1.0, 1.1, relation=APPROX, slack=1e-3).satisfied)
        with self.assertRaises(DomainError):
            LedgerEntry('x', 1.0, 1.0, relation='<')


class PetzTest(SimpleTestCase):
    def test_fixed_point(self):
        """The Petz map sends ρ_B to ρ_BC."""
        rng = np.random.default_rng(0)
        g = ChainGeometry.qubits(3)
        for _ in range(5):
            rho = random_state(g.all_sites(), rng)
            ref = partial_trace(rho, g.sites([1, 2]))
            channel = petz_recovery(ref, g.sites([1]))
            out = channel.apply(partial_trace(rho, g.sites([1])))
            np.testing.assert_allclose(out.matrix, ref.matrix, atol=1e-9)

    def test_cptp(self):
        """The map is completely positive and trace-preserving."""
        rng = np.random.default_rng(1)
        g = ChainGeometry.qubits(3)
        rho = random_state(g.all_sites(), rng)
        report = channel_validate(petz_recovery(rho, g.sites([0, 2])))
        assert report.cp
        assert report.trace_preserving

    def test_rank_deficient_reference(self):
        """A reference with singular ρ_B still gives a CPTP map with the fixed point."""
        g = ChainGeometry.qubits(2)
        psi = np.zeros(4)
        psi[0] = 1.0
        ref = DensityMatrix.pure(g.all_sites(), psi)
        channel = petz_recovery(ref, g.sites([0]))
        report = channel_validate(channel)
        assert report.cp and report.trace_preserving
        out = channel.apply(partial_trace(ref, g.sites([0])))
        np.testing.assert_allclose(out.matrix, ref.matrix, atol=1e-12)

    def test_markov_state_is_recovered(self):
        """States with I(A:C|B) = 0 are rebuilt exactly."""
        rng = np.random.default_rng(2)
        g = ChainGeometry.qubits(5)
        for _ in range(3):
            rho = canonical_markov_state(g, 2, rng)
            report = petz_report(rho, g.sites([0, 1]), g.sites([2]), g.sites([3, 4]))
            self.assertLessEqual(report.error, 1e-8)
            self.assertLessEqual(abs(report.cmi), 1e-9)

    def test_ghz(self):
        """GHZ is rebuilt only up to dephasing: F = 1/√2 and −2 ln F = I(A:C|B) = ln 2."""
        g = ChainGeometry.qubits(4)
        report = petz_report(ghz_state(g), g.sites([0]), g.sites([1]), g.sites([2, 3]))
        self.assertAlmostEqual(report.error, 1.0, places=9)
        self.assertAlmostEqual(report.fidelity, 1 / math.sqrt(2), places=9)
        self.assertAlmostEqual(report.fidelity_gap, math.log(2), places=8)
        self.assertAlmostEqual(report.cmi, math.log(2), places=9)

    def test_bad_regions(self):
        """B must be a proper, non-empty part of the reference support."""
        rng = np.random.default_rng(3)
        g = ChainGeometry.qubits(2)
        rho = random_state(g.all_sites(), rng)
        with self.assertRaises(DomainError):
            petz_recovery(rho, g.all_sites())
        with self.assertRaises(DomainError):
            petz_recovery(partial_trace(rho, g.sites([0])), g.sites([1]))


class KappaTest(SimpleTestCase):
    def test_decoupled_is_exact(self):
        """Without interactions O_B = 1, λ_max = 1 and the map is exact."""
        h = decoupled(6)
        g = h.geometry
        km = bp_recovery_kappa(h, 1.0, g.sites([0, 1]), g.sites([2, 3]), g.sites([4, 5]))
        np.testing.assert_allclose(km.o_b.matrix, np.eye(km.b.dim), atol=1e-12)
        rho = gibbs_state(h, 1.0).state
        self.assertLessEqual(km.error(rho), 1e-9)
        inst = normalize_instrument(km, rho)
        self.assertAlmostEqual(inst.lambda_max, 1.0, places=10)
        self.assertAlmostEqual(inst.p_success, 1.0, places=9)
        self.assertLessEqual(inst.normalized_error, 1e-9)
        assert inst.cptp

    def test_infinite_temperature(self):
        """At β = 0 the maximally mixed state is reproduced exactly."""
        h = tfim(6)
        g = h.geometry
        km = bp_recovery_kappa(h, 0.0, g.sites([0, 1]), g.sites([2, 3]), g.sites([4, 5]))
        rho = DensityMatrix.maximally_mixed(g.all_sites())
        self.assertLessEqual(km.error(rho), 1e-12)

    def test_instrument(self):
        """On TFIM the instrument is CPTP and succeeds with probability in (0, 1]."""
        h = tfim(6)
        g = h.geometry
        km = bp_recovery_kappa(h, 1.0, g.sites([0]), g.sites([1, 2, 3, 4]), g.sites([5]))
        inst = normalize_instrument(km)
        assert inst.report.cp
        self.assertLessEqual(inst.report.tp_defect, 1e-9)
        self.assertGreater(inst.p_success, 0.0)
        self.assertLessEqual(inst.p_success, 1.0 + 1e-12)
        assert math.isfinite(inst.failure_choi_min)

    def test_error_shrinks_with_b(self):
        """The recovery error does not grow as B widens."""
        h = tfim(8)
        g = h.geometry
        errors = []
        rho = gibbs_state(h, 1.0).state
        for lo, hi in ((3, 5), (2, 6), (1, 7)):
            km = bp_recovery_kappa(
                h, 1.0, g.interval(0, lo), g.interval(lo, hi), g.interval(hi, 8),
            )
            errors.append(km.error(rho))
        assert all(b <= a + 1e-9 for a, b in zip(errors, errors[1:])), errors

    def test_p_success_ignores_c(self):
        """The success probability barely moves as C grows."""
        probabilities = []
        for n in (6, 7, 8):
            h = tfim(n)
            g = h.geometry
            km = bp_recovery_kappa(h, 1.0, g.sites([0]), g.interval(1, 5), g.interval(5, n))
            probabilities.append(normalize_instrument(km).p_success)
        spread = max(probabilities) - min(probabilities)
        self.assertLess(spread, 0.1 * max(probabilities), probabilities)

    def test_bad_partitions(self):
        """B must be contiguous, separate A from C and have two sites."""
        h = tfim(5)
        g = h.geometry
        with self.assertRaises(DomainError):
            bp_recovery_kappa(h, 1.0, g.sites([0, 1]), g.sites([2]), g.sites([3, 4]))
        with self.assertRaises(DomainError):
            bp_recovery_kappa(h, 1.0, g.sites([0, 3]), g.sites([1, 2]), g.sites([4]))
        with self.assertRaises(DomainError):
            bp_recovery_kappa(h, 1.0, g.sites([0]), g.sites([1, 3]), g.sites([2, 4]))


class RUSTest(SimpleTestCase):
    def test_layout(self):
        """Blocks start next to A; the relaxed sizes are flagged."""
        g = ChainGeometry.qubits(8)
        layout = rus_layout(g.sites([0]), g.interval(1, 6), 2, block=2, buffer=1)
        self.assertEqual(layout.blocks[1].indices, (1, 2))
        self.assertEqual(layout.buffers[0].indices, (3,))
        self.assertEqual(layout.blocks[0].indices, (4, 5))
        assert layout.relaxed
        assert not rus_layout(g.sites([0]), g.interval(1, 3), 1).relaxed
        with self.assertRaises(DomainError):
            rus_layout(g.sites([0]), g.interval(1, 6), 2)

    def test_layout_mirrored(self):
        """With A on the right the first block sits next to C on the left."""
        g = ChainGeometry.qubits(8)
        layout = rus_layout(g.sites([7]), g.interval(2, 7), 2, block=2, buffer=1)
        self.assertEqual(layout.blocks[1].indices, (5, 6))
        self.assertEqual(layout.blocks[0].indices, (2, 3))

    def test_single_stage(self):
        """One stage is the instrument itself."""
        h = tfim(5)
        g = h.geometry
        plan = rus_recovery(h, 0.5, g.sites([0]), g.sites([1, 2]), g.sites([3, 4]), 1)
        np.testing.assert_allclose(
            choi_matrix(plan.channel), choi_matrix(plan.stages[0].channel), atol=1e-12,
        )
        assert plan.passed
        self.assertEqual(len(plan.ledger), 3)

        # the failure output is kept, so the error exceeds ε_1 unless p is near 1
        stage = plan.stages[0]
        p = stage.p_success
        self.assertLessEqual(plan.error, p * plan.single_stage_error + 2 * (1 - p) + 1e-12)
        self.assertEqual(plan.single_stage_error, stage.normalized_error)
        entry = plan.ledger[-1]
        self.assertEqual(entry.name, 'error.single_stage')
        assert entry.satisfied

    def test_single_stage_decoupled(self):
        """With p = 1 the one-stage error is the normalized instrument error."""
        h = decoupled(4, seed=2)
        g = h.geometry
        plan = rus_recovery(h, 1.0, g.sites([0]), g.sites([1, 2]), g.sites([3]), 1)
        self.assertAlmostEqual(plan.stages[0].p_success, 1.0, places=9)
        self.assertAlmostEqual(plan.error, plan.single_stage_error, places=9)

    def test_decoupled_is_exact(self):
        """Without interactions every stage succeeds and recovery is exact."""
        h = decoupled(8, seed=4)
        g = h.geometry
        plan = rus_recovery(
            h, 1.0, g.sites([0]), g.interval(1, 6), g.interval(6, 8), 2, block=2, buffer=1,
        )
        self.assertLessEqual(plan.error, 1e-9)
        assert plan.cptp

    def test_two_stages(self):
        """Two stages on TFIM: CPTP, and the error is within the telescoped bound."""
        h = tfim(7)
        g = h.geometry
        plan = rus_recovery(
            h, 1.0, g.sites([0]), g.interval(1, 6), g.sites([6]), 2, block=2, buffer=1,
        )
        assert plan.cptp
        self.assertLessEqual(plan.report.tp_defect, 1e-8)
        for entry in plan.ledger:
            assert entry.satisfied, entry
        names = [e.name for e in plan.ledger]
        self.assertIn('stage1.failure_correlation', names)


class DecayTest(SimpleTestCase):
    def test_product_state(self):
        """Without interactions every CMI vanishes."""
        h = decoupled(6)
        table = cmi_decay_experiment(h, 1.0, h.geometry.sites([0]), [1, 2, 3])
        for row in table.rows:
            self.assertLessEqual(abs(row.cmi), 1e-10)
            self.assertLessEqual(abs(row.increment), 1e-10)

    def test_infinite_temperature(self):
        """At β = 0 the table is all zeros."""
        h = tfim(6)
        table = cmi_decay_experiment(h, 0.0, h.geometry.sites([0, 1]), [1, 2])
        for row in table.rows:
            self.assertLessEqual(abs(row.cmi), 1e-10)
            self.assertLessEqual(abs(row.mi), 1e-10)

    def test_tfim(self):
        """On TFIM the CMI is positive and decreasing and the chain rule holds."""
        h = tfim(8)
        table = cmi_decay_experiment(h, 1.0, h.geometry.sites([0, 1]), [1, 2, 3, 4])
        assert table.chain_rule_ok
        assert table.cmi_non_increasing
        self.assertGreater(table.rows[-1].cmi, 0.0)
        self.assertGreater(table.rows[0].cmi, table.rows[-1].cmi)
        for entry in table.ledger():
            if entry.certified:
                assert entry.satisfied, entry
            # increments are compared but never certified
            self.assertEqual(entry.certified, not entry.name.endswith('.increment'), entry.name)

    def test_no_room_for_c(self):
        """A width that swallows the rest of the chain is rejected."""
        h = tfim(4)
        with self.assertRaises(DomainError):
            cmi_decay_experiment(h, 1.0, h.geometry.sites([0]), [3])


class PreparationTest(SimpleTestCase):
    def test_layout(self):
        """Separators take the sites left over by the blocks."""
        g = ChainGeometry.qubits(9)
        self.assertEqual(depth_two_layout(g, 2, 2).c_width, 1)
        layout = depth_two_layout(g, 1, 2)
        self.assertEqual(layout.c_width, 5)
        self.assertEqual(layout.c[0].indices, (2, 3, 4, 5, 6))
        self.assertEqual(layout.prefix(2), g.all_sites())
        with self.assertRaises(DomainError):
            depth_two_layout(g, 1, 3)
        with self.assertRaises(DomainError):
            depth_two_layout(ChainGeometry.qubits(9, 'closed'), 2, 2)

    def test_single_block(self):
        """With one block the first layer alone prepares the state."""
        result = depth_two_prepare(tfim(4), 0.5, 2, k=1)
        self.assertLessEqual(result.error, 1e-9)
        self.assertEqual(result.terms, ())

    def test_decoupled(self):
        """Product Gibbs states are prepared exactly."""
        result = depth_two_prepare(decoupled(6, seed=1), 1.0, 1, k=2)
        self.assertLessEqual(result.error, 1e-9)
        self.assertLessEqual(result.report.tp_defect, 1e-8)

    def test_tfim(self):
        """On TFIM the channel is trace-preserving and the error obeys the telescoped bound."""
        result = depth_two_prepare(tfim(6), 0.5, 1, k=2, xi=1.0)
        assert result.passed
        assert result.report.cp
        self.assertGreater(result.error, 0.0)
        self.assertAlmostEqual(result.asymptotic_c_width, 5 * math.log(2))

    def test_error_falls_with_l(self):
        """Separators of width l: the TFIM error shrinks as the blocks grow."""
        errors = [
            depth_two_prepare(tfim(5 * l), 0.5, l, k=2, c_width=l).error for l in (1, 2)
        ]
        self.assertLess(errors[1], errors[0])

    def test_classical_chain(self):
        """On a zero-field Ising chain only the lost B_1A_2 correlation remains: tanh(β)^(c+1)."""
        for l in (1, 2):
            h = build_preset('classical-ising', ChainGeometry.qubits(5 * l), {'h': 0})
            result = depth_two_prepare(h, 0.5, l, k=2, c_width=l)
            expected = math.tanh(0.5) ** (l + 1)
            self.assertAlmostEqual(result.error, expected, places=10)
            corr, rec = result.terms[0]
            self.assertAlmostEqual(corr, expected, places=10)
            self.assertLessEqual(rec, 1e-10)


class ReconstructionTest(SimpleTestCase):
    def test_product_state(self):
        """Product states are rebuilt exactly and mixing moves them by at most 2w."""
        rng = np.random.default_rng(5)
        g = ChainGeometry.qubits(4)
        rho = DensityMatrix.product(*[random_state(g.sites([i]), rng) for i in range(4)])
        out = thm3_states(rho, g.sites([0]), g.sites([1]), g.sites([2]), g.sites([3]))
        np.testing.assert_allclose(out.rho_prime.matrix, rho.matrix, atol=1e-9)
        self.assertLessEqual(trace_distance(out.rho_tilde, out.rho_prime), 2 * out.weight + 1e-12)
        assert out.passed

    def test_markov_chain(self):
        """A classical Markov chain is rebuilt exactly."""
        rng = np.random.default_rng(6)
        rho = classical_markov_chain(4, rng)
        g = rho.geometry
        out = thm3_states(rho, g.sites([0]), g.sites([1]), g.sites([2]), g.sites([3]))
        self.assertLessEqual(out.epsilon, 1e-9)
        self.assertLessEqual(trace_distance(out.rho_prime, rho), 1e-8)

    def test_ghz_ring(self):
        """The mixed GHZ ring gives a finite ledger and a full-rank ρ̃."""
        g = ChainGeometry.qubits(6, 'closed')
        rho = full_rank_mix(ghz_state(g))
        out = thm3_states(rho, g.sites([0]), g.sites([1, 5]), g.sites([2, 4]), g.sites([3]))
        for entry in out.ledger:
            assert math.isfinite(entry.lhs) and math.isfinite(entry.rhs)
        assert out.passed
        lowest = np.linalg.eigvalsh(out.rho_tilde.matrix)[0]
        self.assertGreaterEqual(lowest, out.weight / rho.dim - 1e-12)
        self.assertGreater(cmi(rho, g.sites([0]), g.sites([1, 5, 2, 4]), g.sites([3])).value, 0.0)

    def test_ring_needs_shells(self):
        """On a ring B1 and B2 must close around A from both sides."""
        g = ChainGeometry.qubits(8, 'closed')
        rho = full_rank_mix(ghz_state(g))
        with self.assertRaises(DomainError):
            thm3_states(rho, g.interval(0, 2), g.interval(2, 4), g.interval(4, 6), g.interval(6, 8))
        out = thm3_states(
            rho, g.interval(0, 2), g.sites([2, 3, 7]), g.sites([4, 6]), g.sites([5]),
        )
        assert out.passed

    def test_overlapping_regions(self):
        """Regions must be disjoint and cover the state."""
        rng = np.random.default_rng(7)
        g = ChainGeometry.qubits(4)
        rho = random_state(g.all_sites(), rng)
        with self.assertRaises(DomainError):
            thm3_states(rho, g.sites([0]), g.sites([0, 1]), g.sites([2]), g.sites([3]))
        with self.assertRaises(DomainError):
            thm3_states(rho, g.sites([0]), g.sites([1]), g.sites([2]), g.sites([2]))
