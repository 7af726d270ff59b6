import math

import numpy as np
from django.test import SimpleTestCase

from mtlab.exceptions import DomainError
from mtlab.hilbert import linalg
from mtlab.hilbert.geometry import CLOSED, ChainGeometry
from mtlab.hilbert.operators import (
    DensityMatrix, GlobalOperator, embed, ghz_state, partial_trace,
    state_metrics,
)
from mtlab.info import measures
from mtlab.info.measures import (
    LN2, cmi, conditional_entropy, entropy, fannes_bound, fannes_sharp,
    markov_gap_scan, mutual_information, relative_entropy,
)
from mtlab.info.states import canonical_markov_state, full_rank_mix, random_state


def diag_state(*p):
    g = ChainGeometry((len(p),))
    return DensityMatrix(g.all_sites(), np.diag(p))


def singletons(g):
    return [g.sites([i]) for i in range(g.n)]


class EntropyTest(SimpleTestCase):
    def test_pure_state(self):
        """Pure states have zero entropy."""
        g = ChainGeometry.qubits(1)
        assert entropy(DensityMatrix.pure(g.all_sites(), [1, 0])).value == 0.0

    def test_maximally_mixed_qubit(self):
        """1/2 on a qubit has entropy ln 2, one bit."""
        g = ChainGeometry.qubits(1)
        s = entropy(DensityMatrix.maximally_mixed(g.all_sites()))
        self.assertAlmostEqual(s.value, LN2, places=12)
        self.assertAlmostEqual(s.bits, 1.0, places=12)

    def test_biased_qubit(self):
        """diag(0.9, 0.1) has entropy 0.325083 nats."""
        self.assertAlmostEqual(entropy(diag_state(0.9, 0.1)).value, 0.325083, places=6)

    def test_negative_state_rejected(self):
        """A state with a clearly negative eigenvalue is refused."""
        g = ChainGeometry.qubits(1)
        bad = DensityMatrix(g.all_sites(), np.diag([1.1, -0.1]))
        with self.assertRaises(DomainError):
            entropy(bad)


class RelativeEntropyTest(SimpleTestCase):
    def test_against_uniform(self):
        """S(diag(1,0) ‖ 1/2) = ln 2."""
        value = relative_entropy(diag_state(1.0, 0.0), diag_state(0.5, 0.5))
        self.assertAlmostEqual(value.value, LN2, places=12)

    def test_support_violation_is_infinite(self):
        """S(1/2 ‖ diag(1,0)) = +inf."""
        value = relative_entropy(diag_state(0.5, 0.5), diag_state(1.0, 0.0))
        assert value.value == math.inf
        assert not value.finite

    def test_identical_states(self):
        """S(ρ‖ρ) vanishes."""
        rng = np.random.default_rng(3)
        rho = random_state(ChainGeometry.qubits(2).all_sites(), rng)
        self.assertAlmostEqual(relative_entropy(rho, rho).value, 0.0, places=10)

    def test_fidelity_lower_bound(self):
        """S(ρ‖σ) ≥ −2 ln F(ρ, σ) on random pairs."""
        rng = np.random.default_rng(4)
        sites = ChainGeometry.qubits(2).all_sites()
        for _ in range(50):
            rho, sigma = random_state(sites, rng), random_state(sites, rng)
            f = state_metrics(rho, sigma).fidelity
            assert relative_entropy(rho, sigma).value >= -2 * math.log(f) - 1e-9

    def test_pinsker(self):
        """Pinsker's inequality holds on random pairs."""
        rng = np.random.default_rng(5)
        sites = ChainGeometry.qubits(2).all_sites()
        for _ in range(50):
            rho, sigma = random_state(sites, rng), random_state(sites, rng)
            assert relative_entropy(rho, sigma).value >= measures.pinsker_bound(rho, sigma) - 1e-9


class CMITest(SimpleTestCase):
    def test_ghz_cmi_is_ln2(self):
        """GHZ states on 4, 6 and 8 qubits have I(A:C|B) = ln 2 for every contiguous split."""
        for n in (4, 6, 8):
            g = ChainGeometry.qubits(n)
            rho = ghz_state(g)
            for i in range(1, n - 1):
                for j in range(i + 1, n):
                    value = cmi(rho, g.interval(0, i), g.interval(i, j), g.interval(j, n))
                    self.assertAlmostEqual(value.value, LN2, places=9, msg=(n, i, j))

    def test_ghz_traced_is_markov(self):
        """Tracing one GHZ qubit leaves a classical Markov chain."""
        g = ChainGeometry.qubits(4)
        rho = ghz_state(g)
        value = cmi(rho, g.sites([0]), g.sites([1]), g.sites([2]))
        self.assertAlmostEqual(value.value, 0.0, places=9)

    def test_product_state(self):
        """A product state has zero CMI."""
        rng = np.random.default_rng(6)
        g = ChainGeometry.qubits(3)
        rho = DensityMatrix.product(*(random_state(s, rng) for s in singletons(g)))
        a, b, c = singletons(g)
        self.assertAlmostEqual(cmi(rho, a, b, c).value, 0.0, places=10)

    def test_strong_subadditivity(self):
        """I(A:C|B) ≥ 0 on 500 random states of 3 to 5 qubits."""
        rng = np.random.default_rng(7)
        for trial in range(500):
            n = 3 + trial % 3
            g = ChainGeometry.qubits(n)
            rho = random_state(g.all_sites(), rng, rank=int(rng.integers(1, 2 ** n + 1)))
            cut = sorted(rng.choice(np.arange(1, n), size=2, replace=False))
            a, b, c = g.interval(0, cut[0]), g.interval(cut[0], cut[1]), g.interval(cut[1], n)
            assert cmi(rho, a, b, c).value >= -1e-10

    def test_local_unitary_invariance(self):
        """Unitaries acting inside A, B or C leave I(A:C|B) unchanged."""
        rng = np.random.default_rng(8)
        g = ChainGeometry.qubits(4)
        rho = random_state(g.all_sites(), rng)
        a, b, c = g.interval(0, 1), g.interval(1, 3), g.interval(3, 4)
        before = cmi(rho, a, b, c).value
        u = embed(GlobalOperator(b, linalg.random_unitary(b.dim, rng)), g.all_sites()).matrix
        rotated = DensityMatrix(g.all_sites(), u @ rho.matrix @ u.conj().T)
        self.assertAlmostEqual(cmi(rotated, a, b, c).value, before, places=9)

    def test_chain_rule(self):
        """I(A:BC) = I(A:B) + I(A:C|B)."""
        rng = np.random.default_rng(9)
        g = ChainGeometry.qubits(4)
        rho = random_state(g.all_sites(), rng)
        a, b, c = g.sites([0]), g.sites([1, 2]), g.sites([3])
        lhs = mutual_information(rho, a, b | c).value
        rhs = mutual_information(rho, a, b).value + cmi(rho, a, b, c).value
        self.assertAlmostEqual(lhs, rhs, places=10)

    def test_mutual_information_monotone(self):
        """Discarding part of C never increases I(A:C)."""
        rng = np.random.default_rng(10)
        g = ChainGeometry.qubits(4)
        for _ in range(20):
            rho = random_state(g.all_sites(), rng)
            a = g.sites([0])
            assert (mutual_information(rho, a, g.sites([2, 3])).value
                    >= mutual_information(rho, a, g.sites([2])).value - 1e-10)

    def test_conditional_entropy_of_bell_pair(self):
        """S(A|B) = −ln 2 for a Bell pair."""
        g = ChainGeometry.qubits(2)
        rho = ghz_state(g)
        value = conditional_entropy(rho, g.sites([0]), g.sites([1]))
        self.assertAlmostEqual(value.value, -LN2, places=12)

    def test_overlapping_regions_rejected(self):
        """Overlapping A and B is a domain error."""
        g = ChainGeometry.qubits(3)
        rho = ghz_state(g)
        with self.assertRaises(DomainError):
            cmi(rho, g.sites([0, 1]), g.sites([1]), g.sites([2]))


class MarkovGapScanTest(SimpleTestCase):
    def test_canonical_markov_state(self):
        """A block-diagonal Markov state scans to ε ≈ 0."""
        rng = np.random.default_rng(11)
        g = ChainGeometry.qubits(6)
        rho = canonical_markov_state(g, 2, rng)
        blocks = [g.interval(0, 2), g.interval(2, 4), g.interval(4, 6)]
        report = markov_gap_scan(rho, blocks)
        assert len(report.per_cut) == 1
        self.assertAlmostEqual(report.epsilon, 0.0, places=9)

    def test_ghz_conventions(self):
        """GHZ_6 scans to ln 2 open and closed, and 0 uniform."""
        g = ChainGeometry.qubits(6, CLOSED)
        rho = ghz_state(g)
        blocks = singletons(g)
        self.assertAlmostEqual(markov_gap_scan(rho, blocks, 'open').epsilon, LN2, places=9)
        closed = markov_gap_scan(rho, blocks, 'closed')
        assert len(closed.per_cut) == 6
        self.assertAlmostEqual(closed.epsilon, LN2, places=9)
        self.assertAlmostEqual(markov_gap_scan(rho, blocks, 'uniform').epsilon, 0.0, places=9)

    def test_mutual_info_convention(self):
        """For GHZ every site shares ln 2 with the rest."""
        g = ChainGeometry.qubits(4, CLOSED)
        report = markov_gap_scan(ghz_state(g), singletons(g), 'mutual-info')
        self.assertAlmostEqual(report.epsilon, LN2, places=9)

    def test_report_json(self):
        """The report serialises every cut and the maximum."""
        g = ChainGeometry.qubits(4)
        data = markov_gap_scan(ghz_state(g), singletons(g)).to_json()
        self.assertEqual(data['convention'], 'open')
        self.assertEqual([c['cut_index'] for c in data['per_cut']], [1, 2])

    def test_too_few_blocks(self):
        """Two blocks are not a chain."""
        g = ChainGeometry.qubits(2)
        with self.assertRaises(DomainError):
            markov_gap_scan(ghz_state(g), singletons(g))

    def test_blocks_must_partition(self):
        """Blocks that miss a site are refused."""
        g = ChainGeometry.qubits(4)
        with self.assertRaises(DomainError):
            markov_gap_scan(ghz_state(g), singletons(g)[:3])


class ContinuityTest(SimpleTestCase):
    def test_fannes_values(self):
        """The simplified and sharp bounds at known points."""
        self.assertAlmostEqual(fannes_bound(0.01, LN2), 6 * 0.1 * LN2, places=12)
        self.assertAlmostEqual(fannes_sharp(0.0, LN2), 0.0, places=12)
        with self.assertRaises(DomainError):
            fannes_sharp(0.6, LN2)
        with self.assertRaises(DomainError):
            fannes_bound(1.5, LN2)

    def test_fannes_dominates(self):
        """The simplified bound covers |ΔS(A|B)| for nearby random states."""
        rng = np.random.default_rng(12)
        g = ChainGeometry.qubits(3)
        a, b = g.sites([0]), g.sites([1, 2])
        for _ in range(100):
            rho = random_state(g.all_sites(), rng)
            t = float(rng.uniform(0, 0.2))
            sigma = DensityMatrix(
                g.all_sites(),
                (1 - t) * rho.matrix + t * random_state(g.all_sites(), rng).matrix,
            )
            delta = min(state_metrics(rho, sigma).trace_distance, 1.0)
            diff = abs(conditional_entropy(rho, a, b).value
                       - conditional_entropy(sigma, a, b).value)
            assert diff <= fannes_bound(delta, a.log_dim) + 1e-10


class StatesTest(SimpleTestCase):
    def test_full_rank_mix(self):
        """The default mixing weight is 2/d and the result is full rank."""
        g = ChainGeometry.qubits(3)
        mixed = full_rank_mix(ghz_state(g))
        assert mixed.eigenvalues()[0] >= (2 / 8) / 8 - 1e-12
        self.assertAlmostEqual(mixed.trace().real, 1.0, places=12)

    def test_markov_state_reductions(self):
        """The label site of the canonical Markov state is diagonal."""
        rng = np.random.default_rng(13)
        g = ChainGeometry.qubits(4)
        rho = canonical_markov_state(g, 1, rng)
        label = partial_trace(rho, g.sites([1])).matrix
        self.assertAlmostEqual(abs(label[0, 1]), 0.0, places=12)
        with self.assertRaises(DomainError):
            canonical_markov_state(g, 0, rng)
