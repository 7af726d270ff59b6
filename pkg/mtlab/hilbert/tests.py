import math

import numpy as np
from django.test import SimpleTestCase

from mtlab.exceptions import DimensionCapError, DomainError, NumericDomainError
from mtlab.hilbert import channels, linalg, serialization
from mtlab.hilbert.geometry import CLOSED, ChainGeometry, shields, sites_distance
from mtlab.hilbert.operators import (
    DensityMatrix, GlobalOperator, embed, ghz_state, hermitian_fn, partial_trace,
    reduce_operator, state_metrics, tensor_embed,
)


Z = np.diag([1.0, -1.0])
X = np.array([[0.0, 1.0], [1.0, 0.0]])


def random_state(geometry, rng, rank=None):
    sites = geometry.all_sites()
    return DensityMatrix(sites, linalg.random_density(sites.dim, rng, rank))


class GeometryTest(SimpleTestCase):
    def test_site_sets_sorted(self):
        """Site sets are stored sorted and reject duplicates."""
        g = ChainGeometry.qubits(5)
        assert g.sites([3, 1]).indices == (1, 3)
        with self.assertRaises(DomainError):
            g.sites([1, 1])
        with self.assertRaises(DomainError):
            g.sites([5])

    def test_closed_arc(self):
        """A wrapping set is contiguous on a ring but not on an open chain."""
        ring = ChainGeometry.qubits(6, CLOSED)
        self.assertEqual(ring.sites([0, 1, 5]).arc(), (5, 0, 1))
        self.assertEqual(ring.sites([5, 0]).diameter(), 1)
        self.assertIsNone(ChainGeometry.qubits(6).sites([0, 1, 5]).arc())

    def test_shields(self):
        """B shields A from C on chains and rings."""
        g = ChainGeometry.qubits(6)
        a, b, c = g.sites([0, 1]), g.sites([2]), g.sites([3, 4, 5])
        assert shields(a, b, c)
        assert not shields(a, g.sites([3]), g.sites([2, 4]))
        ring = ChainGeometry.qubits(6, CLOSED)
        a, b, c = ring.sites([0]), ring.sites([1]), ring.sites([2, 3])
        assert not shields(a, b, c)
        assert shields(a, ring.sites([1, 5]), ring.sites([2, 3, 4]))

    def test_grown(self):
        """Growing a region stops at open ends and wraps on a ring."""
        g = ChainGeometry.qubits(6)
        self.assertEqual(g.sites([2, 3]).grown(1).indices, (1, 2, 3, 4))
        self.assertEqual(g.sites([0]).grown(2).indices, (0, 1, 2))
        ring = ChainGeometry.qubits(6, CLOSED)
        self.assertEqual(ring.sites([0]).grown(1).indices, (0, 1, 5))
        with self.assertRaises(DomainError):
            g.sites([0]).grown(-1)

    def test_sites_distance(self):
        """Distances between regions take the shorter way round a ring."""
        g = ChainGeometry.qubits(6)
        self.assertEqual(sites_distance(g.sites([0]), g.sites([3, 4])), 3)
        ring = ChainGeometry.qubits(6, CLOSED)
        self.assertEqual(sites_distance(ring.sites([0]), ring.sites([4])), 2)
        with self.assertRaises(DomainError):
            sites_distance(g.sites([0]), g.sites([0]) - g.sites([0]))

    def test_dimension_cap(self):
        """Operators above the configured cap are refused."""
        g = ChainGeometry.qubits(3)
        with self.settings(MTLAB_MAX_DIM=4):
            with self.assertRaises(DimensionCapError):
                GlobalOperator(g.all_sites(), np.eye(8))


class EmbedTest(SimpleTestCase):
    def test_site_zero_is_slow_index(self):
        """Z on site 0 of two qubits embeds to diag(1, 1, -1, -1)."""
        g = ChainGeometry.qubits(2)
        op = tensor_embed(GlobalOperator(g.sites([0]), Z), g)
        np.testing.assert_allclose(op.matrix, np.diag([1, 1, -1, -1]))

    def test_identity_embeds_to_identity(self):
        """The identity on site 1 embeds to the 4x4 identity."""
        g = ChainGeometry.qubits(2)
        op = tensor_embed(GlobalOperator(g.sites([1]), np.eye(2)), g)
        np.testing.assert_allclose(op.matrix, np.eye(4))

    def test_spectrum_unchanged(self):
        """Embedding multiplies each eigenvalue's multiplicity by the complement dimension."""
        rng = np.random.default_rng(1)
        g = ChainGeometry.qubits(4)
        h = linalg.random_hermitian(4, rng)
        op = tensor_embed(GlobalOperator(g.sites([1, 2]), h, hermitian=True), g)
        expected = np.sort(np.repeat(np.linalg.eigvalsh(h), 4))
        np.testing.assert_allclose(np.linalg.eigvalsh(op.matrix), expected, atol=1e-12)

    def test_non_adjacent_embedding(self):
        """Embedding on sites {0, 2} agrees with an explicit Kronecker product."""
        g = ChainGeometry.qubits(3)
        op = tensor_embed(GlobalOperator(g.sites([0, 2]), np.kron(Z, X)), g)
        np.testing.assert_allclose(op.matrix, linalg.kron_all([Z, np.eye(2), X]))

    def test_embed_then_trace_recovers(self):
        """Tracing an embedded operator back divides out the complement dimension."""
        rng = np.random.default_rng(2)
        g = ChainGeometry.qubits(4)
        h = GlobalOperator(g.sites([1, 3]), linalg.random_hermitian(4, rng))
        full = tensor_embed(h, g)
        back = reduce_operator(full, g.sites([1, 3])).matrix / 4
        np.testing.assert_allclose(back, h.matrix, atol=1e-12)

    def test_not_subset(self):
        """Embedding into a smaller support is a domain error."""
        g = ChainGeometry.qubits(3)
        op = GlobalOperator(g.sites([0, 1]), np.eye(4))
        with self.assertRaises(DomainError):
            embed(op, g.sites([1, 2]))


class PartialTraceTest(SimpleTestCase):
    def test_bell_marginal(self):
        """A Bell pair has a maximally mixed marginal."""
        g = ChainGeometry.qubits(2)
        bell = DensityMatrix.pure(g.all_sites(), np.array([1, 0, 0, 1]))
        np.testing.assert_allclose(partial_trace(bell, g.sites([0])).matrix, np.eye(2) / 2)

    def test_product_marginal(self):
        """The marginal of a product state is the factor."""
        rng = np.random.default_rng(3)
        g = ChainGeometry.qubits(3)
        a = DensityMatrix(g.sites([0]), linalg.random_density(2, rng))
        b = DensityMatrix(g.sites([1, 2]), linalg.random_density(4, rng))
        rho = DensityMatrix.product(a, b)
        np.testing.assert_allclose(partial_trace(rho, g.sites([0])).matrix, a.matrix, atol=1e-12)
        np.testing.assert_allclose(partial_trace(rho, g.sites([1, 2])).matrix, b.matrix, atol=1e-12)

    def test_ghz_marginal(self):
        """GHZ_4 on three qubits is the classical cat mixture."""
        g = ChainGeometry.qubits(4)
        reduced = partial_trace(ghz_state(g), g.sites([0, 1, 2]))
        expected = np.zeros((8, 8))
        expected[0, 0] = expected[7, 7] = 0.5
        np.testing.assert_allclose(reduced.matrix, expected, atol=1e-15)

    def test_traces_compose(self):
        """Tracing B then C equals tracing BC at once."""
        rng = np.random.default_rng(4)
        g = ChainGeometry.qubits(5)
        rho = random_state(g, rng)
        step = partial_trace(partial_trace(rho, g.sites([0, 1, 3, 4])), g.sites([0, 3]))
        direct = partial_trace(rho, g.sites([0, 3]))
        np.testing.assert_allclose(step.matrix, direct.matrix, atol=1e-12)
        self.assertAlmostEqual(direct.trace().real, 1.0, delta=1e-12)


class HermitianFnTest(SimpleTestCase):
    def test_exp_zero(self):
        """exp(0) is the identity."""
        g = ChainGeometry.qubits(2)
        out = hermitian_fn(GlobalOperator(g.all_sites(), np.zeros((4, 4))), 'exp')
        np.testing.assert_allclose(out.matrix, np.eye(4))

    def test_log_exp_round_trip(self):
        """log(exp(H)) returns H for a random 8x8 Hermitian matrix."""
        rng = np.random.default_rng(5)
        g = ChainGeometry.qubits(3)
        h = GlobalOperator(g.all_sites(), linalg.random_hermitian(8, rng, scale=5.0))
        back = hermitian_fn(hermitian_fn(h, 'exp'), 'log')
        np.testing.assert_allclose(back.matrix, h.matrix, atol=1e-10)

    def test_sqrt(self):
        """sqrt(diag(4, 9)) is diag(2, 3)."""
        g = ChainGeometry.qubits(1)
        out = hermitian_fn(GlobalOperator(g.all_sites(), np.diag([4.0, 9.0])), 'sqrt')
        np.testing.assert_allclose(out.matrix, np.diag([2.0, 3.0]), atol=1e-12)

    def test_log_domain(self):
        """log refuses negative and singular input unless asked for the support."""
        g = ChainGeometry.qubits(1)
        with self.assertRaises(NumericDomainError):
            hermitian_fn(GlobalOperator(g.all_sites(), np.diag([1.0, -1.0])), 'log')
        singular = GlobalOperator(g.all_sites(), np.diag([1.0, 0.0]))
        with self.assertRaises(NumericDomainError):
            hermitian_fn(singular, 'log')
        out = hermitian_fn(singular, 'log', pseudo_inverse=True)
        np.testing.assert_allclose(out.matrix, np.zeros((2, 2)), atol=1e-15)

    def test_sign_is_unitary(self):
        """sign() of a Hermitian matrix squares to the identity."""
        rng = np.random.default_rng(6)
        g = ChainGeometry.qubits(2)
        s = hermitian_fn(GlobalOperator(g.all_sites(), linalg.random_hermitian(4, rng)), 'sign')
        np.testing.assert_allclose(s.matrix @ s.matrix, np.eye(4), atol=1e-12)


class MetricsTest(SimpleTestCase):
    def test_equal_states(self):
        """Identical states are at distance 0 with fidelity 1."""
        rng = np.random.default_rng(7)
        rho = random_state(ChainGeometry.qubits(2), rng)
        m = state_metrics(rho, rho)
        self.assertAlmostEqual(m.trace_distance, 0.0, delta=1e-12)
        self.assertAlmostEqual(m.fidelity, 1.0, delta=1e-9)

    def test_orthogonal_states(self):
        """Orthogonal pure states are at distance 2 with fidelity 0."""
        g = ChainGeometry.qubits(1)
        a = DensityMatrix.pure(g.all_sites(), np.array([1, 0]))
        b = DensityMatrix.pure(g.all_sites(), np.array([0, 1]))
        m = state_metrics(a, b)
        self.assertAlmostEqual(m.trace_distance, 2.0, delta=1e-12)
        self.assertAlmostEqual(m.fidelity, 0.0, delta=1e-9)

    def test_diagonal_distance(self):
        """diag(.6, .4) and diag(.5, .5) are at unhalved distance 0.2."""
        g = ChainGeometry.qubits(1)
        a = DensityMatrix(g.all_sites(), np.diag([0.6, 0.4]))
        b = DensityMatrix(g.all_sites(), np.diag([0.5, 0.5]))
        self.assertAlmostEqual(state_metrics(a, b).trace_distance, 0.2, delta=1e-12)

    def test_fuchs_van_de_graaf(self):
        """1 - F <= ½‖ρ - σ‖₁ <= sqrt(1 - F²) on random pairs."""
        rng = np.random.default_rng(8)
        g = ChainGeometry.qubits(2)
        for _ in range(50):
            rank = int(rng.integers(1, 5))
            a, b = random_state(g, rng, rank), random_state(g, rng)
            m = state_metrics(a, b)
            half = m.trace_distance / 2
            assert 1 - m.fidelity <= half + 1e-9
            assert half <= math.sqrt(max(1 - m.fidelity ** 2, 0.0)) + 1e-9


class ChannelTest(SimpleTestCase):
    def setUp(self):
        self.g = ChainGeometry.qubits(3)
        self.rng = np.random.default_rng(9)

    def test_identity(self):
        """The identity channel leaves states unchanged and validates."""
        rho = random_state(self.g, self.rng)
        ch = channels.identity_channel(self.g.sites([1]))
        out = channels.channel_apply(ch, rho)
        np.testing.assert_allclose(out.matrix, rho.matrix, atol=1e-14)
        report = channels.channel_validate(ch)
        assert report.cp
        assert report.tp_defect <= 1e-12
        assert report.choi_min_eig >= -1e-12

    def test_replace(self):
        """A replace channel outputs its state regardless of the input."""
        sigma = DensityMatrix(self.g.sites([2]), linalg.random_density(2, self.rng))
        ch = channels.replace_channel(self.g.sites([2]), sigma)
        rho = random_state(self.g, self.rng)
        out = channels.channel_apply(ch, rho)
        np.testing.assert_allclose(
            partial_trace(out, self.g.sites([2])).matrix, sigma.matrix, atol=1e-12
        )
        np.testing.assert_allclose(
            partial_trace(out, self.g.sites([0, 1])).matrix,
            partial_trace(rho, self.g.sites([0, 1])).matrix,
            atol=1e-12,
        )

    def test_kraus_from_choi(self):
        """Kraus operators read off the Choi matrix rebuild the same channel."""
        sites = self.g.sites([1])
        choi = channels.choi_matrix(channels.depolarizing_channel(sites, 0.3))
        ops = channels.kraus_from_choi(choi, 2, 2)
        self.assertEqual(len(ops), 4)
        rebuilt = channels.KrausChannel(sites, sites, ops)
        np.testing.assert_allclose(channels.choi_matrix(rebuilt), choi, atol=1e-12)

    def test_depolarizing(self):
        """Full depolarization of a qubit gives the maximally mixed state."""
        g = ChainGeometry.qubits(1)
        rho = random_state(g, self.rng)
        out = channels.depolarizing_channel(g.all_sites(), 1.0).apply(rho)
        np.testing.assert_allclose(out.matrix, np.eye(2) / 2, atol=1e-14)

    def test_scaled_identity_defect(self):
        """The single Kraus operator 0.5·1 has trace defect 0.75."""
        g = ChainGeometry.qubits(1)
        ch = channels.KrausChannel(g.all_sites(), g.all_sites(), [0.5 * np.eye(2)], kind='tni')
        report = channels.channel_validate(ch)
        assert report.cp
        self.assertAlmostEqual(report.tp_defect, 0.75, delta=1e-12)
        assert report.trace_non_increasing

    def test_split_unitary(self):
        """Kraus operators U/√2, U/√2 form a trace-preserving channel."""
        g = ChainGeometry.qubits(1)
        u = linalg.random_unitary(2, self.rng)
        ch = channels.KrausChannel(g.all_sites(), g.all_sites(), [u / math.sqrt(2)] * 2)
        assert channels.channel_validate(ch).tp_defect <= 1e-12

    def test_tp_flag_verified(self):
        """A channel flagged trace-preserving must be."""
        g = ChainGeometry.qubits(1)
        with self.assertRaises(DomainError):
            channels.KrausChannel(g.all_sites(), g.all_sites(), [0.5 * np.eye(2)])

    def test_kraus_shape_mismatch(self):
        """Kraus operators must match the site dimensions."""
        with self.assertRaises(DomainError):
            channels.KrausChannel(self.g.sites([0]), self.g.sites([0]), [np.eye(4)])

    def test_composition_associative(self):
        """Applying a composition equals applying the channels in turn."""
        sites = self.g.sites([0, 1])
        chs = [
            channels.KrausChannel(sites, sites, [
                linalg.random_unitary(4, self.rng) * math.sqrt(p)
                for p in (0.3, 0.7)
            ])
            for _ in range(3)
        ]
        rho = random_state(self.g, self.rng)
        stepwise = chs[2].apply(chs[1].apply(chs[0].apply(rho)))
        left = chs[0].then(chs[1]).then(chs[2]).apply(rho)
        right = chs[0].then(chs[1].then(chs[2])).apply(rho)
        np.testing.assert_allclose(left.matrix, stepwise.matrix, atol=1e-12)
        np.testing.assert_allclose(right.matrix, stepwise.matrix, atol=1e-12)

    def test_choi_kraus_consistency(self):
        """Kraus operators recovered from a composite's Choi matrix reproduce it."""
        sigma = DensityMatrix(self.g.sites([1]), linalg.random_density(2, self.rng))
        ch = channels.trace_channel(self.g.sites([0])).then(
            channels.prepare_channel(DensityMatrix(self.g.sites([0]), np.eye(2) / 2))
        ).then(channels.replace_channel(self.g.sites([1]), sigma))
        flat = channels.KrausChannel(ch.input, ch.output, ch.kraus)
        rho = random_state(self.g, self.rng)
        np.testing.assert_allclose(flat.apply(rho).matrix, ch.apply(rho).matrix, atol=1e-10)
        assert channels.channel_validate(ch).trace_preserving

    def test_output_growth(self):
        """A channel from one site to two grows the support."""
        sigma = DensityMatrix(self.g.sites([2]), np.diag([1.0, 0.0]))
        rho = DensityMatrix(self.g.sites([0, 1]), linalg.random_density(4, self.rng))
        ch = channels.prepare_channel(sigma).widened(self.g.sites([1]))
        out = ch.apply(rho)
        self.assertEqual(out.support, self.g.all_sites())
        np.testing.assert_allclose(
            out.matrix, np.kron(rho.matrix, np.diag([1.0, 0.0])), atol=1e-14
        )


class SerializationTest(SimpleTestCase):
    def test_binary_layout(self):
        """The binary block starts with the rank and shape as uint64."""
        m = np.array([[1 + 2j, 0], [0, 3]])
        data = serialization.to_bytes(m)
        assert data[:8] == (2).to_bytes(8, 'little')
        assert len(data) == 8 * 3 + 16 * 4
        np.testing.assert_array_equal(serialization.from_bytes(data), m)

    def test_json_pairs(self):
        """JSON matrices are nested [re, im] pairs."""
        m = np.array([[1 + 2j, 0], [0, 3]])
        doc = serialization.to_json(m)
        self.assertEqual(doc[0][0], [1.0, 2.0])
        np.testing.assert_array_equal(serialization.from_json(doc), m)
