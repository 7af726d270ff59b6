import math

import numpy as np
from django.test import SimpleTestCase

from mtlab.beliefprop.araki import (
    araki_expansional, araki_locality_profile, flow_locality_profile,
)
from mtlab.beliefprop.bounds import BoundConstants
from mtlab.beliefprop.flow import bp_filter, bp_flow, filter_weights, localize_flow
from mtlab.exceptions import DomainError
from mtlab.hilbert import linalg
from mtlab.hilbert.geometry import ChainGeometry
from mtlab.hilbert.operators import GlobalOperator
from mtlab.thermal.hamiltonians import PAULI_X, PAULI_Z, build_preset


def random_pair(n, rng, v_sites=None, v_scale=1.0):
    g = ChainGeometry.qubits(n)
    support = g.all_sites()
    h0 = GlobalOperator(support, linalg.random_hermitian(support.dim, rng), hermitian=True)
    vs = support if v_sites is None else g.sites(v_sites)
    v = GlobalOperator(vs, linalg.random_hermitian(vs.dim, rng, v_scale), hermitian=True)
    return h0, v


def diagonal_pair(n, rng):
    g = ChainGeometry.qubits(n)
    support = g.all_sites()
    d = support.dim
    h0 = GlobalOperator(support, np.diag(rng.normal(size=d)), hermitian=True)
    v = GlobalOperator(support, np.diag(rng.uniform(-1, 1, size=d)), hermitian=True)
    return h0, v


def split_bond(h, sites):
    bond = next(t for t in h.terms if t.support.indices == sites)
    return h.without([bond]), bond


class FilterTest(SimpleTestCase):
    def test_qubit_example(self):
        """For H = Z and V = X at β = 1 the filter gives tanh(1)·X."""
        g = ChainGeometry.qubits(1)
        h = GlobalOperator(g.all_sites(), PAULI_Z, hermitian=True)
        v = GlobalOperator(g.all_sites(), PAULI_X, hermitian=True)
        phi = bp_filter(h, v, 1.0)
        np.testing.assert_allclose(phi.matrix, math.tanh(1.0) * PAULI_X, atol=1e-14)
        self.assertAlmostEqual(math.tanh(1.0), 0.76159, places=5)

    def test_weights_at_zero(self):
        """The filter is 1 at zero gap and even in the gap."""
        w = filter_weights(np.array([0.0, 1e-9, -3.0, 3.0]), 2.0)
        self.assertEqual(w[0], 1.0)
        self.assertAlmostEqual(w[1], 1.0, places=12)
        self.assertAlmostEqual(w[2], w[3], places=15)
        self.assertAlmostEqual(w[3], math.tanh(3.0) / 3.0, places=15)

    def test_commuting_and_high_temperature(self):
        """Commuting V passes unchanged, as does any V at β = 0."""
        rng = np.random.default_rng(0)
        h0, v = diagonal_pair(2, rng)
        np.testing.assert_allclose(bp_filter(h0, v, 2.0).matrix, v.matrix, atol=1e-12)
        h0, v = random_pair(2, rng)
        np.testing.assert_allclose(bp_filter(h0, v, 0.0).matrix, v.matrix, atol=1e-12)

    def test_norm_does_not_grow(self):
        """‖Φ‖ ≤ ‖V‖ on random instances."""
        rng = np.random.default_rng(1)
        for beta in (0.5, 1.0, 2.0, 5.0):
            for _ in range(10):
                h0, v = random_pair(3, rng, v_sites=[1, 2])
                phi = bp_filter(h0, v, beta)
                assert phi.hermitian
                assert phi.norm() <= v.norm() + 1e-9

    def test_v_outside_support(self):
        """V must live inside the support of H."""
        g = ChainGeometry.qubits(2)
        h = GlobalOperator(g.sites([0]), PAULI_Z, hermitian=True)
        v = GlobalOperator(g.sites([1]), PAULI_X, hermitian=True)
        with self.assertRaises(DomainError):
            bp_filter(h, v, 1.0)


class FlowTest(SimpleTestCase):
    def test_zero_perturbation(self):
        """V = 0 gives O = 1 exactly."""
        g = ChainGeometry.qubits(2)
        support = g.all_sites()
        h0 = GlobalOperator(support, np.diag([1.0, -0.5, 0.3, 2.0]), hermitian=True)
        v = GlobalOperator(support, np.zeros((4, 4)), hermitian=True)
        flow = bp_flow(h0, v, 1.0)
        np.testing.assert_array_equal(flow.o.matrix, np.eye(4))
        self.assertEqual(flow.ode_residual, 0.0)
        assert flow.converged

    def test_commuting_closed_form(self):
        """Commuting V gives O = e^{−βV/2}."""
        rng = np.random.default_rng(2)
        for beta in (0.5, 1.0, 2.0):
            h0, v = diagonal_pair(2, rng)
            flow = bp_flow(h0, v, beta, ode_tol=1e-10)
            expected = linalg.expm_h(v.matrix, -0.5 * beta)
            np.testing.assert_allclose(flow.o.matrix, expected, atol=1e-8)

    def test_random_flows(self):
        """Random 2-3 qubit flows reproduce the perturbed Gibbs operator."""
        rng = np.random.default_rng(3)
        for k in range(50):
            beta = (0.5, 1.0, 2.0)[k % 3]
            h0, v = random_pair(2 + k % 2, rng)
            flow = bp_flow(h0, v, beta, ode_tol=1e-9)
            assert flow.converged
            assert flow.ode_residual <= 1e-6
            assert flow.norm_ok
            assert flow.inverse_residual <= 1e-7

    def test_agrees_with_expansional(self):
        """O and E_r conjugate e^{−βH0} into the same operator."""
        rng = np.random.default_rng(4)
        h0, v = random_pair(3, rng, v_sites=[1])
        beta = 1.0
        flow = bp_flow(h0, v, beta, ode_tol=1e-9)
        e_r = araki_expansional(h0, v, beta).e_r.matrix
        rho0 = linalg.expm_h(h0.matrix, -beta)
        a = flow.o.matrix @ rho0 @ flow.o.matrix.conj().T
        b = e_r @ rho0 @ e_r.conj().T
        assert linalg.trace_norm(a - b) / linalg.trace_norm(b) <= 1e-8

    def test_bad_inputs(self):
        """Negative β and non-Hermitian generators are refused."""
        rng = np.random.default_rng(5)
        h0, v = random_pair(2, rng)
        with self.assertRaises(DomainError):
            bp_flow(h0, v, -1.0)
        skew = GlobalOperator(v.support, 1j * v.matrix)
        with self.assertRaises(DomainError):
            bp_flow(h0, skew, 1.0)


class LocalizeTest(SimpleTestCase):
    def setUp(self):
        g = ChainGeometry.qubits(8)
        self.h0, self.v = split_bond(build_preset('tfim', g), (3, 4))
        self.flow = bp_flow(self.h0.operator, self.v, 1.0)

    def test_full_region(self):
        """Localizing onto the whole chain changes nothing."""
        local = localize_flow(self.flow, self.flow.support)
        assert local.error <= 1e-9
        self.assertEqual(local.l, 3)
        assert math.isnan(local.predicted_err)

    def test_profile_non_increasing(self):
        """The truncation error does not grow with l."""
        constants = BoundConstants(1.0, 1.0, 1.0, 2.0)
        profile = flow_locality_profile(self.flow, range(4), constants)
        assert profile.monotone
        self.assertEqual([r.l for r in profile.rows], [0, 1, 2, 3])
        self.assertAlmostEqual(profile.rows[2].predicted_err, constants.predicted_err(2))
        self.assertEqual(len(profile.to_rows(constants)[0]), 5)

    def test_high_temperature(self):
        """At β = 0 both the flow and its localization are the identity."""
        flow = bp_flow(self.h0.operator, self.v, 0.0)
        local = localize_flow(flow, l=0)
        np.testing.assert_array_equal(flow.o.matrix, np.eye(256))
        np.testing.assert_array_equal(local.o.matrix, np.eye(4))
        self.assertEqual(local.error, 0.0)

    def test_region_must_contain_v(self):
        """A region missing part of V is a domain error."""
        g = self.flow.support.geometry
        with self.assertRaises(DomainError):
            localize_flow(self.flow, g.sites([2, 3]))
        with self.assertRaises(DomainError):
            localize_flow(self.flow)


class BoundConstantsTest(SimpleTestCase):
    def test_derived_values(self):
        """Derived constants follow from the four parameters."""
        c = BoundConstants(beta=1.0, J=2.0, c_prime=0.5, v=3.0, xi=2.0)
        q1 = 0.5 / (1 + 1.5 / math.pi)
        k = 0.5 * math.exp(0.75 * 2.0)
        self.assertAlmostEqual(c.q1, q1, places=14)
        self.assertAlmostEqual(c.K, k, places=12)
        self.assertAlmostEqual(c.C1, 4 * k * (math.e + k) ** 3, places=8)
        self.assertAlmostEqual(c.C2, 2 * c.C1 / (1 - math.exp(-1)), places=8)
        self.assertEqual(c.l0, math.ceil((math.log(c.C1) + 1) / q1))
        assert c.C1 * math.exp(-c.q1 * c.l0) <= math.exp(-1) + 1e-12
        self.assertAlmostEqual(c.q, min(q1, c.p_rate, 0.5) / math.sqrt(3), places=14)
        assert 0 < c.p_lower_bound < 1

    def test_bounds_decay(self):
        """Every bound shrinks as l grows."""
        c = BoundConstants(beta=0.5, J=1.0, c_prime=1.0, v=1.0, xi=1.0)
        for f in (c.predicted_err, c.lemma1_bound, c.lemma2_bound):
            assert f(5) < f(1)
        assert c.theorem4_bound(20) < c.theorem4_bound(2)
        assert c.theorem4_bound(3, p=1.0) < c.theorem4_bound(3)
        assert c.cmi_bound(100) < c.cmi_bound(10)
        with self.assertRaises(DomainError):
            c.theorem4_bound(3, p=0.0)

    def test_invalid(self):
        """c' must be positive and the velocity non-negative."""
        with self.assertRaises(DomainError):
            BoundConstants(1.0, 1.0, 0.0, 1.0)
        with self.assertRaises(DomainError):
            BoundConstants(1.0, 1.0, 1.0, -1.0)

    def test_fit_recovers_constants(self):
        """Fitting exact K·e^{−q1·l} data returns the generating constants."""
        truth = BoundConstants(beta=1.0, J=1.0, c_prime=0.7, v=1.5)
        ls = [0, 1, 2, 3, 4]
        fitted = BoundConstants.fit(1.0, 1.0, ls, [truth.predicted_err(l) for l in ls])
        self.assertAlmostEqual(fitted.c_prime, 0.7, places=6)
        self.assertAlmostEqual(fitted.v, 1.5, places=6)

    def test_fit_needs_decay(self):
        """Flat or too few errors cannot be fitted."""
        with self.assertRaises(DomainError):
            BoundConstants.fit(1.0, 1.0, [0, 1, 2], [1e-3, 1e-3, 2e-3])
        with self.assertRaises(DomainError):
            BoundConstants.fit(1.0, 1.0, [0, 1], [1e-3, 1e-20])


class ArakiTest(SimpleTestCase):
    def test_zero_perturbation(self):
        """V = 0 gives E_r = E_l = 1."""
        rng = np.random.default_rng(6)
        h, v = random_pair(2, rng)
        out = araki_expansional(h, v.scaled(0.0), 1.0)
        np.testing.assert_allclose(out.e_r.matrix, np.eye(4), atol=1e-12)
        np.testing.assert_allclose(out.e_l.matrix, np.eye(4), atol=1e-12)

    def test_commuting(self):
        """Commuting V gives E_r = e^{−βV/2}."""
        rng = np.random.default_rng(7)
        h, v = diagonal_pair(2, rng)
        out = araki_expansional(h, v, 2.0)
        np.testing.assert_allclose(out.e_r.matrix, linalg.expm_h(v.matrix, -1.0), atol=1e-12)

    def test_identity_on_random_instances(self):
        """E_r e^{−βH} E_r† = e^{−β(H+V)} and E_l inverts E_r."""
        rng = np.random.default_rng(8)
        for k in range(50):
            h, v = random_pair(2, rng)
            out = araki_expansional(h, v, (0.5, 1.0, 2.0)[k % 3])
            assert out.identity_residual <= 1e-9
            assert out.inverse_residual <= 1e-9

    def test_tfim_profile(self):
        """The TFIM truncation error falls faster than exponentially."""
        g = ChainGeometry.qubits(10)
        h, v = split_bond(build_preset('tfim', g), (4, 5))
        profile = araki_locality_profile(h, v, 1.0, range(5))
        assert profile.strictly_decreasing
        assert profile.log_convex
        assert profile.errors[-1] <= 1e-12
        assert profile.errors[0] > 1e-6

    def test_decoupled_profile(self):
        """With nothing touching V the truncation is exact."""
        rng = np.random.default_rng(9)
        g = ChainGeometry.qubits(6)
        h = build_preset('decoupled', g, seed=9)
        v = GlobalOperator(g.sites([2, 3]), linalg.random_hermitian(4, rng), hermitian=True)
        profile = araki_locality_profile(h, v, 1.0, [0, 1, 2])
        assert max(profile.errors) <= 1e-12
        assert profile.monotone

    def test_negative_distance(self):
        """Distances must be non-negative."""
        g = ChainGeometry.qubits(4)
        h, v = split_bond(build_preset('tfim', g), (1, 2))
        with self.assertRaises(DomainError):
            araki_locality_profile(h, v, 1.0, [-1, 0])
