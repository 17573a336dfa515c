import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apnet import analysis
from apnet.analysis import (decompose_k1, delta_rate, e_rate, integral_error, k_c, l_c, lyapunov,
                            lyapunov_rate, perturbations, settling_time, ultimate_bound,
                            weighted_average)
from apnet.errors import (BoundUndefinedError, ConstancyError, DecompositionError,
                          NoActiveSensingError)
from apnet.graph import build_graph, path_graph
from apnet.network import Gains, WeightConfig, input_vector
from apnet.signals import ConstantInput, ConstantWeight, PiecewiseLinearWeight, SinusoidInput
from apnet.verify import random_network

LAMBDA_P2 = (3 - np.sqrt(5)) / 2  # lambda_min of [[2, -1], [-1, 1]]


def fig2_k2(low):
    k2 = np.zeros((4, 4))
    k2[0, :2] = 1.0, low
    k2[1, 2:] = low, 1.0
    return k2


C_FIG2 = np.array([1.0, 1.0, 0.5, 2.0])


class TestWeightedAverage:
    def test_heterogeneous(self):
        # (1 + 0.1 + 0.05 + 2) / 2.2
        assert weighted_average(fig2_k2(0.1), C_FIG2) == pytest.approx(3.15 / 2.2, abs=1e-15)

    def test_identical(self):
        assert weighted_average(fig2_k2(1.0), C_FIG2) == pytest.approx(1.125, abs=1e-15)

    def test_zero_weight(self):
        with pytest.raises(NoActiveSensingError):
            weighted_average(np.zeros((2, 2)), [1.0, 0.0])
        with pytest.raises(ArithmeticError):
            weighted_average(np.zeros((2, 2)), [1.0, 0.0])

    def test_delta(self):
        np.testing.assert_array_equal(analysis.delta([1.0, 2.0], 1.5), [-0.5, 0.5])


class TestLc:
    def test_three_agents(self):
        k2 = np.array([[1.0, 0, 0], [1.0, 1.0, 0], [0, 0, 0]])
        k1 = k2.sum(axis=1)
        expected = np.array([[1, 1, 1], [2, 2, 2], [0, 0, 0]]) / 3 - np.eye(3)
        np.testing.assert_allclose(l_c(k1, k2), expected, atol=1e-15)
        np.testing.assert_allclose(l_c(np.diag(k1), k2), expected, atol=1e-15)

    def test_zero_weight(self):
        with pytest.raises(NoActiveSensingError):
            l_c(np.zeros(2), np.zeros((2, 2)))

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_column_sums_and_kc_action(self, seed):
        rng = np.random.default_rng(seed)
        g, inputs, cfg = random_network(rng, kinds="constant")
        k2 = cfg.k2(0.0)
        k1 = cfg.k1_diag(0.0)
        c = input_vector(inputs, g.n, 0.0)
        np.testing.assert_allclose(np.ones(g.n) @ l_c(k1, k2), 0.0, atol=1e-12)
        eps = weighted_average(k2, c)
        np.testing.assert_allclose(k_c(k1, k2) @ c, k1 * eps - k2 @ c, atol=1e-12)


class TestIntegralError:
    def test_two_agents_two_inputs(self):
        # K2 = I, c = (2, 0): eps = 1, K_c c = (1, 1) - (2, 0) = (-1, 1),
        # L+ (-1, 1) = (-0.5, 0.5), e = (1, 1) - (-0.5, 0.5)
        g = path_graph(2)
        k2 = np.eye(2)
        e = integral_error([1.0, 1.0], 1.0, g.pinv, k_c(np.ones(2), k2), [2.0, 0.0])
        np.testing.assert_allclose(e, [1.5, 0.5], atol=1e-15)

    def test_single_input_has_no_offset(self):
        g = path_graph(2)
        k2 = np.array([[1.0, 0.0], [0.5, 0.0]])
        e = integral_error([0.3, -0.2], 4.0, g.pinv, k_c(k2.sum(axis=1), k2), [2.0, 0.0])
        np.testing.assert_allclose(e, [0.3, -0.2], atol=1e-15)


class TestLyapunov:
    def test_examples(self):
        assert lyapunov([1.0, 0.0], [0.0, 0.0], Gains(2.0, 1.0)) == pytest.approx(0.25)
        assert lyapunov([0.0, 0.0], [1.0, 1.0], Gains(1.0, 2.0)) == pytest.approx(0.5)
        assert lyapunov([1.0, 2.0], [2.0, 0.0], Gains(1.0, 1.0)) == pytest.approx(4.5)

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_rate_equals_chain_rule(self, seed):
        rng = np.random.default_rng(seed)
        g, _, cfg = random_network(rng)
        n = g.n
        gains = Gains(float(rng.uniform(0.1, 10)), float(rng.uniform(0.1, 10)), float(rng.uniform(0, 2)))
        k1 = rng.uniform(0, 2, n)
        k1[0] = max(k1[0], 0.1)
        dec = decompose_k1(k1[None, :])
        d, e, s1, s2 = (rng.normal(size=n) for _ in range(4))
        chain = (d @ delta_rate(g, gains, dec, k1, d, e, s1) / gains.alpha
                 + e @ e_rate(g, gains, d, e, s2) / (gains.alpha * gains.gamma))
        assert lyapunov_rate(g, gains, dec, k1, d, e, s1, s2) == pytest.approx(chain, rel=1e-10, abs=1e-10)


class TestPerturbations:
    def test_single_agent_sinusoid(self):
        g = build_graph(1, [])
        cfg = WeightConfig(1, 1, {(0, 0): ConstantWeight(1.0)})
        inputs = [SinusoidInput(1.0, 1 / (2 * np.pi))]
        for t in (0.3, 1.0, 2.5):
            s1, s2 = perturbations(g, Gains(2.0, 3.0, 0.5), cfg, inputs, t, 1e-4)
            assert s1[0] == pytest.approx(-np.cos(t), abs=1e-8)
            assert s2[0] == 0.0

    def test_varying_weight_constant_inputs(self):
        # eps = (w + 3)/(w + 1) with w = t: d eps/dt = -2/(w + 1)^2
        g = path_graph(2)
        cfg = WeightConfig(2, 2, {(0, 0): PiecewiseLinearWeight([(0, 0), (1, 1)]),
                                  (1, 1): ConstantWeight(1.0)})
        inputs = [ConstantInput(1.0), ConstantInput(3.0)]
        s1, _ = perturbations(g, Gains(1.0, 1.0), cfg, inputs, 0.5, 1e-4, horizon=(0, 1))
        np.testing.assert_allclose(s1, 2 / 1.5 ** 2, atol=1e-8)

    def test_constant_signals_vanish(self):
        g = path_graph(3)
        cfg = WeightConfig(3, 2, {(0, 0): ConstantWeight(0.4), (2, 1): ConstantWeight(0.9)})
        inputs = [ConstantInput(1.0), ConstantInput(-2.0)]
        s1, s2 = perturbations(g, Gains(2.0, 3.0, 0.0), cfg, inputs, 1.0, 1e-3)
        np.testing.assert_allclose(s1, 0.0, atol=1e-12)
        np.testing.assert_allclose(s2, 0.0, atol=1e-12)

    def test_one_sided_at_horizon_start(self):
        g = build_graph(1, [])
        cfg = WeightConfig(1, 1, {(0, 0): ConstantWeight(1.0)})
        inputs = [SinusoidInput(1.0, 1 / (2 * np.pi))]
        s1, _ = perturbations(g, Gains(1.0, 1.0), cfg, inputs, 0.0, 1e-4, horizon=(0, 10))
        assert s1[0] == pytest.approx(-1.0, abs=1e-7)

    def test_no_active_sensing(self):
        g = path_graph(2)
        cfg = WeightConfig(2, 1, {(0, 0): ConstantWeight(0.0)})
        with pytest.raises(NoActiveSensingError):
            perturbations(g, Gains(1.0, 1.0), cfg, [ConstantInput(1.0)], 0.0, 1e-3)


class TestDecomposition:
    def test_constant_weights(self):
        dec = decompose_k1(np.array([[1.1, 1.1, 0.0, 0.0]]))
        assert dec.phi == pytest.approx(1.1)
        assert dec.index == 0
        np.testing.assert_array_equal(np.diag(dec.k0), [1.1, 0, 0, 0])
        np.testing.assert_allclose(dec.k_tilde([1.1, 1.1, 0, 0]), [0, 1.1, 0, 0])

    def test_varying_weight_infimum(self):
        t = np.linspace(0, 2 * np.pi, 2001)
        k1 = np.zeros((t.size, 3))
        k1[:, 0] = 0.5 + 0.5 * np.sin(t) ** 2
        k1[:, 2] = 0.2
        dec = decompose_k1(k1)
        assert dec.index == 0
        assert dec.phi == pytest.approx(0.5, abs=1e-9)

    def test_accepts_matrix_stack(self):
        k1 = np.stack([np.diag([0.0, 0.3]), np.diag([0.0, 0.6])])
        dec = decompose_k1(k1)
        assert (dec.index, dec.phi) == (1, 0.3)

    def test_no_persistent_agent(self):
        k1 = np.array([[1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(DecompositionError):
            decompose_k1(k1)


class TestUltimateBound:
    def setup_method(self):
        self.g = path_graph(2)
        self.dec = decompose_k1(np.array([[1.0, 0.0]]))

    def test_full_expression(self):
        est = ultimate_bound(self.g, Gains(2.0, 4.0, 0.5), self.dec, 0.1, 0.2, 0.3)
        first = 4 * 0.01 / (4 * LAMBDA_P2 ** 2)
        # a^2/g = 1, g s = 2: 0.04 + 2*0.06/2 + 0.09/4
        second = 0.04 + 0.06 + 0.0225
        assert est.lambda_min_f == pytest.approx(LAMBDA_P2, abs=1e-14)
        assert est.bound == pytest.approx(first + second, rel=1e-12)
        assert est.s1_star == pytest.approx(np.sqrt(2) * 0.1)
        assert est.s2_star == pytest.approx(2 * (2 * 0.2 + 0.3))

    def test_constant_signals_give_zero(self):
        assert ultimate_bound(self.g, Gains(5.0, 10.0, 0.0), self.dec, 0.0, 0.3, 0.0).bound == 0.0

    def test_no_leakage_with_constant_offset(self):
        est = ultimate_bound(self.g, Gains(1.0, 1.0, 0.0), self.dec, 0.2, 0.5, 0.0)
        assert est.bound == pytest.approx(4 * 0.04 / LAMBDA_P2 ** 2)

    def test_no_leakage_with_varying_offset(self):
        with pytest.raises(BoundUndefinedError):
            ultimate_bound(self.g, Gains(1.0, 1.0, 0.0), self.dec, 0.2, 0.5, 0.1)

    def test_larger_gains_tighten(self):
        lo = ultimate_bound(self.g, Gains(5, 50, 0.1), self.dec, 0.3, 0.2, 0.1).bound
        hi = ultimate_bound(self.g, Gains(20, 800, 0.1), self.dec, 0.3, 0.2, 0.1).bound
        assert hi < lo


class TestSuprema:
    def test_varying_inputs_constant_weights(self):
        g = path_graph(2)
        cfg = WeightConfig(2, 2, {(0, 0): ConstantWeight(1.0), (1, 1): ConstantWeight(1.0)})
        inputs = [SinusoidInput(1.0, 1 / (2 * np.pi)), ConstantInput(0.0)]
        ts = np.linspace(0, 2 * np.pi, 4001)
        eps_dot, p1, p2 = analysis.corollary_suprema("varying-inputs-constant-weights",
                                                     g, cfg, inputs, ts, 1e-4)
        # ||1'K2|| / 1'K2 1 = sqrt(2)/2; ||L+ K_c||_F = 0.5
        assert eps_dot == pytest.approx(np.sqrt(2) / 2, abs=1e-6)
        assert p1 == pytest.approx(0.5, abs=1e-6)
        assert p2 == pytest.approx(0.5, abs=1e-6)
        sampled = analysis.signal_suprema(g, cfg, inputs, ts, 1e-4)
        assert sampled.eps_dot_star == pytest.approx(0.5, abs=1e-6)
        assert sampled.eps_dot_star <= eps_dot
        assert sampled.p1_star <= p1 + 1e-9 and sampled.p2_star <= p2 + 1e-9

    def test_constant_inputs_varying_weights(self):
        g = path_graph(2)
        cfg = WeightConfig(2, 2, {(0, 0): PiecewiseLinearWeight([(0, 0), (1, 1)]),
                                  (1, 1): ConstantWeight(1.0)})
        inputs = [ConstantInput(1.0), ConstantInput(3.0)]
        ts = np.linspace(0, 1, 1001)
        eps_dot, p1, p2 = analysis.corollary_suprema("constant-inputs-varying-weights",
                                                     g, cfg, inputs, ts, 1e-4)
        assert eps_dot == pytest.approx(2.0, abs=1e-6)
        scale = np.linalg.norm(g.pinv, "fro") * np.sqrt(10)
        assert p1 == pytest.approx(scale * np.sqrt(2), rel=1e-9)
        assert p2 == pytest.approx(scale * 1.0, rel=1e-6)

    def test_constancy_checked(self):
        g = path_graph(2)
        cfg = WeightConfig(2, 1, {(0, 0): PiecewiseLinearWeight([(0, 0.2), (1, 1)])})
        inputs = [SinusoidInput(1.0, 1.0)]
        ts = np.linspace(0, 1, 11)
        with pytest.raises(ConstancyError):
            analysis.corollary_suprema("varying-inputs-constant-weights", g, cfg, inputs, ts, 1e-4)
        with pytest.raises(ConstancyError):
            analysis.corollary_suprema("constant-inputs-varying-weights", g, cfg, inputs, ts, 1e-4)
        with pytest.raises(ValueError):
            analysis.corollary_suprema("other", g, cfg, inputs, ts, 1e-4)

    def test_zero_weight_samples_flagged(self):
        g = path_graph(2)
        cfg = WeightConfig(2, 1, {(0, 0): PiecewiseLinearWeight([(0, 0), (1, 1)])})
        ts = np.linspace(0, 1, 11)
        sup = analysis.signal_suprema(g, cfg, [ConstantInput(1.0)], ts, 1e-3)
        assert sup.flagged >= 1
        assert np.isfinite(sup.eps_dot_star)


class TestSettlingTime:
    def test_examples(self):
        t = np.arange(5.0)
        assert settling_time(t, [5, 4, 1, 0.5, 0.2], 1.0) == 2.0
        assert settling_time(t, [0.1] * 5, 1.0) == 0.0
        assert settling_time(t, [0, 0, 0, 0, 2], 1.0) is None
        assert settling_time(t, [5, 0, 3, 0, 0], 1.0, valid=[1, 1, 0, 1, 1]) == 1.0
