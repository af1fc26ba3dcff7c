"""MLP construction/forward and the Adam update recurrences."""

import numpy as np
import pytest

from opvae import rng as rngmod
from opvae.autodiff import Tensor
from opvae.errors import ConfigError, ShapeError, TrainingError
from opvae.nn import adam_init, adam_step, mlp_forward, mlp_init


class TestMlpInit:
    def test_reproducible_under_seed(self):
        a = mlp_init([1, 40, 40, 2], rngmod.make_rng(7))
        b = mlp_init([1, 40, 40, 2], rngmod.make_rng(7))
        for (wa, ba_), (wb, bb) in zip(a.layers, b.layers):
            assert np.array_equal(wa.data, wb.data)
            assert np.array_equal(ba_.data, bb.data)

    def test_degenerate_sizes_rejected(self):
        with pytest.raises(ConfigError):
            mlp_init([1], rngmod.make_rng(0))
        with pytest.raises(ConfigError):
            mlp_init([2, 0, 1], rngmod.make_rng(0))

    def test_parameter_count_hand_value(self):
        # [2,64,64,64,64,1]: 2*64+64 + 3*(64*64+64) + 64+1 = 12,737
        net = mlp_init([2, 64, 64, 64, 64, 1], rngmod.make_rng(1))
        assert net.num_params() == 12737

    def test_init_bounds_and_zero_bias(self):
        net = mlp_init([3, 10, 2], rngmod.make_rng(2))
        w0, b0 = net.layers[0]
        bound = np.sqrt(6.0 / (3 + 10))
        assert np.all(np.abs(w0.data) <= bound)
        assert np.array_equal(b0.data, np.zeros(10))


class TestMlpForward:
    def test_zero_weights_output_is_bias(self):
        net = mlp_init([2, 4, 3], rngmod.make_rng(3))
        for w, _ in net.layers:
            w.data[:] = 0.0
        net.layers[-1][1].data[:] = [1.0, -2.0, 0.5]
        out = mlp_forward(net, np.array([[0.3, -0.7], [5.0, 2.0]]))
        np.testing.assert_array_equal(out.data, [[1.0, -2.0, 0.5]] * 2)

    def test_single_linear_layer_exact(self):
        net = mlp_init([2, 2], rngmod.make_rng(4))
        w, b = net.layers[0]
        w.data[:] = [[1.0, 2.0], [3.0, 4.0]]
        b.data[:] = [0.5, -0.5]
        out = mlp_forward(net, np.array([1.0, -1.0]))
        np.testing.assert_allclose(out.data, [1.0 - 3.0 + 0.5, 2.0 - 4.0 - 0.5])

    def test_two_layer_hand_evaluation(self):
        # x=0.5 -> h = tanh(0.5 * [2, -1]) -> y = h . [1, 3] + 0.25
        net = mlp_init([1, 2, 1], rngmod.make_rng(5))
        net.layers[0][0].data[:] = [[2.0, -1.0]]
        net.layers[0][1].data[:] = 0.0
        net.layers[1][0].data[:] = [[1.0], [3.0]]
        net.layers[1][1].data[:] = [0.25]
        h = np.tanh(np.array([1.0, -0.5]))
        expected = h[0] * 1.0 + h[1] * 3.0 + 0.25
        out = mlp_forward(net, np.array([0.5]))
        np.testing.assert_allclose(out.data, [expected], rtol=1e-15)

    def test_shape_mismatch(self):
        net = mlp_init([3, 2], rngmod.make_rng(6))
        with pytest.raises(ShapeError):
            mlp_forward(net, np.zeros((4, 2)))


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
        state = adam_init([p], lr=0.1)
        adam_step([p], [np.zeros(2)], state)
        np.testing.assert_array_equal(p.data, [1.0, -2.0])
        assert state.step == 1

    def test_first_step_magnitude_hand_recurrence(self):
        # m1 = (1-b1) g, v1 = (1-b2) g^2; bias-corrected: m^ = g, v^ = g^2
        # update = lr * g / (|g| + eps) ~ lr * sign(g)
        lr, g = 1e-2, 0.7
        p = Tensor(np.array([0.0]), requires_grad=True)
        state = adam_init([p], lr=lr)
        adam_step([p], [np.array([g])], state)
        expected = -lr * g / (abs(g) + 1e-8)
        np.testing.assert_allclose(p.data, [expected], rtol=1e-12)
        assert abs(abs(p.data[0]) - lr) < 1e-8

    def test_two_identical_runs_identical(self):
        def run():
            p = Tensor(np.array([0.3, -0.4]), requires_grad=True)
            state = adam_init([p], lr=1e-3)
            for i in range(5):
                adam_step([p], [np.array([0.1 * i, -0.2])], state)
            return p.data

        assert np.array_equal(run(), run())

    def test_lr_zero_is_identity(self):
        p = Tensor(np.array([1.23]), requires_grad=True)
        state = adam_init([p], lr=0.0)
        for _ in range(3):
            adam_step([p], [np.array([4.2])], state)
        np.testing.assert_array_equal(p.data, [1.23])

    def test_nonfinite_gradient_names_step(self):
        p = Tensor(np.array([0.0]), requires_grad=True)
        state = adam_init([p], lr=1e-3)
        with pytest.raises(TrainingError, match="step 1"):
            adam_step([p], [np.array([np.nan])], state)
