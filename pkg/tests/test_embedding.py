"""Set embedding: hand-checked pooling, bit-exact permutation invariance,
and gradients through the attention."""

import itertools

import numpy as np
import pytest

from opvae import rng as rngmod
from opvae.autodiff import Tensor, grad_check
from opvae.embedding import EmbedParams, attention_pool, embed_batch, embed_observations, embed_sensor
from opvae.errors import ConfigError, ContractError
from opvae.fields import SensorSet
from opvae.nn import mlp_init


def tiny_params(d_emb=4, heads=2, q=3, seed=0, loc_dim=1):
    return EmbedParams.init(loc_dim, d_emb, heads, q, [8], [8], [8], [8], seed)


def zero_net(net, bias=None):
    for w, _ in net.layers:
        w.data[:] = 0.0
    if bias is not None:
        net.layers[-1][1].data[:] = bias


class TestEmbedSensor:
    def test_zero_weight_networks_sum_biases(self):
        params = tiny_params()
        zero_net(params.loc_net, bias=[1.0, 2.0, 3.0, 4.0])
        zero_net(params.val_net, bias=[0.5, 0.5, 0.5, 0.5])
        out = embed_sensor(0.3, 7.7, params)
        np.testing.assert_array_equal(out.data, [1.5, 2.5, 3.5, 4.5])

    def test_swapping_sensor_pairs_swaps_embeddings(self):
        params = tiny_params(seed=3)
        a = embed_sensor(0.2, 1.5, params).data
        b = embed_sensor(-0.4, 0.3, params).data
        a2 = embed_sensor(0.2, 1.5, params).data
        assert np.array_equal(a, a2)
        assert not np.array_equal(a, b)

    def test_hand_one_layer_network(self):
        # Single linear layers: loc W=[[1,0],[...]]; value W=[[2, -1]]
        loc = mlp_init([1, 2], rngmod.make_rng(0))
        val = mlp_init([1, 2], rngmod.make_rng(0))
        loc.layers[0][0].data[:] = [[1.0, -2.0]]
        loc.layers[0][1].data[:] = [0.1, 0.2]
        val.layers[0][0].data[:] = [[2.0, -1.0]]
        val.layers[0][1].data[:] = [0.0, 0.0]
        w = mlp_init([2, 1], rngmod.make_rng(0))
        v = mlp_init([2, 2], rngmod.make_rng(0))
        params = EmbedParams(loc, val, [w], [v])
        out = embed_sensor(0.5, 2.0, params)
        # loc(0.5) = [0.6, -0.8]; val(2.0) = [4.0, -2.0]; sum = [4.6, -2.8]
        np.testing.assert_allclose(out.data, [4.6, -2.8], rtol=1e-15)

    def test_mismatched_widths_rejected(self):
        loc = mlp_init([1, 3], rngmod.make_rng(0))
        val = mlp_init([1, 4], rngmod.make_rng(0))
        w = mlp_init([3, 1], rngmod.make_rng(0))
        v = mlp_init([3, 2], rngmod.make_rng(0))
        with pytest.raises(ConfigError):
            EmbedParams(loc, val, [w], [v])


class TestAttentionPool:
    def test_single_sensor_returns_value_projection(self):
        params = tiny_params(seed=5)
        lat = embed_sensor(0.1, 0.7, params)
        pooled = attention_pool(lat.reshape(1, params.d_emb), params)
        expected = np.concatenate([net(lat.reshape(1, params.d_emb)).data[0]
                                   for net in params.value_nets])
        np.testing.assert_allclose(pooled.data, expected, rtol=1e-12)

    def test_duplicate_sensors_collapse_to_single(self):
        params = tiny_params(seed=6)
        lat = embed_sensor(0.1, 0.7, params).data
        single = attention_pool(Tensor(lat[None, :]), params).data
        double = attention_pool(Tensor(np.vstack([lat, lat])), params).data
        np.testing.assert_allclose(double, single, rtol=1e-12)

    def test_hand_softmax_weights(self):
        # Two sensors with scores (0, ln2 * sqrt(d_emb)) -> weights (1/3, 2/3).
        d_emb = 4
        loc = mlp_init([1, d_emb], rngmod.make_rng(1))
        val = mlp_init([1, d_emb], rngmod.make_rng(1))
        w = mlp_init([d_emb, 1], rngmod.make_rng(1))
        v = mlp_init([d_emb, 3], rngmod.make_rng(1))
        params = EmbedParams(loc, val, [w], [v])
        lat = np.array([[0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]])
        zero_net(w, bias=[0.0])
        w.layers[0][0].data[:, 0] = [np.log(2.0) * np.sqrt(d_emb), 0.0, 0.0, 0.0]
        v_of = lambda row: v(Tensor(row[None, :])).data[0]
        expected = (1.0 / 3.0) * v_of(lat[0]) + (2.0 / 3.0) * v_of(lat[1])
        pooled = attention_pool(Tensor(lat), params)
        np.testing.assert_allclose(pooled.data, expected, rtol=1e-12)

    def test_empty_set_rejected(self):
        params = tiny_params()
        with pytest.raises(ContractError):
            attention_pool(Tensor(np.zeros((0, 4))), params)


class TestEmbedObservations:
    def test_bit_exact_permutation_invariance(self):
        params = tiny_params(seed=7)
        rng = np.random.default_rng(0)
        locs = rng.uniform(-1, 1, (5, 1))
        vals = rng.uniform(0.1, 3.0, 5)
        base = embed_observations(SensorSet(locs, vals), params).data
        for perm in itertools.permutations(range(5)):
            out = embed_observations(SensorSet(locs[list(perm)], vals[list(perm)]), params).data
            assert np.array_equal(out, base)

    def test_code_size_independent_of_m(self):
        params = tiny_params(seed=8)
        rng = np.random.default_rng(1)
        for m in (3, 7):
            obs = SensorSet(rng.uniform(-1, 1, (m, 1)), rng.uniform(0.5, 2, m))
            assert embed_observations(obs, params).data.shape == (params.code_dim,)

    def test_gradients_through_pooling_match_finite_differences(self):
        params = tiny_params(seed=9)
        rng = np.random.default_rng(2)
        obs = SensorSet(rng.uniform(-1, 1, (3, 1)), rng.uniform(0.5, 2, 3))
        weights = np.arange(1.0, params.code_dim + 1.0)
        all_params = [p for _, p in params.named_parameters()]

        def f():
            return (embed_observations(obs, params) * Tensor(weights)).sum()

        assert grad_check(f, all_params, step=1e-5) < 1e-4

    def test_batch_embed_matches_per_sample(self):
        params = tiny_params(seed=10)
        rng = np.random.default_rng(3)
        locs = rng.uniform(-1, 1, (4, 3, 1))
        vals = rng.uniform(0.5, 2.0, (4, 3))
        # canonical order per sample
        for i in range(4):
            order = SensorSet(locs[i], vals[i]).canonical_order()
            locs[i] = locs[i][order]
            vals[i] = vals[i][order]
        batch_codes = embed_batch(locs, vals, params).data
        for i in range(4):
            single = embed_observations(SensorSet(locs[i], vals[i]), params).data
            np.testing.assert_allclose(batch_codes[i], single, rtol=1e-12, atol=1e-14)

    def test_softmax_weights_positive_and_normalized(self):
        # The pooled output of constant value nets must reproduce the constant:
        # weights sum to one regardless of scores.
        params = tiny_params(seed=11)
        for net in params.value_nets:
            zero_net(net, bias=[2.0, -1.0, 0.5])
        rng = np.random.default_rng(4)
        obs = SensorSet(rng.uniform(-1, 1, (6, 1)), rng.uniform(0.5, 2, 6))
        out = embed_observations(obs, params).data
        np.testing.assert_allclose(out, np.tile([2.0, -1.0, 0.5], params.heads), atol=1e-12)
