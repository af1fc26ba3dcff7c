"""Permutation-invariant embedding of variable-size observation sets.

Each sensor (location, value) pair maps to a shared latent space through
two networks whose outputs are summed; multi-head attention pooling then
collapses the per-sensor latents into a fixed-size code.  Per head l the
pooled output is sum_i softmax_i(w_l(L_i) / sqrt(d_emb)) * v_l(L_i), and
the head outputs are concatenated, so the code dimension is
heads * head_dim regardless of how many sensors were observed.

Permutation invariance is enforced bit-exactly, not just mathematically:
sensors are first sorted by a canonical key (location lexicographic,
then value), which pins the floating-point accumulation order.
"""

from __future__ import annotations

import numpy as np

from . import rng as rngmod
from .autodiff import Tensor, as_tensor, concat, softmax
from .errors import ConfigError, ContractError
from .fields import SensorSet
from .nn import Mlp, mlp_init

__all__ = ["EmbedParams", "embed_sensor", "attention_pool", "embed_observations",
           "embed_batch"]


class EmbedParams:
    """Networks of the set embedding: location/value maps plus H attention heads.

    loc_net : location (d coords) -> R^{d_emb}
    val_net : sensor value (1)    -> R^{d_emb}
    weight_nets[l] : R^{d_emb} -> R      (attention score)
    value_nets[l]  : R^{d_emb} -> R^{q}  (head value projection)
    """

    def __init__(self, loc_net: Mlp, val_net: Mlp, weight_nets: list[Mlp],
                 value_nets: list[Mlp]):
        if loc_net.out_dim != val_net.out_dim:
            raise ConfigError(
                f"location and value networks must share the embedding width "
                f"({loc_net.out_dim} vs {val_net.out_dim})")
        if len(weight_nets) != len(value_nets) or not weight_nets:
            raise ConfigError("need the same positive number of weight and value networks")
        d_emb = loc_net.out_dim
        for w in weight_nets:
            if w.in_dim != d_emb or w.out_dim != 1:
                raise ConfigError("each weight network must map the embedding to a scalar")
        q = value_nets[0].out_dim
        for v in value_nets:
            if v.in_dim != d_emb or v.out_dim != q:
                raise ConfigError("value networks must share input and output widths")
        self.loc_net = loc_net
        self.val_net = val_net
        self.weight_nets = weight_nets
        self.value_nets = value_nets

    @property
    def d_emb(self) -> int:
        return self.loc_net.out_dim

    @property
    def heads(self) -> int:
        return len(self.weight_nets)

    @property
    def head_dim(self) -> int:
        return self.value_nets[0].out_dim

    @property
    def code_dim(self) -> int:
        return self.heads * self.head_dim

    def named_parameters(self) -> list:
        out = []
        for prefix, net in (("embed.loc", self.loc_net), ("embed.val", self.val_net)):
            out.extend(_named_mlp(prefix, net))
        for l, net in enumerate(self.weight_nets):
            out.extend(_named_mlp(f"embed.attn{l}", net))
        for l, net in enumerate(self.value_nets):
            out.extend(_named_mlp(f"embed.value{l}", net))
        return out

    @staticmethod
    def init(loc_dim: int, d_emb: int, heads: int, head_dim: int,
             loc_sizes: list[int], val_sizes: list[int],
             attn_sizes: list[int], value_sizes: list[int],
             seed: int) -> "EmbedParams":
        """Build all networks from hidden-layer size lists and a seed."""
        loc_net = mlp_init([loc_dim] + loc_sizes + [d_emb], rngmod.derive(seed, "embed.loc"))
        val_net = mlp_init([1] + val_sizes + [d_emb], rngmod.derive(seed, "embed.val"))
        weight_nets = [mlp_init([d_emb] + attn_sizes + [1], rngmod.derive(seed, "embed.attn", l))
                       for l in range(heads)]
        value_nets = [mlp_init([d_emb] + value_sizes + [head_dim],
                               rngmod.derive(seed, "embed.value", l))
                      for l in range(heads)]
        return EmbedParams(loc_net, val_net, weight_nets, value_nets)


def _named_mlp(prefix: str, net: Mlp) -> list:
    out = []
    for i, (w, b) in enumerate(net.layers):
        out.append((f"{prefix}.{i}.w", w))
        out.append((f"{prefix}.{i}.b", b))
    return out


def embed_sensor(x, value, params: EmbedParams) -> Tensor:
    """Latent vector of a single sensor: loc_net(x) + val_net(value)."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    loc = params.loc_net(Tensor(x.reshape(1, -1)))
    val = params.val_net(Tensor(np.asarray([[float(value)]])))
    return (loc + val).reshape(params.d_emb)


def attention_pool(latents: Tensor, params: EmbedParams) -> Tensor:
    """Pool (m, d_emb) per-sensor latents into the (heads * head_dim,) code."""
    latents = as_tensor(latents)
    if latents.ndim != 2 or latents.shape[0] < 1:
        raise ContractError(f"attention_pool needs a nonempty (m, d_emb) input, got {latents.shape}")
    pooled = _pool(latents, params, batch=1, m=latents.shape[0])
    return pooled.reshape(params.code_dim)


def _pool(latents: Tensor, params: EmbedParams, batch: int, m: int) -> Tensor:
    """Shared pooling core: latents is (batch*m, d_emb), returns (batch, H*q)."""
    scale = 1.0 / np.sqrt(params.d_emb)
    heads = []
    for w_net, v_net in zip(params.weight_nets, params.value_nets):
        scores = (w_net(latents) * scale).reshape(batch, m)
        alpha = softmax(scores, axis=1)
        values = v_net(latents).reshape(batch, m, params.head_dim)
        weighted = alpha.reshape(batch, m, 1) * values
        heads.append(weighted.sum(axis=1))
    return concat(heads, axis=1)


def embed_observations(obs: SensorSet, params: EmbedParams) -> Tensor:
    """Fixed-size code of an observation set; order-independent bit-for-bit."""
    obs = obs.sorted()
    latents = params.loc_net(Tensor(obs.locations)) + params.val_net(Tensor(obs.values[:, None]))
    return _pool(latents, params, batch=1, m=obs.m).reshape(params.code_dim)


def embed_batch(locations: np.ndarray, values: np.ndarray, params: EmbedParams) -> Tensor:
    """Embed a batch of observation sets sharing one sensor count.

    `locations` is (B, m, d), `values` is (B, m); each sample must already
    be in canonical sensor order (the batch builders guarantee this).
    Returns the (B, heads * head_dim) code matrix.
    """
    b, m, d = locations.shape
    flat_loc = Tensor(locations.reshape(b * m, d))
    flat_val = Tensor(values.reshape(b * m, 1))
    latents = params.loc_net(flat_loc) + params.val_net(flat_val)
    return _pool(latents, params, batch=b, m=m)
