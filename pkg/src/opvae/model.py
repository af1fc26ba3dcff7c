"""Stochastic operator model: branch-trunk decoder, Gaussian encoder, losses.

The decoder predicts u(y) as the inner product of p branch outputs
(computed from the observation code and a latent draw) with p trunk
outputs (computed from the query point), defining a Gaussian likelihood
whose per-point variance is M * noise_var.  Scaling the artificial noise
with the grid size M makes the reconstruction term of the objective a
grid-mean squared error divided by (2 * noise_var), i.e. invariant to
grid refinement; the equivalent continuum noise scale is
sqrt(domain volume) * sqrt(noise_var).

The encoder maps (code, u on the training grid) to a diagonal Gaussian
over the latent variable; it emits log-variances, exponentiated, so the
variance is positive for any finite input.  The deterministic baseline
mode ("vidon") drops the latent channel and trains on plain mean squared
error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .autodiff import Tensor, as_tensor, concat
from .embedding import EmbedParams, embed_batch, _named_mlp
from .errors import ConfigError, ContractError, TrainingError
from .nn import Mlp, mlp_init

__all__ = ["DecoderParams", "EncoderParams", "OperatorModel", "ObservationBatch",
           "decode", "encode", "reparam_sample", "kl_gauss",
           "elbo_loss", "vidon_forward", "vidon_loss", "LossParts"]


class DecoderParams:
    """Branch and trunk networks plus the artificial-noise variance."""

    def __init__(self, branch: Mlp, trunk: Mlp, latent_dim: int, noise_var: float):
        if branch.out_dim != trunk.out_dim:
            raise ConfigError(
                f"branch and trunk must share the truncation rank "
                f"({branch.out_dim} vs {trunk.out_dim})")
        if noise_var <= 0:
            raise ConfigError(f"noise_var must be > 0, got {noise_var}")
        if latent_dim < 0:
            raise ConfigError(f"latent_dim must be >= 0, got {latent_dim}")
        self.branch = branch
        self.trunk = trunk
        self.latent_dim = latent_dim
        self.noise_var = noise_var

    @property
    def rank(self) -> int:
        return self.branch.out_dim

    @property
    def code_dim(self) -> int:
        return self.branch.in_dim - self.latent_dim


class EncoderParams:
    """Network mapping (code, u-bar) to latent mean and log-variances."""

    def __init__(self, net: Mlp, latent_dim: int):
        if latent_dim < 1:
            raise ConfigError(f"encoder latent_dim must be >= 1, got {latent_dim}")
        if net.out_dim != 2 * latent_dim:
            raise ConfigError(
                f"encoder must emit 2*latent_dim = {2 * latent_dim} values, got {net.out_dim}")
        self.net = net
        self.latent_dim = latent_dim

    @property
    def in_dim(self) -> int:
        return self.net.in_dim


def decode(code, z, points, dec: DecoderParams) -> Tensor:
    """Predicted values at `points` for one observation code and latent draw.

    The branch runs once on [code || z]; the trunk runs per point; the
    prediction is the rank-p inner product of the two.
    """
    code = as_tensor(code)
    pieces = [code.reshape(1, code.size)]
    if dec.latent_dim > 0:
        z = as_tensor(z)
        if z.size != dec.latent_dim:
            raise ConfigError(f"latent draw has size {z.size}, decoder expects {dec.latent_dim}")
        pieces.append(z.reshape(1, z.size))
    branch_out = dec.branch(concat(pieces, axis=1))          # (1, p)
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    trunk_out = dec.trunk(Tensor(pts))                       # (M, p)
    return (branch_out @ trunk_out.T).reshape(pts.shape[0])


def encode(code, u_bar, enc: EncoderParams) -> tuple[Tensor, Tensor]:
    """Latent posterior (mean, diagonal variance) for one (code, u-bar) pair."""
    code = as_tensor(code)
    u = as_tensor(u_bar)
    expected = enc.in_dim - code.size
    if u.size != expected:
        raise ConfigError(f"u-bar has {u.size} values, encoder expects {expected}")
    out = enc.net(concat([code.reshape(1, code.size), u.reshape(1, u.size)], axis=1))
    d = enc.latent_dim
    mu = out[:, :d].reshape(d)
    var = out[:, d:].reshape(d).exp()
    return mu, var


def reparam_sample(mu, var, rng: np.random.Generator) -> Tensor:
    """z = mu + sqrt(var) * xi with xi standard normal; differentiable in both."""
    mu = as_tensor(mu)
    var = as_tensor(var)
    xi = rngmod.normals(rng, mu.shape)
    return mu + var.sqrt() * Tensor(xi)


def kl_gauss(mu, var) -> Tensor:
    """KL(N(mu, diag(var)) || N(0, I)) = (-sum log var + sum var + |mu|^2 - d) / 2."""
    mu = as_tensor(mu)
    var = as_tensor(var)
    d = float(mu.size)
    return ((-var.log().sum()) + var.sum() + (mu * mu).sum() - d) * 0.5


@dataclass
class ObservationBatch:
    """Training mini-batch: B observation sets (shared sensor count) plus outputs.

    locations : (B, m, d)  sensor coordinates, each row in canonical order
    values    : (B, m)     observed input-function values
    outputs   : (B, M)     u on the shared training grid
    """

    locations: np.ndarray
    values: np.ndarray
    outputs: np.ndarray

    @property
    def size(self) -> int:
        return self.outputs.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]


@dataclass
class LossParts:
    """Scalar loss on the tape plus its already-detached decomposition."""

    loss: Tensor
    kl: float
    recon: float        # reconstruction term as it enters the loss
    recon_mse: float    # grid-mean squared error; recon == recon_mse / (2 noise_var)


class OperatorModel:
    """Embedding + decoder (+ encoder) with a stable parameter ordering."""

    def __init__(self, embed: EmbedParams, decoder: DecoderParams,
                 encoder: EncoderParams | None):
        if decoder.branch.in_dim != embed.code_dim + decoder.latent_dim:
            raise ConfigError(
                f"branch input width {decoder.branch.in_dim} != code {embed.code_dim} "
                f"+ latent {decoder.latent_dim}")
        if encoder is not None and encoder.latent_dim != decoder.latent_dim:
            raise ConfigError("encoder and decoder disagree on the latent dimension")
        self.embed = embed
        self.decoder = decoder
        self.encoder = encoder

    @property
    def is_stochastic(self) -> bool:
        return self.encoder is not None

    def named_parameters(self) -> list:
        out = list(self.embed.named_parameters())
        out.extend(_named_mlp("decoder.branch", self.decoder.branch))
        out.extend(_named_mlp("decoder.trunk", self.decoder.trunk))
        if self.encoder is not None:
            out.extend(_named_mlp("encoder", self.encoder.net))
        return out

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    @staticmethod
    def from_config(cfg, train_points: int, seed: int) -> "OperatorModel":
        """Build all networks for a config; `train_points` is the u-grid size M."""
        loc_dim = 2 if cfg.is_2d else 1
        embed = EmbedParams.init(
            loc_dim, cfg.embed_dim, cfg.heads, cfg.head_dim,
            [cfg.loc_hidden] * cfg.loc_layers, [cfg.val_hidden] * cfg.val_layers,
            [cfg.attn_hidden] * cfg.attn_layers, [cfg.value_hidden] * cfg.value_layers,
            seed)
        stochastic = cfg.model == "cvae"
        latent = cfg.latent_dim if stochastic else 0
        branch = mlp_init([embed.code_dim + latent] + [cfg.branch_hidden] * cfg.branch_layers
                          + [cfg.rank], rngmod.derive(seed, "branch"))
        trunk = mlp_init([loc_dim] + [cfg.trunk_hidden] * cfg.trunk_layers + [cfg.rank],
                         rngmod.derive(seed, "trunk"))
        decoder = DecoderParams(branch, trunk, latent, cfg.noise_var)
        encoder = None
        if stochastic:
            enc_net = mlp_init([embed.code_dim + train_points]
                               + [cfg.encoder_hidden] * cfg.encoder_layers
                               + [2 * cfg.latent_dim], rngmod.derive(seed, "encoder"))
            encoder = EncoderParams(enc_net, cfg.latent_dim)
        return OperatorModel(embed, decoder, encoder)


def _trunk_outputs(model: OperatorModel, points: np.ndarray) -> Tensor:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    return model.decoder.trunk(Tensor(pts))


def _batch_predictions(model: OperatorModel, batch: ObservationBatch,
                       z: Tensor | None, grid_points: np.ndarray) -> Tensor:
    codes = embed_batch(batch.locations, batch.values, model.embed)     # (B, e)
    branch_in = concat([codes, z], axis=1) if z is not None else codes
    branch_out = model.decoder.branch(branch_in)                        # (B, p)
    trunk_out = _trunk_outputs(model, grid_points)                      # (M, p)
    return branch_out @ trunk_out.T                                     # (B, M)


def elbo_loss(batch: ObservationBatch, model: OperatorModel, grid_points: np.ndarray,
              rng: np.random.Generator, beta: float = 1.0) -> LossParts:
    """Negative ELBO over a mini-batch, one latent draw per sample.

    loss = beta * mean_i KL(q_i || N(0, I)) + mse / (2 * noise_var), where
    mse is the squared error summed over batch and grid divided by B * M.
    """
    if batch.size < 1:
        raise ContractError("elbo_loss needs a nonempty batch")
    if model.encoder is None:
        raise ContractError("elbo_loss requires a stochastic model; use vidon_loss instead")
    b, m_pts = batch.outputs.shape
    d = model.encoder.latent_dim

    codes = embed_batch(batch.locations, batch.values, model.embed)
    enc_out = model.encoder.net(concat([codes, Tensor(batch.outputs)], axis=1))
    mu = enc_out[:, :d]
    logvar = enc_out[:, d:]

    xi = Tensor(rngmod.normals(rng, (b, d)))
    z = mu + (logvar * 0.5).exp() * xi

    branch_out = model.decoder.branch(concat([codes, z], axis=1))
    trunk_out = _trunk_outputs(model, grid_points)
    preds = branch_out @ trunk_out.T

    resid = preds - Tensor(batch.outputs)
    mse = (resid * resid).sum() / float(b * m_pts)
    recon = mse / (2.0 * model.decoder.noise_var)

    kl_per = ((-logvar.sum(axis=1)) + logvar.exp().sum(axis=1)
              + (mu * mu).sum(axis=1) - float(d)) * 0.5
    kl_mean = kl_per.sum() / float(b)

    loss = kl_mean * beta + recon
    if not np.isfinite(loss.data):
        bad = np.where(~np.isfinite(np.sum(resid.data**2, axis=1)))[0]
        which = int(bad[0]) if bad.size else -1
        raise TrainingError(f"non-finite loss (first bad batch sample index {which})")
    return LossParts(loss, float(kl_mean.data), float(recon.data), float(mse.data))


def vidon_forward(code, points, dec: DecoderParams) -> Tensor:
    """Deterministic branch-trunk prediction from the code alone."""
    if dec.latent_dim != 0:
        raise ConfigError("vidon_forward requires a decoder without a latent channel")
    return decode(code, None, points, dec)


def vidon_loss(batch: ObservationBatch, model: OperatorModel,
               grid_points: np.ndarray) -> LossParts:
    """Mean squared error over batch and grid for the deterministic mode."""
    if batch.size < 1:
        raise ContractError("vidon_loss needs a nonempty batch")
    preds = _batch_predictions(model, batch, None, grid_points)
    resid = preds - Tensor(batch.outputs)
    mse = (resid * resid).sum() / float(batch.outputs.size)
    if not np.isfinite(mse.data):
        raise TrainingError("non-finite loss in deterministic mode")
    return LossParts(mse, 0.0, float(mse.data), float(mse.data))
