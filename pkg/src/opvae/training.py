"""End-to-end training: sensor sampling, batch pregeneration, optimization,
and ensemble inference.

Training follows a fixed recipe: split the dataset into pregenerated
mini-batches, draw one sensor count per batch, sample sensor locations
(uniformly over the domain in 1-d; by greedy minimum-distance selection
over a shuffled candidate grid in 2-d), read sensor values off the fine
input grid by linear interpolation, optionally corrupt them, then loop:
pick a random pregenerated batch, compute the loss, take an Adam step.
Everything is seeded through derived generator streams, so a (dataset,
config, seed) triple reproduces its loss trace bit-for-bit.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .autodiff import gradients
from .datasets import OperatorDataset
from .embedding import embed_observations
from .errors import ConfigError, ContractError, SensorPlacementError, TrainingError
from .fields import FieldSample, Grid2d, SensorSet
from .model import ObservationBatch, OperatorModel, elbo_loss, vidon_loss
from .nn import adam_init, adam_step

__all__ = ["SensorPolicy", "TrainPlan", "NoiseSpec", "TraceRow", "TrainResult",
           "PredictionEnsemble", "sample_sensor_count", "sample_locations_1d",
           "regspace_select", "sample_locations_2d", "corrupt_observations",
           "make_observations", "pregenerate_batches", "train", "predict_ensemble"]

REGSPACE_CANDIDATES = 81          # candidate grid points per axis (2-d)
REGSPACE_SUBDOMAIN = (0.1, 0.9)   # sensors live in this sub-square (2-d)


@dataclass(frozen=True)
class NoiseSpec:
    """Observation corruption: none, multiplicative log-normal, or additive."""

    mode: str = "none"
    sigma: float = 0.0

    def __post_init__(self):
        if self.mode not in ("none", "multiplicative", "additive"):
            raise ConfigError(f"unknown noise mode {self.mode!r}")
        if self.sigma < 0:
            raise ConfigError(f"noise sigma must be >= 0, got {self.sigma}")


@dataclass
class SensorPolicy:
    """How observation sets are drawn: counts, location law, noise."""

    counts: tuple
    domain: tuple                 # (a, b) in 1-d, (x0, x1, y0, y1) in 2-d
    d_min: dict = field(default_factory=dict)
    noise: NoiseSpec = NoiseSpec()
    batch_consistent: bool = False

    def __post_init__(self):
        if not self.counts:
            raise ConfigError("sensor policy needs a nonempty set of counts")

    @property
    def is_2d(self) -> bool:
        return len(self.domain) == 4

    @staticmethod
    def from_config(cfg) -> "SensorPolicy":
        return SensorPolicy(tuple(cfg.sensor_counts), cfg.domain(), dict(cfg.d_min),
                            NoiseSpec(cfg.noise_mode, cfg.noise_sigma),
                            cfg.batch_consistent)


@dataclass
class TrainPlan:
    """Iteration budget, batching, seed, and optimizer hyperparameters."""

    iterations: int
    batch_size: int
    n_batches: int
    seed: int
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    checkpoint_every: int = 0     # 0 -> every 10% of the budget
    regenerate_batches: bool = False
    beta: float = 1.0

    def __post_init__(self):
        for name in ("iterations", "batch_size", "n_batches"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")

    @property
    def cadence(self) -> int:
        return self.checkpoint_every if self.checkpoint_every > 0 else max(1, self.iterations // 10)

    @staticmethod
    def from_config(cfg) -> "TrainPlan":
        return TrainPlan(cfg.iterations, cfg.batch_size, cfg.n_batches, cfg.train_seed,
                         lr=cfg.lr, checkpoint_every=cfg.checkpoint_every,
                         regenerate_batches=cfg.regenerate_batches, beta=cfg.beta)


def sample_sensor_count(policy: SensorPolicy, rng: np.random.Generator) -> int:
    """Uniform draw from the allowed counts."""
    return int(policy.counts[int(rng.integers(len(policy.counts)))])


def sample_locations_1d(domain: tuple, m: int, rng: np.random.Generator) -> np.ndarray:
    """m i.i.d. uniform locations in [a, b], shape (m, 1)."""
    a, b = domain
    return (a + (b - a) * rngmod.uniforms(rng, m))[:, None]


def regspace_select(candidates: np.ndarray, d_min: float, m: int,
                    rng: np.random.Generator | None = None) -> np.ndarray:
    """Greedy minimum-distance selection from a candidate stream.

    Scans the candidates in order (shuffling first when `rng` is given)
    and accepts a point iff it is at least d_min away from every accepted
    point, stopping once m are accepted.  Raises SensorPlacementError,
    naming the achieved count, if the stream runs out first.
    """
    candidates = np.asarray(candidates, dtype=np.float64)
    if candidates.ndim == 1:
        candidates = candidates[:, None]
    if candidates.shape[0] == 0:
        raise ContractError("regspace_select needs a nonempty candidate list")
    if rng is not None:
        candidates = candidates[rng.permutation(candidates.shape[0])]
    accepted = np.empty((m, candidates.shape[1]))
    count = 0
    d2 = d_min * d_min
    for point in candidates:
        if count == 0 or ((accepted[:count] - point) ** 2).sum(axis=1).min() >= d2:
            accepted[count] = point
            count += 1
            if count == m:
                return accepted.copy()
    raise SensorPlacementError(
        f"could only place {count} of {m} sensors with spacing {d_min:g}")


def _candidate_grid() -> np.ndarray:
    lo, hi = REGSPACE_SUBDOMAIN
    axis = np.linspace(lo, hi, REGSPACE_CANDIDATES)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([xx.reshape(-1), yy.reshape(-1)])


def sample_locations_2d(policy: SensorPolicy, m: int, rng: np.random.Generator,
                        max_retries: int = 1000) -> np.ndarray:
    """Sensor locations for 2-d problems via regspace selection.

    A single sensor is just the first point of the shuffled candidate grid
    (no spacing constraint applies).  A shuffle whose early points leave no
    room for m centers (possible for m=2 at d_min=0.8, where a central
    first point has no partner) is discarded and redrawn.
    """
    d_min = 0.0 if m == 1 else policy.d_min.get(m, 0.0)
    candidates = _candidate_grid()
    for _ in range(max_retries):
        try:
            return regspace_select(candidates, d_min, m, rng)
        except SensorPlacementError:
            continue
    raise SensorPlacementError(
        f"no shuffle of the candidate grid yielded {m} sensors at spacing {d_min:g} "
        f"in {max_retries} attempts")


def sample_locations(policy: SensorPolicy, m: int, rng: np.random.Generator) -> np.ndarray:
    if policy.is_2d:
        return sample_locations_2d(policy, m, rng)
    return sample_locations_1d(policy.domain, m, rng)


def corrupt_observations(obs: SensorSet, noise: NoiseSpec, rng: np.random.Generator) -> SensorSet:
    """Apply the noise model to sensor values; locations are untouched."""
    if noise.mode == "none" or noise.sigma == 0.0:
        return obs
    eps = noise.sigma * rngmod.normals(rng, obs.m)
    if noise.mode == "multiplicative":
        return SensorSet(obs.locations, obs.values * np.exp(eps))
    return SensorSet(obs.locations, obs.values + eps)


def make_observations(field: FieldSample, locations: np.ndarray, noise: NoiseSpec,
                      rng: np.random.Generator) -> SensorSet:
    """Observation set at given locations: interpolate the field, add noise."""
    values = field.interp(locations)
    return corrupt_observations(SensorSet(locations, values), noise, rng)


def pregenerate_batches(dataset: OperatorDataset, policy: SensorPolicy,
                        plan: TrainPlan, seed: int, round_index: int = 0) -> list[ObservationBatch]:
    """Split the dataset into batches and attach observation sets.

    The dataset is shuffled once and divided evenly, so every sample
    appears in exactly one batch.  Each batch draws a single sensor count;
    locations are per-sample unless the policy's batch_consistent flag is
    set (the deterministic-baseline comparison protocol), in which case
    all samples in a batch share one location set.
    """
    n = dataset.n
    if plan.n_batches * plan.batch_size != n:
        raise ContractError(
            f"{n} samples do not divide into {plan.n_batches} batches of {plan.batch_size}")
    order = rngmod.derive(seed, "batch-split", round_index).permutation(n)
    batches = []
    for b in range(plan.n_batches):
        idx = order[b * plan.batch_size:(b + 1) * plan.batch_size]
        brng = rngmod.derive(seed, "batch", round_index, b)
        m = sample_sensor_count(policy, brng)
        shared = sample_locations(policy, m, brng) if policy.batch_consistent else None
        dim = 2 if policy.is_2d else 1
        locations = np.empty((plan.batch_size, m, dim))
        values = np.empty((plan.batch_size, m))
        for j, i in enumerate(idx):
            locs = shared if shared is not None else sample_locations(policy, m, brng)
            obs = make_observations(dataset.input_field(int(i)), locs, policy.noise, brng)
            obs = obs.sorted()
            locations[j] = obs.locations
            values[j] = obs.values
        batches.append(ObservationBatch(locations, values, dataset.outputs[idx].copy()))
    return batches


@dataclass
class TraceRow:
    iteration: int
    loss: float
    kl: float
    recon: float
    wall_ms: float


@dataclass
class TrainResult:
    model: OperatorModel
    trace: list
    plan: TrainPlan


def train(dataset: OperatorDataset, cfg, checkpoint_sink=None) -> TrainResult:
    """Run the optimization loop for a config on a generated dataset.

    `checkpoint_sink(iteration, model)` is called at the checkpoint
    cadence and after the final iteration.  A non-finite loss aborts with
    a TrainingError naming the iteration; checkpoints already emitted are
    left in place.
    """
    policy = SensorPolicy.from_config(cfg)
    plan = TrainPlan.from_config(cfg)
    seed = plan.seed
    model = OperatorModel.from_config(cfg, dataset.output_grid.size, seed)
    params = model.parameters()
    state = adam_init(params, lr=plan.lr, beta1=plan.beta1, beta2=plan.beta2, eps=plan.eps)
    grid_points = dataset.output_grid.coords()
    batches = pregenerate_batches(dataset, policy, plan, seed, round_index=0)
    pick = rngmod.derive(seed, "batch-order")
    stochastic = model.is_stochastic
    trace: list[TraceRow] = []
    for it in range(1, plan.iterations + 1):
        t0 = time.perf_counter()
        if plan.regenerate_batches and it > 1 and (it - 1) % plan.n_batches == 0:
            round_index = (it - 1) // plan.n_batches
            batches = pregenerate_batches(dataset, policy, plan, seed, round_index)
        batch = batches[int(pick.integers(plan.n_batches))]
        try:
            if stochastic:
                parts = elbo_loss(batch, model, grid_points,
                                  rngmod.derive(seed, "reparam", it), beta=plan.beta)
            else:
                parts = vidon_loss(batch, model, grid_points)
            grads = gradients(parts.loss, params)
            adam_step(params, grads, state)
        except TrainingError as exc:
            raise TrainingError(f"iteration {it}: {exc}") from exc
        wall_ms = (time.perf_counter() - t0) * 1e3
        trace.append(TraceRow(it, float(parts.loss.data), parts.kl, parts.recon, wall_ms))
        if checkpoint_sink is not None and (it % plan.cadence == 0 or it == plan.iterations):
            checkpoint_sink(it, model)
    return TrainResult(model, trace, plan)


@dataclass
class PredictionEnsemble:
    """Sampled output functions plus their pointwise statistics."""

    values: np.ndarray   # (n_samples, n_points)
    mean: np.ndarray
    std: np.ndarray


def predict_ensemble(model: OperatorModel, obs: SensorSet, points: np.ndarray,
                     n_samples: int, seed: int, counts: tuple | None = None) -> PredictionEnsemble:
    """Ensemble of predictions at `points` from prior latent draws.

    The observation code is computed once; each of the n_samples draws
    z ~ N(0, I) is decoded against the shared trunk evaluation.  For a
    deterministic model the ensemble is the single prediction.  A sensor
    count outside the trained set triggers a warning, not an error.
    """
    if counts is not None and obs.m not in counts:
        warnings.warn(f"observation set has m={obs.m}, outside the trained counts {counts}",
                      stacklevel=2)
    code = embed_observations(obs, model.embed).data
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    trunk_out = model.decoder.trunk(pts).data              # (M, p)
    d = model.decoder.latent_dim
    if d == 0:
        branch_out = model.decoder.branch(code[None, :]).data
        values = branch_out @ trunk_out.T
        return PredictionEnsemble(values, values[0].copy(), np.zeros(pts.shape[0]))
    z = rngmod.normals(rngmod.derive(seed, "prior-latent"), (n_samples, d))
    branch_in = np.concatenate([np.tile(code, (n_samples, 1)), z], axis=1)
    branch_out = model.decoder.branch(branch_in).data      # (n, p)
    values = branch_out @ trunk_out.T                      # (n, M)
    mean = values.mean(axis=0)
    std = values.std(axis=0, ddof=1) if n_samples > 1 else np.zeros(pts.shape[0])
    return PredictionEnsemble(values, mean, std)
