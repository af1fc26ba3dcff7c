"""End-to-end operator learning with uncertainty bands, at smoke scale.

Generates a small diffusion dataset, trains the stochastic operator model
for a few thousand iterations, then compares its conditional ensemble
against the exact GP-posterior reference for one observation set.  The
run takes a couple of minutes on a laptop; scale n_samples/iterations up
toward the config defaults for quantitative accuracy.
"""

import pathlib
import time

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

try:
    from threadpoolctl import threadpool_limits
    threadpool_limits(limits=1)      # many small matmuls; thread pools hurt
except ImportError:
    pass

from opvae.config import default_config
from opvae.datasets import generate_dataset
from opvae.fields import SensorSet
from opvae.reference import reference_ensemble
from opvae.training import predict_ensemble, train

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# ---------------------------------------------------------------------------
# 1. A reduced experiment config: same physics, smaller budget.

cfg = default_config("diffusion1d")
cfg.n_samples = 500
cfg.batch_size = 50
cfg.n_batches = 10
cfg.iterations = 3000
cfg.sensor_counts = (3,)
cfg.latent_dim = 10
cfg.data_seed, cfg.train_seed = 7, 8

print("generating dataset ...")
ds = generate_dataset("diffusion1d", cfg)

print("training (a few minutes at most) ...")
t0 = time.perf_counter()
result = train(ds, cfg)
print(f"  {cfg.iterations} iterations in {time.perf_counter() - t0:.0f} s; "
      f"loss {result.trace[0].loss:.2f} -> {result.trace[-1].loss:.2f}")

fig, ax = plt.subplots(figsize=(6, 3.5))
ax.plot([r.iteration for r in result.trace], [r.loss for r in result.trace], lw=0.5)
ax.set_yscale("log")
ax.set_xlabel("iteration")
ax.set_ylabel("loss")
fig.tight_layout()
fig.savefig(OUT / "uq_loss_trace.png", dpi=120)

# ---------------------------------------------------------------------------
# 2. Conditional prediction for a fresh input observed at 3 sensors.
#
# The reference is the exact conditional law: condition the log k GP on
# the observations, push 1000 posterior samples through the solver.

fine = cfg.input_grid_obj()
x = fine.points()
truth_k = ds.input_field(0)
obs_x = np.array([-0.55, 0.1, 0.65])
obs = SensorSet(obs_x[:, None], truth_k.interp(obs_x))

pts = cfg.eval_grid_obj().points()
pred = predict_ensemble(result.model, obs, pts, n_samples=1000, seed=1,
                        counts=cfg.sensor_counts)
print("building GP reference ensemble ...")
ref = reference_ensemble("diffusion1d", obs, cfg, n=1000, seed=2)

fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(pts, ref.mean, "C3--", lw=2, label="reference mean")
ax.fill_between(pts, ref.mean - 2 * ref.std, ref.mean + 2 * ref.std,
                color="C3", alpha=0.2, label="reference +-2 std")
ax.plot(pts, pred.mean, "C0", lw=2, label="model mean")
ax.fill_between(pts, pred.mean - 2 * pred.std, pred.mean + 2 * pred.std,
                color="C0", alpha=0.2, label="model +-2 std")
ax.legend()
ax.set_title(f"conditional prediction from {obs.m} sensors (smoke-scale training)")
fig.tight_layout()
fig.savefig(OUT / "uq_conditional_bands.png", dpi=120)

rel_mean = np.linalg.norm(ref.mean - pred.mean) / np.linalg.norm(ref.mean)
rel_std = np.linalg.norm(ref.std - pred.std) / np.linalg.norm(ref.std)
print(f"relative mean error {rel_mean:.3f}, relative std error {rel_std:.3f}")
print(f"figures written to {OUT}")
