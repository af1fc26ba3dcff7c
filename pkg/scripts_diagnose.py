"""Deep diagnostics on a desk-scale model: where does the mean error come from?"""

import sys
import numpy as np
from threadpoolctl import threadpool_limits

from scripts_calibrate import desk_cfg
from opvae import rng as rngmod
from opvae.autodiff import Tensor
from opvae.checkpoint import checkpoint_from_model, checkpoint_read, checkpoint_write, build_model
from opvae.datasets import generate_dataset
from opvae.embedding import embed_observations
from opvae.fields import FieldSample, SensorSet
from opvae.gp import Kernel1d, sample_gp
from opvae.metrics import fit_gaussian, relative_errors
from opvae.pde import solve_diffusion_1d
from opvae.reference import reference_ensemble
from opvae.training import predict_ensemble, sample_locations_1d, train

threadpool_limits(limits=1)

CKPT = "/root/pkg/diag_model.uqso"
cfg = desk_cfg()
cfg.regenerate_batches = True
ds = generate_dataset("diffusion1d", cfg)

if len(sys.argv) > 1 and sys.argv[1] == "train":
    res = train(ds, cfg)
    checkpoint_write(checkpoint_from_model(res.model, cfg, ds.output_grid, cfg.iterations), CKPT)
    print("trained + saved", flush=True)
    model = res.model
else:
    model = build_model(checkpoint_read(CKPT))

fine = cfg.input_grid_obj()
x = fine.points()
pts = cfg.eval_grid_obj().points()
kernel = Kernel1d(cfg.gp_sigma, cfg.gp_length)

# unconditional prior mean of u
prior_logk = sample_gp(cfg.gp_mean_fn(), kernel, fine, 800, seed=31337)
f_field = FieldSample(fine, 2 * np.sin(2 * np.pi * x))
prior_u = np.array([solve_diffusion_1d(FieldSample(fine, np.exp(s.values)), f_field).values
                    for s in prior_logk])
prior_mean = prior_u.mean(axis=0)

test_fields = sample_gp(cfg.gp_mean_fn(), kernel, fine, 10, seed=777)
rows = []
for i, logk in enumerate(test_fields):
    k_vals = np.exp(logk.values)
    rng = rngmod.derive(777, "locs", i)
    locs = sample_locations_1d((-1.0, 1.0), 3, rng)
    obs = SensorSet(locs, np.interp(locs[:, 0], x, k_vals))
    pred = predict_ensemble(model, obs, pts, 1000, seed=777 + i)
    ref = reference_ensemble("diffusion1d", obs, cfg, 1000, seed=777 + 5000 + i)
    # z = 0 decode
    code = embed_observations(obs, model.embed).data
    z0_in = np.concatenate([code, np.zeros(cfg.latent_dim)])[None, :]
    b0 = model.decoder.branch(Tensor(z0_in)).data
    t0 = model.decoder.trunk(Tensor(pts[:, None])).data
    z0_pred = (b0 @ t0.T)[0]
    nref = np.linalg.norm(ref.mean)
    rows.append({
        "ref_vs_prior": np.linalg.norm(ref.mean - prior_mean) / nref,
        "pred_vs_ref": np.linalg.norm(pred.mean - ref.mean) / nref,
        "pred_vs_prior": np.linalg.norm(pred.mean - prior_mean) / nref,
        "z0_vs_ref": np.linalg.norm(z0_pred - ref.mean) / nref,
        "corr": np.corrcoef(pred.mean - prior_mean, ref.mean - prior_mean)[0, 1],
        "std_ref": ref.std.mean(), "std_pred": pred.std.mean(),
    })
for key in rows[0]:
    print(f"{key:14s}", " ".join(f"{r[key]:7.3f}" for r in rows),
          f"| avg {np.mean([r[key] for r in rows]):.3f}", flush=True)

# aggregate posterior check over 200 training samples
from opvae.training import SensorPolicy, TrainPlan, pregenerate_batches
batches = pregenerate_batches(ds, SensorPolicy.from_config(cfg), TrainPlan.from_config(cfg),
                              seed=cfg.train_seed, round_index=0)
b = batches[0]
codes = []
from opvae.embedding import embed_batch
codes = embed_batch(b.locations, b.values, model.embed).data
enc_out = model.encoder.net(Tensor(np.concatenate([codes, b.outputs], axis=1))).data
d = cfg.latent_dim
mu, logvar = enc_out[:, :d], enc_out[:, d:]
agg_mean = mu.mean(axis=0)
agg_var = mu.var(axis=0) + np.exp(logvar).mean(axis=0)
print("aggregate posterior mean:", np.round(agg_mean, 2), flush=True)
print("aggregate posterior var :", np.round(agg_var, 2), flush=True)

# dense-observation check: m=20 sensors
dense_rows = []
for i, logk in enumerate(test_fields[:5]):
    k_vals = np.exp(logk.values)
    rng = rngmod.derive(1234, "locs", i)
    locs = sample_locations_1d((-1.0, 1.0), 20, rng)
    obs = SensorSet(locs, np.interp(locs[:, 0], x, k_vals))
    pred = predict_ensemble(model, obs, pts, 500, seed=31 + i)
    truth = solve_diffusion_1d(FieldSample(fine, k_vals), f_field).values
    dense_rows.append(np.linalg.norm(pred.mean - truth) / np.linalg.norm(truth))
print("dense m=20 pred-vs-truth:", np.round(dense_rows, 3), flush=True)
