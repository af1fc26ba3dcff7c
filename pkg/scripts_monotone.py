"""Variable-m desk run + monotone std curve with the winning recipe."""
import numpy as np
from threadpoolctl import threadpool_limits
from scripts_calibrate import desk_cfg
from opvae import rng as rngmod
from opvae.datasets import generate_dataset
from opvae.fields import SensorSet
from opvae.gp import Kernel1d, sample_gp
from opvae.training import predict_ensemble, sample_locations_1d, train

threadpool_limits(limits=1)
cfg = desk_cfg(counts=tuple(range(1, 11)), train_seed=404)
cfg.lr = 5e-4
cfg.regenerate_batches = True
ds = generate_dataset("diffusion1d", cfg)
res = train(ds, cfg)
fine = cfg.input_grid_obj()
x = fine.points()
pts = cfg.eval_grid_obj().points()
test_fields = sample_gp(cfg.gp_mean_fn(), Kernel1d(cfg.gp_sigma, cfg.gp_length), fine, 10, seed=888)
mean_stds = []
for m in range(1, 11):
    vals = []
    for i, logk in enumerate(test_fields):
        k_vals = np.exp(logk.values)
        rng = rngmod.derive(999, "locs", m, i)
        locs = sample_locations_1d((-1.0, 1.0), m, rng)
        obs = SensorSet(locs, np.interp(locs[:, 0], x, k_vals))
        pe = predict_ensemble(res.model, obs, pts, 500, seed=1000 + m * 17 + i)
        vals.append(pe.std.mean())
    mean_stds.append(float(np.mean(vals)))
print("mean_stds:", [round(v, 4) for v in mean_stds], flush=True)
diffs = np.diff(mean_stds)
viol = [(i + 1, i + 2, d / mean_stds[i]) for i, d in enumerate(diffs) if d > 0]
print("violations (m, m+1, rel):", [(a, b, round(r, 3)) for a, b, r in viol], flush=True)
