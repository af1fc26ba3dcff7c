"""One desk-scale variant run: label iters lr regen [extra_kv ...]"""

import sys
import time

import numpy as np
from threadpoolctl import threadpool_limits

from scripts_calibrate import desk_cfg, evaluate_1d
from opvae.datasets import generate_dataset
from opvae.training import train

threadpool_limits(limits=1)

label = sys.argv[1]
iters = int(sys.argv[2])
lr = float(sys.argv[3])
regen = sys.argv[4] == "regen"
extra = dict(kv.split("=") for kv in sys.argv[5:])

cfg = desk_cfg(model=extra.get("model", "cvae"))
cfg.iterations = iters
cfg.lr = lr
cfg.regenerate_batches = regen
if "noise_var" in extra:
    cfg.noise_var = float(extra["noise_var"])
if "batch_size" in extra:
    cfg.batch_size = int(extra["batch_size"])
    cfg.n_batches = cfg.n_samples // cfg.batch_size
if "train_seed" in extra:
    cfg.train_seed = int(extra["train_seed"])

ds = generate_dataset("diffusion1d", cfg)
t0 = time.perf_counter()
res = train(ds, cfg)
losses = np.array([r.loss for r in res.trace])
err_e, err_s = evaluate_1d(res.model, cfg, n_test=10, n_ens=500)
print(f"{label}: err_E={err_e:.3f} err_s={err_s:.3f} "
      f"loss_end={losses[-200:].mean():.2f} ({(time.perf_counter()-t0)/60:.1f} min)",
      flush=True)
