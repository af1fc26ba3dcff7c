"""Quick sweep: convergence speed vs learning rate at desk scale (5k iters)."""

import sys
import time

import numpy as np
from threadpoolctl import threadpool_limits

from scripts_calibrate import desk_cfg, evaluate_1d
from opvae.datasets import generate_dataset
from opvae.training import train

threadpool_limits(limits=1)

lr = float(sys.argv[1])
iters = int(sys.argv[2]) if len(sys.argv) > 2 else 5000

cfg = desk_cfg()
cfg.lr = lr
cfg.iterations = iters
ds = generate_dataset("diffusion1d", cfg)
t0 = time.perf_counter()
res = train(ds, cfg)
losses = np.array([r.loss for r in res.trace])
kls = np.array([r.kl for r in res.trace])
err_e, err_s = evaluate_1d(res.model, cfg, n_test=10, n_ens=500)
print(f"lr={lr:g} iters={iters}: err_E={err_e:.3f} err_s={err_s:.3f} "
      f"loss_end={losses[-200:].mean():.2f} kl_end={kls[-200:].mean():.2f} "
      f"({(time.perf_counter()-t0)/60:.1f} min)", flush=True)
