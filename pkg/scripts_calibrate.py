"""Desk-scale calibration: runs the acceptance-sized experiments and reports
the error numbers the acceptance suite will assert.  Throwaway harness."""

import json
import sys
import time

import numpy as np
from threadpoolctl import threadpool_limits

from opvae import rng as rngmod
from opvae.config import default_config
from opvae.datasets import generate_dataset
from opvae.fields import SensorSet
from opvae.gp import Kernel1d, sample_gp
from opvae.metrics import EnsembleStats, fit_gaussian, relative_errors
from opvae.reference import reference_ensemble
from opvae.training import SensorPolicy, predict_ensemble, sample_locations_1d, train

threadpool_limits(limits=1)
results = {}


def desk_cfg(model="cvae", counts=(3,), batch_consistent=False, train_seed=202):
    cfg = default_config("diffusion1d")
    cfg.n_samples = 2000
    cfg.batch_size = 200
    cfg.n_batches = 10
    cfg.iterations = 20000
    cfg.latent_dim = 10
    cfg.sensor_counts = counts
    cfg.model = model
    cfg.batch_consistent = batch_consistent
    cfg.data_seed = 101
    cfg.train_seed = train_seed
    return cfg


def evaluate_1d(model, cfg, n_test=10, n_ens=1000, seed=777):
    """Paper-style protocol: fresh test inputs, m=3 obs, model vs GP reference."""
    fine = cfg.input_grid_obj()
    eval_grid = cfg.eval_grid_obj()
    pts = eval_grid.points()
    kernel = Kernel1d(cfg.gp_sigma, cfg.gp_length)
    test_fields = sample_gp(cfg.gp_mean_fn(), kernel, fine, n_test, seed=seed)
    errs = []
    for i, logk in enumerate(test_fields):
        k_vals = np.exp(logk.values)
        rng = rngmod.derive(seed, "locs", i)
        locs = sample_locations_1d((-1.0, 1.0), 3, rng)
        obs = SensorSet(locs, np.interp(locs[:, 0], fine.points(), k_vals))
        pred = predict_ensemble(model, obs, pts, n_ens, seed=seed + i)
        ref = reference_ensemble("diffusion1d", obs, cfg, n_ens, seed=seed + 5000 + i)
        if pred.values.shape[0] > 1:
            pstats = fit_gaussian(pred.values)
        else:
            pstats = EnsembleStats(pred.mean, np.zeros((pts.size, pts.size)),
                                   np.zeros(pts.size), 1)
        rstats = fit_gaussian(ref.values)
        errs.append(relative_errors(rstats, pstats))
    errs = np.array(errs)
    return float(errs[:, 0].mean()), float(errs[:, 1].mean())


def run(label, fn):
    t0 = time.perf_counter()
    out = fn()
    dt = time.perf_counter() - t0
    results[label] = {"result": out, "minutes": round(dt / 60, 2)}
    print(f"== {label}: {out}  ({dt/60:.1f} min)", flush=True)


def main():
    which = sys.argv[1] if len(sys.argv) > 1 else "all"

    if which in ("all", "m3"):
        cfg = desk_cfg()
        ds = generate_dataset("diffusion1d", cfg)
        def m3():
            res = train(ds, cfg)
            err_e, err_s = evaluate_1d(res.model, cfg)
            losses = [r.loss for r in res.trace]
            return {"err_E": err_e, "err_sigma": err_s,
                    "loss_first": float(np.mean(losses[:100])),
                    "loss_last": float(np.mean(losses[-100:]))}
        run("desk_m3_cvae", m3)

    if which in ("all", "vidon"):
        cfg = desk_cfg(model="vidon", batch_consistent=True, train_seed=303)
        ds = generate_dataset("diffusion1d", cfg)
        def vd():
            res = train(ds, cfg)
            err_e, err_s = evaluate_1d(res.model, cfg)
            return {"err_E": err_e, "err_sigma(meaningless)": err_s}
        run("desk_m3_vidon", vd)

    if which in ("all", "varm"):
        cfg = desk_cfg(counts=tuple(range(1, 11)), train_seed=404)
        ds = generate_dataset("diffusion1d", cfg)
        def vm():
            res = train(ds, cfg)
            fine = cfg.input_grid_obj()
            pts = cfg.eval_grid_obj().points()
            kernel = Kernel1d(cfg.gp_sigma, cfg.gp_length)
            test_fields = sample_gp(cfg.gp_mean_fn(), kernel, fine, 10, seed=888)
            mean_stds = []
            for m in range(1, 11):
                vals = []
                for i, logk in enumerate(test_fields):
                    k_vals = np.exp(logk.values)
                    rng = rngmod.derive(999, "locs", m, i)
                    locs = sample_locations_1d((-1.0, 1.0), m, rng)
                    obs = SensorSet(locs, np.interp(locs[:, 0], fine.points(), k_vals))
                    pe = predict_ensemble(res.model, obs, pts, 500, seed=1000 + m * 17 + i)
                    vals.append(pe.std.mean())
                mean_stds.append(float(np.mean(vals)))
            return {"mean_stds": mean_stds}
        run("desk_varm_monotone", vm)

    if which in ("all", "2d"):
        cfg = default_config("poisson2d")
        cfg.n_samples = 5000
        cfg.input_grid, cfg.train_grid, cfg.eval_grid = 51, 26, 51
        cfg.batch_size = 250
        cfg.n_batches = 20
        cfg.iterations = 5000
        cfg.data_seed, cfg.train_seed = 111, 222
        t0 = time.perf_counter()
        ds = generate_dataset("poisson2d", cfg)
        print(f"2d dataset: {(time.perf_counter()-t0)/60:.1f} min", flush=True)
        def p2():
            res = train(ds, cfg)
            # evaluate on 3 test inputs, m=2
            fine = cfg.input_grid_obj()
            from opvae.gp import Kernel2d
            test_fields = sample_gp(cfg.gp_mean_fn(), Kernel2d(0.1, 0.1), fine, 3, seed=555)
            pol = SensorPolicy.from_config(cfg)
            pts = cfg.eval_grid_obj().coords()
            errs = []
            for i, f in enumerate(test_fields):
                rng = rngmod.derive(666, i)
                from opvae.training import sample_locations_2d
                locs = sample_locations_2d(pol, 2, rng)
                from opvae.fields import FieldSample
                obs = SensorSet(locs, f.interp(locs))
                pred = predict_ensemble(res.model, obs, pts, 500, seed=700 + i)
                ref = reference_ensemble("poisson2d", obs, cfg, 500, seed=800 + i)
                errs.append(relative_errors(fit_gaussian(ref.values),
                                            fit_gaussian(pred.values)))
            errs = np.array(errs)
            losses = [r.loss for r in res.trace]
            return {"err_E": float(errs[:, 0].mean()), "err_sigma": float(errs[:, 1].mean()),
                    "loss_first": float(np.mean(losses[:50])),
                    "loss_last": float(np.mean(losses[-50:]))}
        run("desk_poisson2d", p2)

    with open("/root/pkg/calibration.json", "w") as fh:
        json.dump(results, fh, indent=2)
    print("saved calibration.json", flush=True)


if __name__ == "__main__":
    main()
