"""Ground-truth conditional distributions via exact GP conditioning.

Given sensor observations of the input field, the input's Gaussian
process prior conditions in closed form (with or without observation
noise); pushing posterior samples through the finite-difference solver
yields a Monte Carlo reference for the conditional law of the output.

Conditioning always happens in the GP's native space: for problems whose
input is log-Gaussian (the 1-d diffusion coefficient), observed values
are mapped to logs first, and multiplicative log-normal value noise
becomes additive Gaussian noise on the logs with the same variance.  For
the stochastic problems the second, undisclosed field is drawn from its
unconditioned prior per posterior sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gp as gpmod
from . import pde
from . import rng as rngmod
from .errors import ConfigError, NumericalError
from .fields import FieldSample, Grid1d, Grid2d, SensorSet

__all__ = ["GpPosterior", "gp_posterior", "sample_posterior", "reference_ensemble",
           "ReferenceEnsemble"]


@dataclass
class GpPosterior:
    """Exact posterior of a GP on a target grid after point observations."""

    grid: Grid1d | Grid2d
    mean: np.ndarray
    cov: np.ndarray
    provenance: dict

    def std(self) -> np.ndarray:
        return np.sqrt(np.maximum(np.diag(self.cov), 0.0))


def gp_posterior(mean_fn, kernel, obs: SensorSet | None, noise_var: float,
                 grid) -> GpPosterior:
    """Condition a GP prior on observations, optionally noisy.

    With no observations the posterior is the prior on the grid.  The
    observation Gram (plus noise_var * I when noise_var > 0) is factored
    by Cholesky and never explicitly inverted; a singular noiseless Gram
    (e.g. duplicated sensors) raises a NumericalError suggesting jitter
    or observation noise.
    """
    if noise_var < 0:
        raise ConfigError(f"noise_var must be >= 0, got {noise_var}")
    pts = grid.coords() if isinstance(grid, Grid2d) else grid.points()
    prior_mean = np.asarray(mean_fn(pts), dtype=np.float64)
    kgg = gpmod.gram_matrix(pts, kernel)
    if obs is None or obs.m == 0:
        return GpPosterior(grid, prior_mean, kgg, {"noise_var": noise_var, "m": 0})
    x_obs = obs.locations if obs.dim > 1 else obs.locations[:, 0]
    koo = gpmod.gram_matrix(obs.locations if obs.dim > 1 else obs.locations[:, 0], kernel)
    if noise_var > 0:
        koo = koo + noise_var * np.eye(obs.m)
    try:
        chol = np.linalg.cholesky(koo)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "observation Gram matrix is singular (duplicated sensors?); "
            "add observation noise or jitter") from exc
    kgo = gpmod.cross_matrix(pts, x_obs, kernel)
    resid = obs.values - np.asarray(mean_fn(obs.locations), dtype=np.float64)
    alpha = np.linalg.solve(chol.T, np.linalg.solve(chol, resid))
    mean = prior_mean + kgo @ alpha
    v = np.linalg.solve(chol, kgo.T)
    cov = kgg - v.T @ v
    return GpPosterior(grid, mean, cov, {"noise_var": noise_var, "m": obs.m})


def sample_posterior(post: GpPosterior, n: int, seed: int) -> np.ndarray:
    """n exact posterior field draws, (n, grid size); seed-derived per sample."""
    chol = gpmod.cholesky_jitter(post.cov)
    out = np.empty((n, post.mean.size))
    for i in range(n):
        xi = rngmod.normals(rngmod.derive(seed, "posterior", i), post.mean.size)
        out[i] = post.mean + chol @ xi
    return out


@dataclass
class ReferenceEnsemble:
    """Posterior input samples pushed through the solver."""

    input_grid: Grid1d | Grid2d
    eval_grid: Grid1d | Grid2d
    inputs: np.ndarray     # (n, input grid size), in the observable space
    values: np.ndarray     # (n, eval grid size)
    mean: np.ndarray
    std: np.ndarray


def _restrict(values: np.ndarray, fine, coarse) -> np.ndarray:
    if fine == coarse:
        return values
    if isinstance(fine, Grid1d):
        step = (fine.n - 1) // (coarse.n - 1)
        if step * (coarse.n - 1) != fine.n - 1:
            raise ConfigError("evaluation grid must subdivide the input grid")
        return values[::step]
    sx = (fine.nx - 1) // (coarse.nx - 1)
    sy = (fine.ny - 1) // (coarse.ny - 1)
    if sx * (coarse.nx - 1) != fine.nx - 1 or sy * (coarse.ny - 1) != fine.ny - 1:
        raise ConfigError("evaluation grid must subdivide the input grid")
    return values.reshape(fine.nx, fine.ny)[::sx, ::sy].reshape(-1)


def _log_space_noise_var(noise_mode: str, noise_sigma: float, log_input: bool) -> float:
    """Observation noise variance in the conditioning space.

    Multiplicative log-normal value noise on a log-GP input is additive
    Gaussian noise on the logs with the same variance; additive noise on
    a directly-Gaussian input passes through unchanged.  Mixing the other
    pairings has no closed-form posterior and is rejected.
    """
    if noise_mode == "none" or noise_sigma == 0.0:
        return 0.0
    if log_input and noise_mode == "multiplicative":
        return noise_sigma**2
    if not log_input and noise_mode == "additive":
        return noise_sigma**2
    raise ConfigError(
        f"noise mode {noise_mode!r} has no exact posterior for "
        f"{'log-space' if log_input else 'direct'} inputs")


def reference_ensemble(problem: str, obs: SensorSet, cfg, n: int,
                       seed: int) -> ReferenceEnsemble:
    """Reference conditional ensemble for one observation set.

    Conditions the input GP on the observations in its native space,
    draws n posterior input fields, and solves the PDE per draw; the
    stochastic problems additionally draw the hidden field from its
    prior per sample.
    """
    fine = cfg.input_grid_obj()
    eval_grid = cfg.eval_grid_obj()
    if problem == "diffusion1d":
        noise_var = _log_space_noise_var(cfg.noise_mode, cfg.noise_sigma, log_input=True)
        log_obs = SensorSet(obs.locations, np.log(obs.values))
        post = gp_posterior(cfg.gp_mean_fn(), gpmod.Kernel1d(cfg.gp_sigma, cfg.gp_length),
                            log_obs, noise_var, fine)
        log_k = sample_posterior(post, n, seed)
        f = FieldSample(fine, 2.0 * np.sin(2.0 * np.pi * fine.points()))
        inputs = np.exp(log_k)
        values = np.empty((n, eval_grid.size))
        for i in range(n):
            u = pde.solve_diffusion_1d(FieldSample(fine, inputs[i]), f)
            values[i] = _restrict(u.values, fine, eval_grid)
    elif problem == "elliptic1d-stochastic":
        noise_var = _log_space_noise_var(cfg.noise_mode, cfg.noise_sigma, log_input=True)
        log_obs = SensorSet(obs.locations, np.log(obs.values))
        post = gp_posterior(cfg.gp_mean_fn(), gpmod.Kernel1d(cfg.gp_sigma, cfg.gp_length),
                            log_obs, noise_var, fine)
        log_k = sample_posterior(post, n, seed)
        f_fields = gpmod.sample_gp(cfg.gp2_mean_fn(),
                                   gpmod.Kernel1d(cfg.gp2_sigma, cfg.gp2_length),
                                   fine, n, seed)
        inputs = np.exp(log_k)
        values = np.empty((n, eval_grid.size))
        for i in range(n):
            fv = np.exp(f_fields[i].values) if cfg.hidden_field_log else f_fields[i].values
            u = pde.solve_diffusion_1d(FieldSample(fine, inputs[i]), FieldSample(fine, fv))
            values[i] = _restrict(u.values, fine, eval_grid)
    elif problem == "poisson2d":
        noise_var = _log_space_noise_var(cfg.noise_mode, cfg.noise_sigma, log_input=False)
        post = gp_posterior(cfg.gp_mean_fn(), gpmod.Kernel2d(cfg.gp_length, cfg.gp_length2),
                            obs, noise_var, fine)
        inputs = sample_posterior(post, n, seed)
        values = np.empty((n, eval_grid.size))
        for i in range(n):
            u = pde.solve_poisson_2d(FieldSample(fine, inputs[i]))
            values[i] = _restrict(u.values, fine, eval_grid)
    elif problem == "elliptic2d-stochastic":
        noise_var = _log_space_noise_var(cfg.noise_mode, cfg.noise_sigma, log_input=False)
        post = gp_posterior(cfg.gp_mean_fn(), gpmod.Kernel2d(cfg.gp_length, cfg.gp_length2),
                            obs, noise_var, fine)
        inputs = sample_posterior(post, n, seed)
        logk_fields = gpmod.sample_gp(cfg.gp2_mean_fn(),
                                      gpmod.Kernel2d(cfg.gp2_length, cfg.gp2_length2),
                                      fine, n, seed)
        values = np.empty((n, eval_grid.size))
        for i in range(n):
            k = FieldSample(fine, np.exp(logk_fields[i].values))
            u = pde.solve_elliptic_2d(k, FieldSample(fine, inputs[i]))
            values[i] = _restrict(u.values, fine, eval_grid)
    else:
        raise ConfigError(f"no reference oracle for problem tag {problem!r}")
    mean = values.mean(axis=0)
    std = values.std(axis=0, ddof=1) if n > 1 else np.zeros(values.shape[1])
    return ReferenceEnsemble(fine, eval_grid, inputs, values, mean, std)
