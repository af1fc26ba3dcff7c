"""Comparing ensembles: Gaussian fits, Wasserstein-2, relative errors.

Ensembles of discretized functions are summarized by their sample mean
and unbiased sample covariance; two ensembles are then compared with the
closed-form Wasserstein-2 distance between those Gaussians
(Bures metric on the covariances) and with the relative L2 errors of
mean and pointwise standard deviation.
"""

from __future__ import annotations

import io
import csv
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NumericalError
from .fields import Grid2d

__all__ = ["EnsembleStats", "fit_gaussian", "w2_gaussian", "relative_errors",
           "report_table", "stats_subset", "grid_line_indices"]

log = logging.getLogger(__name__)


@dataclass
class EnsembleStats:
    """Sample mean, covariance, and pointwise std of an ensemble."""

    mean: np.ndarray
    cov: np.ndarray
    std: np.ndarray
    n: int


def fit_gaussian(ensemble: np.ndarray) -> EnsembleStats:
    """Sample mean and unbiased sample covariance of an (n, G) ensemble."""
    x = np.asarray(ensemble, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ContractError("fit_gaussian needs at least 2 samples in an (n, G) array")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (x.shape[0] - 1)
    return EnsembleStats(mean, cov, np.sqrt(np.diag(cov)), x.shape[0])


def _sqrtm_psd(mat: np.ndarray, label: str) -> np.ndarray:
    """Symmetric square root via eigendecomposition; negatives clipped to 0."""
    try:
        w, v = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed for {label}") from exc
    clip = float(-w.min()) if w.min() < 0 else 0.0
    if clip > 0:
        log.debug("clipped negative eigenvalues of %s (magnitude %.3e)", label, clip)
    return (v * np.sqrt(np.maximum(w, 0.0))) @ v.T


def w2_gaussian(stats_a: EnsembleStats, stats_b: EnsembleStats) -> float:
    """Wasserstein-2 distance between the fitted Gaussians.

    sqrt(|mu_a - mu_b|^2 + tr(C_a + C_b - 2 (C_b^1/2 C_a C_b^1/2)^1/2)).
    """
    if stats_a.mean.shape != stats_b.mean.shape:
        raise ContractError("ensembles live on different grids")
    dmu = stats_a.mean - stats_b.mean
    b_half = _sqrtm_psd(stats_b.cov, "covariance B")
    inner = b_half @ stats_a.cov @ b_half
    w = np.linalg.eigvalsh(inner)
    clip = float(-w.min()) if w.min() < 0 else 0.0
    if clip > 0:
        log.debug("clipped negative eigenvalues of coupled covariance (magnitude %.3e)", clip)
    cross = float(np.sqrt(np.maximum(w, 0.0)).sum())
    total = float(dmu @ dmu) + float(np.trace(stats_a.cov)) + float(np.trace(stats_b.cov)) \
        - 2.0 * cross
    return float(np.sqrt(max(total, 0.0)))


def relative_errors(reference: EnsembleStats, predicted: EnsembleStats) -> tuple[float, float]:
    """Relative L2 errors of the mean and the pointwise std, reference in the denominator."""
    if reference.mean.shape != predicted.mean.shape:
        raise ContractError("ensembles live on different grids")
    ref_mean_norm = float(np.linalg.norm(reference.mean))
    ref_std_norm = float(np.linalg.norm(reference.std))
    if ref_mean_norm == 0.0 or ref_std_norm == 0.0:
        raise ContractError("reference mean/std has zero norm; relative error undefined")
    err_mean = float(np.linalg.norm(reference.mean - predicted.mean)) / ref_mean_norm
    err_std = float(np.linalg.norm(reference.std - predicted.std)) / ref_std_norm
    return err_mean, err_std


def stats_subset(stats: EnsembleStats, indices: np.ndarray) -> EnsembleStats:
    """Restrict ensemble statistics to a subset of grid points."""
    idx = np.asarray(indices, dtype=int)
    return EnsembleStats(stats.mean[idx], stats.cov[np.ix_(idx, idx)],
                         stats.std[idx], stats.n)


def grid_line_indices(grid: Grid2d, axis: str, value: float) -> np.ndarray:
    """Flat indices of the grid line x = value or y = value (nearest grid line)."""
    if axis == "x":
        ix = int(np.argmin(np.abs(grid.xs() - value)))
        return ix * grid.ny + np.arange(grid.ny)
    if axis == "y":
        iy = int(np.argmin(np.abs(grid.ys() - value)))
        return np.arange(grid.nx) * grid.ny + iy
    raise ContractError(f"axis must be 'x' or 'y', got {axis!r}")


@dataclass
class ErrorCase:
    """One table row: a label (typically the sensor count) and its trials."""

    label: str
    trials: list          # [(reference EnsembleStats, predicted EnsembleStats), ...]
    indices: np.ndarray | None = None   # optional grid-slice selector


def report_table(cases: list, scale_by_100: bool = True) -> str:
    """CSV of per-case relative errors aggregated over trials.

    Columns: label, err_mean_avg, err_mean_std, err_std_avg, err_std_std,
    n_trials.  The +- columns are the sample standard deviation across
    trials (zero for a single trial).  With scale_by_100 the values are
    multiplied by 100 and a header comment notes the scaling.
    """
    buf = io.StringIO()
    if scale_by_100:
        buf.write("# values scaled by 1e2\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["label", "err_mean_avg", "err_mean_std", "err_std_avg",
                     "err_std_std", "n_trials"])
    factor = 100.0 if scale_by_100 else 1.0
    for case in cases:
        if not case.trials:
            raise ContractError(f"case {case.label!r} has no trials")
        errs = []
        for ref, pred in case.trials:
            if case.indices is not None:
                ref = stats_subset(ref, case.indices)
                pred = stats_subset(pred, case.indices)
            errs.append(relative_errors(ref, pred))
        errs = np.asarray(errs) * factor
        n = errs.shape[0]
        spread = errs.std(axis=0, ddof=1) if n > 1 else np.zeros(2)
        writer.writerow([case.label,
                         repr(float(errs[:, 0].mean())), repr(float(spread[0])),
                         repr(float(errs[:, 1].mean())), repr(float(spread[1])),
                         n])
    return buf.getvalue()
