"""Operator datasets: generation for each benchmark problem and binary IO.

A dataset holds N paired fields: the input function kappa on a fine grid
(where sensors interpolate it) and the solution u on the coarser training
grid.  Deterministic problems randomize only the declared input field;
the stochastic variants also draw an undisclosed second field per pair,
which is the source of intrinsic operator randomness and is not stored.

File format (magic "UQDS", version 1): magic bytes, u32 LE version,
u32 LE header length, UTF-8 JSON header, then the kappa array and the
u array as contiguous little-endian float64 in declared order.  Ensemble
files (problem tags "reference" and "prediction") may omit the input
array; the header key "inputs_included" says which.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import gp, pde
from .errors import (ConfigError, ContractError, FileFormatError,
                     TruncatedPayloadError, VersionMismatchError)
from .fields import FieldSample, Grid1d, Grid2d, grid_from_dict

__all__ = ["OperatorDataset", "generate_dataset", "dataset_write", "dataset_read",
           "PROBLEM_TAGS", "FORMAT_VERSION"]

MAGIC = b"UQDS"
FORMAT_VERSION = 1

PROBLEM_TAGS = ("diffusion1d", "poisson2d", "elliptic1d-stochastic",
                "elliptic2d-stochastic", "external", "reference", "prediction")

# Tags whose files must carry paired input fields.
_PAIRED_TAGS = ("diffusion1d", "poisson2d", "elliptic1d-stochastic",
                "elliptic2d-stochastic", "external")


@dataclass
class OperatorDataset:
    """N input/output field pairs sharing fixed grids, plus provenance."""

    problem: str
    input_grid: Grid1d | Grid2d
    output_grid: Grid1d | Grid2d
    inputs: np.ndarray | None      # (N, input_grid.size) or None for ensembles
    outputs: np.ndarray            # (N, output_grid.size)
    seed: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.problem not in PROBLEM_TAGS:
            raise ConfigError(f"unknown problem tag {self.problem!r}")
        self.outputs = np.asarray(self.outputs, dtype=np.float64)
        if self.outputs.ndim != 2 or self.outputs.shape[0] < 1:
            raise ContractError("a dataset needs at least one sample")
        if self.outputs.shape[1] != self.output_grid.size:
            raise ContractError(
                f"outputs have {self.outputs.shape[1]} values per sample, "
                f"grid has {self.output_grid.size} points")
        if self.inputs is not None:
            self.inputs = np.asarray(self.inputs, dtype=np.float64)
            if self.inputs.shape != (self.outputs.shape[0], self.input_grid.size):
                raise ContractError("inputs must be (N, input_grid.size)")
        elif self.problem in _PAIRED_TAGS:
            raise ContractError(f"problem {self.problem!r} requires paired input fields")

    @property
    def n(self) -> int:
        return self.outputs.shape[0]

    def input_field(self, i: int) -> FieldSample:
        return FieldSample(self.input_grid, self.inputs[i])

    def output_field(self, i: int) -> FieldSample:
        return FieldSample(self.output_grid, self.outputs[i])


def _subsample_indices(fine_n: int, coarse_n: int) -> np.ndarray:
    """Indices of the coarse grid inside a co-aligned fine grid."""
    if (fine_n - 1) % (coarse_n - 1) != 0:
        raise ConfigError(
            f"training grid ({coarse_n}) must subdivide the fine grid ({fine_n})")
    step = (fine_n - 1) // (coarse_n - 1)
    return np.arange(0, fine_n, step)


def _restrict_1d(values: np.ndarray, fine: Grid1d, coarse: Grid1d) -> np.ndarray:
    return values[_subsample_indices(fine.n, coarse.n)]

def _restrict_2d(values: np.ndarray, fine: Grid2d, coarse: Grid2d) -> np.ndarray:
    ix = _subsample_indices(fine.nx, coarse.nx)
    iy = _subsample_indices(fine.ny, coarse.ny)
    return values.reshape(fine.nx, fine.ny)[np.ix_(ix, iy)].reshape(-1)


def generate_dataset(problem: str, config, seed: int | None = None) -> OperatorDataset:
    """Generate N input/output pairs for the named problem.

    `config` is an ExperimentConfig (see opvae.config); `seed` overrides
    config.data_seed when given.  Generation is a pure function of
    (config, seed): fields are drawn with per-sample derived streams and
    all solves are deterministic.
    """
    seed = config.data_seed if seed is None else int(seed)
    n = config.n_samples
    if problem == "diffusion1d":
        fine = config.input_grid_obj()
        coarse = config.train_grid_obj()
        kernel = gp.Kernel1d(config.gp_sigma, config.gp_length)
        logk = gp.sample_gp(config.gp_mean_fn(), kernel, fine, n, seed)
        f = FieldSample(fine, 2.0 * np.sin(2.0 * np.pi * fine.points()))
        inputs = np.empty((n, fine.size))
        outputs = np.empty((n, coarse.size))
        for i in range(n):
            k = FieldSample(fine, np.exp(logk[i].values))
            u = pde.solve_diffusion_1d(k, f)
            inputs[i] = k.values
            outputs[i] = _restrict_1d(u.values, fine, coarse)
        meta = {"kernel": {"sigma": config.gp_sigma, "length": config.gp_length},
                "mean": config.gp_mean_fn().to_dict(), "log_input": True,
                "source": "2*sin(2*pi*x)"}
        return OperatorDataset(problem, fine, coarse, inputs, outputs, seed, meta)

    if problem == "poisson2d":
        fine = config.input_grid_obj()
        coarse = config.train_grid_obj()
        kernel = gp.Kernel2d(config.gp_length, config.gp_length2)
        fs = gp.sample_gp(config.gp_mean_fn(), kernel, fine, n, seed)
        inputs = np.empty((n, fine.size))
        outputs = np.empty((n, coarse.size))
        for i in range(n):
            u = pde.solve_poisson_2d(fs[i])
            inputs[i] = fs[i].values
            outputs[i] = _restrict_2d(u.values, fine, coarse)
        meta = {"kernel": {"l1": config.gp_length, "l2": config.gp_length2},
                "mean": config.gp_mean_fn().to_dict(), "log_input": False}
        return OperatorDataset(problem, fine, coarse, inputs, outputs, seed, meta)

    if problem == "elliptic1d-stochastic":
        fine = config.input_grid_obj()
        coarse = config.train_grid_obj()
        k_kernel = gp.Kernel1d(config.gp_sigma, config.gp_length)
        logk = gp.sample_gp(config.gp_mean_fn(), k_kernel, fine, n, seed)
        f_kernel = gp.Kernel1d(config.gp2_sigma, config.gp2_length)
        f_rng_seed = int(seed) + 1  # independent stream for the hidden field
        fs = gp.sample_gp(config.gp2_mean_fn(), f_kernel, fine, n, f_rng_seed)
        inputs = np.empty((n, fine.size))
        outputs = np.empty((n, coarse.size))
        for i in range(n):
            k = FieldSample(fine, np.exp(logk[i].values))
            f_vals = np.exp(fs[i].values) if config.hidden_field_log else fs[i].values
            u = pde.solve_diffusion_1d(k, FieldSample(fine, f_vals))
            inputs[i] = k.values
            outputs[i] = _restrict_1d(u.values, fine, coarse)
        meta = {"kernel": {"sigma": config.gp_sigma, "length": config.gp_length},
                "mean": config.gp_mean_fn().to_dict(), "log_input": True,
                "hidden": {"sigma": config.gp2_sigma, "length": config.gp2_length,
                           "mean": config.gp2_mean_fn().to_dict(),
                           "log": config.hidden_field_log}}
        return OperatorDataset(problem, fine, coarse, inputs, outputs, seed, meta)

    if problem == "elliptic2d-stochastic":
        fine = config.input_grid_obj()
        coarse = config.train_grid_obj()
        f_kernel = gp.Kernel2d(config.gp_length, config.gp_length2)
        fs = gp.sample_gp(config.gp_mean_fn(), f_kernel, fine, n, seed)
        k_kernel = gp.Kernel2d(config.gp2_length, config.gp2_length2)
        logk = gp.sample_gp(config.gp2_mean_fn(), k_kernel, fine, n, int(seed) + 1)
        inputs = np.empty((n, fine.size))
        outputs = np.empty((n, coarse.size))
        for i in range(n):
            k = FieldSample(fine, np.exp(logk[i].values))
            u = pde.solve_elliptic_2d(k, fs[i])
            inputs[i] = fs[i].values
            outputs[i] = _restrict_2d(u.values, fine, coarse)
        meta = {"kernel": {"l1": config.gp_length, "l2": config.gp_length2},
                "mean": config.gp_mean_fn().to_dict(), "log_input": False,
                "hidden": {"l1": config.gp2_length, "l2": config.gp2_length2,
                           "mean": config.gp2_mean_fn().to_dict(), "log": True}}
        return OperatorDataset(problem, fine, coarse, inputs, outputs, seed, meta)

    raise ConfigError(f"cannot generate data for problem tag {problem!r}")


def dataset_write(ds: OperatorDataset, path) -> None:
    header = {
        "problem": ds.problem,
        "n": ds.n,
        "input_grid": ds.input_grid.to_dict(),
        "output_grid": ds.output_grid.to_dict(),
        "seed": ds.seed,
        "metadata": ds.metadata,
        "inputs_included": ds.inputs is not None,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.uint32(FORMAT_VERSION).tobytes())
        fh.write(np.uint32(len(blob)).tobytes())
        fh.write(blob)
        if ds.inputs is not None:
            fh.write(np.ascontiguousarray(ds.inputs, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(ds.outputs, dtype="<f8").tobytes())


def dataset_read(path) -> OperatorDataset:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise FileFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        raw = fh.read(8)
        if len(raw) < 8:
            raise TruncatedPayloadError(f"{path}: truncated before header")
        version = int(np.frombuffer(raw[:4], dtype="<u4")[0])
        if version != FORMAT_VERSION:
            raise VersionMismatchError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
        hlen = int(np.frombuffer(raw[4:], dtype="<u4")[0])
        hraw = fh.read(hlen)
        if len(hraw) < hlen:
            raise TruncatedPayloadError(f"{path}: truncated inside header")
        try:
            header = json.loads(hraw.decode("utf-8"))
            problem = header["problem"]
            n = int(header["n"])
            input_grid = grid_from_dict(header["input_grid"])
            output_grid = grid_from_dict(header["output_grid"])
            seed = int(header["seed"])
            metadata = header.get("metadata", {})
            with_inputs = bool(header.get("inputs_included", True))
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise FileFormatError(f"{path}: malformed header ({exc})") from exc
        inputs = None
        if with_inputs:
            want = n * input_grid.size * 8
            raw = fh.read(want)
            if len(raw) < want:
                raise TruncatedPayloadError(
                    f"{path}: input payload ends after {len(raw)} of {want} bytes")
            inputs = np.frombuffer(raw, dtype="<f8").reshape(n, input_grid.size).copy()
        want = n * output_grid.size * 8
        raw = fh.read(want)
        if len(raw) < want:
            raise TruncatedPayloadError(
                f"{path}: output payload ends after {len(raw)} of {want} bytes")
        outputs = np.frombuffer(raw, dtype="<f8").reshape(n, output_grid.size).copy()
    return OperatorDataset(problem, input_grid, output_grid, inputs, outputs, seed, metadata)
