"""Model checkpoints: bit-exact serialization of parameters and config.

File format (magic "UQSO", version 1): magic bytes, u32 LE version,
u32 LE header length, UTF-8 JSON header, then one contiguous
little-endian float64 blob.  The header carries the full resolved config,
the training-grid size, the ordered parameter manifest (name, shape), the
iteration reached, and optionally the Adam state descriptor; the blob
holds the parameters in manifest order followed, when present, by the
optimizer's first- and second-moment accumulators in the same order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .errors import FileFormatError, TruncatedPayloadError, VersionMismatchError
from .fields import grid_from_dict
from .model import OperatorModel
from .nn import AdamState

__all__ = ["ModelCheckpoint", "checkpoint_write", "checkpoint_read",
           "checkpoint_from_model", "build_model"]

MAGIC = b"UQSO"
FORMAT_VERSION = 1


@dataclass
class ModelCheckpoint:
    """Architecture descriptor plus the flat parameter blob."""

    config: ExperimentConfig
    train_grid: object          # grid the model's u-bar inputs live on
    manifest: list              # [(name, shape tuple), ...] in parameter order
    blob: np.ndarray            # flat float64: params (+ adam m, v when present)
    iteration: int
    adam: dict | None = None    # {"lr", "beta1", "beta2", "eps", "step"} or None

    @property
    def train_points(self) -> int:
        return self.train_grid.size

    @property
    def param_count(self) -> int:
        return sum(int(np.prod(shape)) for _, shape in self.manifest)

    def parameter(self, name: str) -> np.ndarray:
        offset = 0
        for pname, shape in self.manifest:
            size = int(np.prod(shape))
            if pname == name:
                return self.blob[offset:offset + size].reshape(shape).copy()
            offset += size
        raise KeyError(name)

    def apply_to(self, model: OperatorModel) -> None:
        """Load parameters into a model, validating the manifest entry-by-entry."""
        named = model.named_parameters()
        if len(named) != len(self.manifest):
            raise FileFormatError(
                f"checkpoint has {len(self.manifest)} parameters, model has {len(named)}")
        offset = 0
        for (mname, mshape), (pname, p) in zip(self.manifest, named):
            if mname != pname or tuple(mshape) != tuple(p.shape):
                raise FileFormatError(
                    f"manifest entry {mname!r} {tuple(mshape)} does not match "
                    f"model parameter {pname!r} {tuple(p.shape)}")
            size = int(np.prod(mshape))
            p.data = self.blob[offset:offset + size].reshape(mshape).copy()
            offset += size

    def restore_adam(self, model: OperatorModel) -> AdamState | None:
        if self.adam is None:
            return None
        params = model.parameters()
        state = AdamState(params, self.adam["lr"], self.adam["beta1"],
                          self.adam["beta2"], self.adam["eps"])
        state.step = int(self.adam["step"])
        offset = self.param_count
        for arrays in (state.m, state.v):
            for i, p in enumerate(params):
                size = p.size
                arrays[i] = self.blob[offset:offset + size].reshape(p.shape).copy()
                offset += size
        return state


def checkpoint_from_model(model: OperatorModel, cfg: ExperimentConfig, train_grid,
                          iteration: int, adam: AdamState | None = None) -> ModelCheckpoint:
    named = model.named_parameters()
    manifest = [(name, tuple(p.shape)) for name, p in named]
    pieces = [p.data.reshape(-1) for _, p in named]
    adam_meta = None
    if adam is not None:
        adam_meta = {"lr": adam.lr, "beta1": adam.beta1, "beta2": adam.beta2,
                     "eps": adam.eps, "step": adam.step}
        pieces.extend(m.reshape(-1) for m in adam.m)
        pieces.extend(v.reshape(-1) for v in adam.v)
    blob = np.concatenate(pieces) if pieces else np.zeros(0)
    return ModelCheckpoint(cfg, train_grid, manifest, blob, iteration, adam_meta)


def build_model(ckpt: ModelCheckpoint) -> OperatorModel:
    """Reconstruct the model a checkpoint was saved from and load its weights."""
    model = OperatorModel.from_config(ckpt.config, ckpt.train_points, ckpt.config.train_seed)
    ckpt.apply_to(model)
    return model


def checkpoint_write(ckpt: ModelCheckpoint, path) -> None:
    header = {
        "config": ckpt.config.to_dict(),
        "train_grid": ckpt.train_grid.to_dict(),
        "manifest": [[name, list(shape)] for name, shape in ckpt.manifest],
        "iteration": ckpt.iteration,
        "adam": ckpt.adam,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.uint32(FORMAT_VERSION).tobytes())
        fh.write(np.uint32(len(blob)).tobytes())
        fh.write(blob)
        fh.write(np.ascontiguousarray(ckpt.blob, dtype="<f8").tobytes())


def checkpoint_read(path) -> ModelCheckpoint:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise FileFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        raw = fh.read(8)
        if len(raw) < 8:
            raise TruncatedPayloadError(f"{path}: truncated before header")
        version = int(np.frombuffer(raw[:4], dtype="<u4")[0])
        if version != FORMAT_VERSION:
            raise VersionMismatchError(
                f"{path}: format version {version}, expected {FORMAT_VERSION}")
        hlen = int(np.frombuffer(raw[4:], dtype="<u4")[0])
        hraw = fh.read(hlen)
        if len(hraw) < hlen:
            raise TruncatedPayloadError(f"{path}: truncated inside header")
        try:
            header = json.loads(hraw.decode("utf-8"))
            cfg = ExperimentConfig.from_dict(header["config"])
            train_grid = grid_from_dict(header["train_grid"])
            manifest = [(name, tuple(shape)) for name, shape in header["manifest"]]
            iteration = int(header["iteration"])
            adam = header.get("adam")
        except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
            raise FileFormatError(f"{path}: malformed header ({exc})") from exc
        expected = sum(int(np.prod(shape)) for _, shape in manifest)
        if adam is not None:
            expected *= 3
        raw = fh.read()
    blob = np.frombuffer(raw[:expected * 8], dtype="<f8").copy()
    if blob.size != expected:
        raise TruncatedPayloadError(
            f"{path}: blob has {blob.size} values, manifest declares {expected}")
    if len(raw) > expected * 8:
        raise FileFormatError(f"{path}: {len(raw) - expected * 8} trailing bytes after blob")
    return ModelCheckpoint(cfg, train_grid, manifest, blob, iteration, adam)
