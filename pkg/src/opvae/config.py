"""Experiment configuration: file grammar, per-problem defaults, validation.

Config files are UTF-8 text with ``key = value`` lines, optional
``[section]`` headers, and ``#`` comments.  Keys that are unique across
the schema may be written without their section.  Unknown keys are
rejected with the offending line number; missing keys fall back to the
defaults of the declared problem tag.  ``config_echo`` emits the fully
resolved configuration in canonical form, and loading that echo
reproduces the same resolved config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields as dc_fields

from .errors import ConfigError
from .fields import Grid1d, Grid2d
from .gp import MeanFunction

__all__ = ["ExperimentConfig", "config_load", "config_loads", "config_echo", "default_config"]

TWO_PI = 2.0 * math.pi

PROBLEMS = ("diffusion1d", "poisson2d", "elliptic1d-stochastic",
            "elliptic2d-stochastic", "external")
MODELS = ("cvae", "vidon")
NOISE_MODES = ("none", "multiplicative", "additive")
MEAN_TAGS = ("zero", "sine", "sine2d")


@dataclass
class ExperimentConfig:
    """Every knob of an experiment, resolved and validated."""

    problem: str = "diffusion1d"
    model: str = "cvae"
    # data
    n_samples: int = 10000
    data_seed: int = 1
    input_grid: int = 401
    train_grid: int = 101
    eval_grid: int = 401
    hidden_field_log: bool = False
    # input-field GP
    gp_sigma: float = 0.5
    gp_length: float = 0.1
    gp_length2: float = 0.1
    gp_mean: str = "sine"
    gp_mean_amplitude: float = 1.0
    gp_mean_freq: float = TWO_PI
    gp_mean_phase: float = 0.0
    gp_mean_offset: float = 0.0
    # hidden/second-field GP (stochastic problems only)
    gp2_sigma: float = 0.1
    gp2_length: float = 0.1
    gp2_length2: float = 0.1
    gp2_mean: str = "zero"
    gp2_mean_amplitude: float = 1.0
    gp2_mean_freq: float = TWO_PI
    gp2_mean_phase: float = 0.0
    gp2_mean_offset: float = 0.0
    # sensors
    sensor_counts: tuple = (1, 2, 3, 4, 5, 6, 7, 8, 9, 10)
    d_min: dict = None
    noise_mode: str = "none"
    noise_sigma: float = 0.0
    batch_consistent: bool = False
    # networks
    loc_hidden: int = 40
    loc_layers: int = 2
    val_hidden: int = 40
    val_layers: int = 2
    attn_hidden: int = 32
    attn_layers: int = 4
    value_hidden: int = 32
    value_layers: int = 4
    branch_hidden: int = 64
    branch_layers: int = 4
    trunk_hidden: int = 64
    trunk_layers: int = 4
    encoder_hidden: int = 64
    encoder_layers: int = 4
    heads: int = 2
    embed_dim: int = 40
    head_dim: int = 40
    rank: int = 100
    latent_dim: int = 10
    noise_var: float = 1e-3
    # training
    lr: float = 1e-4
    batch_size: int = 1000
    iterations: int = 100000
    n_batches: int = 10
    train_seed: int = 2
    checkpoint_every: int = 0
    regenerate_batches: bool = False
    beta: float = 1.0
    # output
    run_dir: str = ""

    # -- derived helpers ---------------------------------------------------------

    @property
    def is_2d(self) -> bool:
        return self.problem in ("poisson2d", "elliptic2d-stochastic")

    @property
    def code_dim(self) -> int:
        return self.heads * self.head_dim

    def domain(self) -> tuple:
        """(a, b) for 1-d problems, (x0, x1, y0, y1) for 2-d."""
        return (0.0, 1.0, 0.0, 1.0) if self.is_2d else (-1.0, 1.0)

    def _grid(self, n: int):
        if self.is_2d:
            return Grid2d(0.0, 1.0, 0.0, 1.0, n, n)
        return Grid1d(-1.0, 1.0, n)

    def input_grid_obj(self):
        return self._grid(self.input_grid)

    def train_grid_obj(self):
        return self._grid(self.train_grid)

    def eval_grid_obj(self):
        return self._grid(self.eval_grid)

    def gp_mean_fn(self) -> MeanFunction:
        return MeanFunction(self.gp_mean, self.gp_mean_amplitude, self.gp_mean_freq,
                            self.gp_mean_phase, self.gp_mean_offset)

    def gp2_mean_fn(self) -> MeanFunction:
        return MeanFunction(self.gp2_mean, self.gp2_mean_amplitude, self.gp2_mean_freq,
                            self.gp2_mean_phase, self.gp2_mean_offset)

    def to_dict(self) -> dict:
        out = {}
        for f in dc_fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = list(v)
            elif isinstance(v, dict):
                v = {str(k): val for k, val in v.items()}
            out[f.name] = v
        return out

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        kwargs = dict(d)
        if "sensor_counts" in kwargs:
            kwargs["sensor_counts"] = tuple(int(c) for c in kwargs["sensor_counts"])
        if kwargs.get("d_min") is not None:
            kwargs["d_min"] = {int(k): float(v) for k, v in kwargs["d_min"].items()}
        cfg = ExperimentConfig(**kwargs)
        _validate(cfg)
        return cfg


# --------------------------------------------------------------------------------
# Schema: (section, key) -> (attribute, parser, formatter)

def _parse_bool(s: str) -> bool:
    if s.lower() in ("true", "yes", "1"):
        return True
    if s.lower() in ("false", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _parse_counts(s: str) -> tuple:
    return tuple(int(p.strip()) for p in s.split(",") if p.strip())


def _parse_dmin(s: str) -> dict:
    out = {}
    for part in s.split(","):
        part = part.strip()
        if not part:
            continue
        m, _, d = part.partition(":")
        out[int(m.strip())] = float(d.strip())
    return out


def _fmt_counts(v) -> str:
    return ",".join(str(c) for c in v)


def _fmt_dmin(v) -> str:
    return ",".join(f"{m}:{v[m]!r}" for m in sorted(v))


def _fmt_plain(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


_SCHEMA: dict = {}
_BY_KEY: dict = {}


def _add(section, key, attr, parser, formatter=_fmt_plain):
    _SCHEMA[(section, key)] = (attr, parser, formatter)
    _BY_KEY.setdefault(key, []).append((section, key))


_add("problem", "problem", "problem", str)
_add("problem", "model", "model", str)
_add("data", "n_samples", "n_samples", int)
_add("data", "seed", "data_seed", int)
_add("data", "input_grid", "input_grid", int)
_add("data", "train_grid", "train_grid", int)
_add("data", "eval_grid", "eval_grid", int)
_add("data", "hidden_field_log", "hidden_field_log", _parse_bool)
for pre in ("gp", "gp2"):
    _add(pre, "sigma", f"{pre}_sigma", float)
    _add(pre, "length", f"{pre}_length", float)
    _add(pre, "length2", f"{pre}_length2", float)
    _add(pre, "mean", f"{pre}_mean", str)
    _add(pre, "mean_amplitude", f"{pre}_mean_amplitude", float)
    _add(pre, "mean_freq", f"{pre}_mean_freq", float)
    _add(pre, "mean_phase", f"{pre}_mean_phase", float)
    _add(pre, "mean_offset", f"{pre}_mean_offset", float)
_add("sensors", "counts", "sensor_counts", _parse_counts, _fmt_counts)
_add("sensors", "d_min", "d_min", _parse_dmin, _fmt_dmin)
_add("sensors", "noise", "noise_mode", str)
_add("sensors", "noise_sigma", "noise_sigma", float)
_add("sensors", "batch_consistent", "batch_consistent", _parse_bool)
for name in ("loc", "val", "attn", "value", "branch", "trunk", "encoder"):
    _add("network", f"{name}_hidden", f"{name}_hidden", int)
    _add("network", f"{name}_layers", f"{name}_layers", int)
_add("network", "heads", "heads", int)
_add("network", "embed_dim", "embed_dim", int)
_add("network", "head_dim", "head_dim", int)
_add("network", "rank", "rank", int)
_add("network", "latent_dim", "latent_dim", int)
_add("network", "noise_var", "noise_var", float)
_add("training", "lr", "lr", float)
_add("training", "batch_size", "batch_size", int)
_add("training", "iterations", "iterations", int)
_add("training", "n_batches", "n_batches", int)
_add("training", "seed", "train_seed", int)
_add("training", "checkpoint_every", "checkpoint_every", int)
_add("training", "regenerate_batches", "regenerate_batches", _parse_bool)
_add("training", "beta", "beta", float)
_add("output", "run_dir", "run_dir", str)

_SECTION_ORDER = ("problem", "data", "gp", "gp2", "sensors", "network", "training", "output")


# --------------------------------------------------------------------------------
# Per-problem defaults.  Only the entries that differ from the dataclass
# defaults (which are the 1-d diffusion settings) need listing.

_DEFAULTS = {
    "diffusion1d": {},
    "elliptic1d-stochastic": {
        "gp_sigma": 0.3, "gp_length": 0.05,
        "gp_mean_freq": math.pi, "gp_mean_phase": 1.0,
        "gp2_sigma": 0.1, "gp2_length": 0.1,
        "gp2_mean": "sine", "gp2_mean_freq": TWO_PI, "gp2_mean_offset": 0.1,
        "noise_var": 1e-4,
    },
    "poisson2d": {
        "n_samples": 80000, "input_grid": 101, "train_grid": 51, "eval_grid": 101,
        "gp_mean": "sine2d", "gp_mean_amplitude": 4.0,
        "sensor_counts": (1, 2, 3, 4),
        "d_min": {1: 0.0, 2: 0.8, 3: 0.5, 4: 0.5},
        "loc_layers": 4, "val_layers": 4,
        "attn_hidden": 64, "value_hidden": 64,
        "branch_hidden": 128, "trunk_hidden": 128, "encoder_hidden": 128,
        "heads": 3, "latent_dim": 100, "noise_var": 1e-4,
        "batch_size": 20000, "n_batches": 4, "iterations": 20000,
    },
    "elliptic2d-stochastic": {
        "n_samples": 80000, "input_grid": 101, "train_grid": 51, "eval_grid": 101,
        "gp_mean": "sine2d", "gp_mean_amplitude": 4.0,
        "gp2_mean": "zero",
        "sensor_counts": (1, 2, 3, 4),
        "d_min": {1: 0.0, 2: 0.8, 3: 0.5, 4: 0.5},
        "loc_layers": 4, "val_layers": 4,
        "attn_hidden": 64, "value_hidden": 64,
        "branch_hidden": 128, "trunk_hidden": 128, "encoder_hidden": 128,
        "heads": 3, "latent_dim": 100, "noise_var": 1e-4,
        "batch_size": 20000, "n_batches": 4, "iterations": 50000,
    },
    "external": {},
}


def default_config(problem: str) -> ExperimentConfig:
    """Fully resolved defaults for a problem tag."""
    if problem not in PROBLEMS:
        raise ConfigError(f"unknown problem tag {problem!r}; expected one of {PROBLEMS}")
    cfg = ExperimentConfig(problem=problem)
    for attr, value in _DEFAULTS[problem].items():
        setattr(cfg, attr, dict(value) if isinstance(value, dict) else value)
    if cfg.d_min is None:
        cfg.d_min = {}
    _validate(cfg)
    return cfg


def _positive(cfg, attr, strict=True):
    v = getattr(cfg, attr)
    if (v <= 0) if strict else (v < 0):
        bound = ">" if strict else ">="
        raise ConfigError(f"{attr} must be {bound} 0, got {v}")


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.problem not in PROBLEMS:
        raise ConfigError(f"problem must be one of {PROBLEMS}, got {cfg.problem!r}")
    if cfg.model not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}, got {cfg.model!r}")
    if cfg.noise_mode not in NOISE_MODES:
        raise ConfigError(f"noise must be one of {NOISE_MODES}, got {cfg.noise_mode!r}")
    for tag_attr in ("gp_mean", "gp2_mean"):
        if getattr(cfg, tag_attr) not in MEAN_TAGS:
            raise ConfigError(f"{tag_attr} must be one of {MEAN_TAGS}")
    for attr in ("n_samples", "input_grid", "train_grid", "eval_grid",
                 "loc_hidden", "loc_layers", "val_hidden", "val_layers",
                 "attn_hidden", "attn_layers", "value_hidden", "value_layers",
                 "branch_hidden", "branch_layers", "trunk_hidden", "trunk_layers",
                 "encoder_hidden", "encoder_layers",
                 "heads", "embed_dim", "head_dim", "rank",
                 "batch_size", "iterations", "n_batches"):
        _positive(cfg, attr)
    for attr in ("gp_length", "gp_length2", "gp2_length", "gp2_length2",
                 "noise_var", "lr", "beta"):
        _positive(cfg, attr)
    for attr in ("gp_sigma", "gp2_sigma", "noise_sigma"):
        _positive(cfg, attr, strict=False)
    if cfg.checkpoint_every < 0:
        raise ConfigError(f"checkpoint_every must be >= 0, got {cfg.checkpoint_every}")
    if not cfg.sensor_counts:
        raise ConfigError("sensor counts must be a nonempty list of positive integers")
    if any(c <= 0 for c in cfg.sensor_counts):
        raise ConfigError(f"sensor counts must be positive, got {cfg.sensor_counts}")
    min_latent = 1 if cfg.model == "cvae" else 0
    if cfg.latent_dim < min_latent:
        raise ConfigError(f"latent_dim must be >= {min_latent} for model {cfg.model!r}, "
                          f"got {cfg.latent_dim}")
    if cfg.d_min is None:
        cfg.d_min = {}
    for m, d in cfg.d_min.items():
        if m <= 0 or d < 0:
            raise ConfigError(f"d_min entries need positive count and d >= 0, got {m}:{d}")


def config_loads(text: str) -> ExperimentConfig:
    """Parse config text; see module docstring for the grammar."""
    entries = []   # (lineno, section, key, raw value)
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTION_ORDER:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if section is None:
            matches = _BY_KEY.get(key, [])
            if not matches:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if len(matches) > 1:
                secs = ", ".join(s for s, _ in matches)
                raise ConfigError(
                    f"line {lineno}: key {key!r} is ambiguous (sections: {secs}); add a section header")
            entries.append((lineno, matches[0][0], key, value))
        else:
            if (section, key) not in _SCHEMA:
                raise ConfigError(f"line {lineno}: unknown key {key!r} in section [{section}]")
            entries.append((lineno, section, key, value))

    problem = "diffusion1d"
    for _, sec, key, value in entries:
        if (sec, key) == ("problem", "problem"):
            problem = value
    cfg = default_config(problem)
    for lineno, sec, key, value in entries:
        attr, parser, _ = _SCHEMA[(sec, key)]
        try:
            setattr(cfg, attr, parser(value))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    _validate(cfg)
    return cfg


def config_load(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_loads(fh.read())


def config_echo(cfg: ExperimentConfig) -> str:
    """Canonical text of the fully resolved configuration."""
    lines = []
    for section in _SECTION_ORDER:
        lines.append(f"[{section}]")
        for (sec, key), (attr, _, formatter) in _SCHEMA.items():
            if sec != section:
                continue
            lines.append(f"{key} = {formatter(getattr(cfg, attr))}")
        lines.append("")
    return "\n".join(lines)
