"""Declarative run configuration: one JSON file, schema-validated.

Unknown keys are rejected everywhere. Command-line flags override file
values; presets fill in the scale-dependent blocks. The fully resolved
config is echoed into every output's provenance block.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .datasets import ImageDatasetSpec, VideoDatasetSpec
from .errors import ConfigError
from .params import LabelThresholds, ModelParams, RunProtocol, MAGNUS_RATIO
from .sweep import SweepSpec

_PARAM_KEYS = {"magnus_ratio", "f_p", "f_d", "f_s0", "xi_s", "pin_radius", "box_l",
               "rho_s", "rho_p", "dt", "r_cut", "pin_model"}
_PROTOCOL_KEYS = {"n_iter", "record_stride", "warmup_iterations",
                  "relax_iterations", "relax_dt", "relax_force_tol"}
_THRESHOLD_KEYS = {"s0", "v0", "sdrdf_r_start", "rdf_bin_width", "rdf_r_max"}
_SWEEP_KEYS = {"f_p_min", "f_p_max", "f_p_count", "f_d_min", "f_d_max", "f_d_count",
               "seeds_per_cell", "base_seed", "budget"}
_IMAGE_KEYS = {"total", "split_fraction", "seed", "render_mode", "frames_per_run",
               "xi_s_set", "xi_d_set", "run_budget"}
_VIDEO_KEYS = {"total", "proportion_mode", "split_fraction", "seed", "render_mode",
               "clips_per_run", "test_grid", "test_f_p_max", "test_f_d_max",
               "probe_count", "probe_clips_per_run", "run_budget"}
_TOP_KEYS = {"seed", "workers", "out", "params", "protocol", "thresholds",
             "sweep", "images", "videos"}

PRESETS = {
    "desk": {
        "sweep": {"f_p_min": 0.0, "f_p_max": 0.275, "f_p_count": 14,
                  "f_d_min": 0.0, "f_d_max": 0.02, "f_d_count": 6,
                  "seeds_per_cell": 3, "base_seed": 0},
        "images": {"total": 2400, "frames_per_run": 25, "run_budget": 2000},
        "videos": {"total": 1600, "proportion_mode": "balanced",
                   "test_grid": [14, 6], "probe_count": 640, "run_budget": 3000},
    },
    "paper": {
        # dt drops to 0.03 so exponential wells stay Euler-stable up to
        # f_p = 0.6 (stability needs f_p*e*dt/pin_radius < 2*alpha_d)
        "params": {"dt": 0.03},
        "protocol": {"relax_dt": 0.15},
        "sweep": {"f_p_min": 0.0, "f_p_max": 0.6, "f_p_count": 30,
                  "f_d_min": 0.0, "f_d_max": 0.06, "f_d_count": 28,
                  "seeds_per_cell": 10, "base_seed": 0, "budget": 10000},
        "images": {"total": 16800, "frames_per_run": 25, "run_budget": 8000},
        "videos": {"total": 15960, "proportion_mode": "balanced",
                   "test_grid": [30, 28], "probe_count": 2520, "run_budget": 12000},
    },
}


@dataclass
class RunConfig:
    """Resolved configuration for one CLI invocation."""

    seed: int = 0
    workers: int = 1
    out: str = "out"
    params: ModelParams = field(default_factory=ModelParams.create)
    protocol: RunProtocol = field(default_factory=RunProtocol)
    thresholds: LabelThresholds = field(default_factory=LabelThresholds)
    sweep: dict = field(default_factory=dict)
    images: dict = field(default_factory=dict)
    videos: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed, "workers": self.workers, "out": self.out,
            "params": self.params.to_dict(), "protocol": self.protocol.to_dict(),
            "thresholds": self.thresholds.to_dict(),
            "sweep": dict(self.sweep), "images": dict(self.images),
            "videos": dict(self.videos),
        }

    def sweep_spec(self) -> SweepSpec:
        block = dict(self.sweep)
        _check_keys(block, _SWEEP_KEYS, "sweep")
        missing = {"f_p_min", "f_p_max", "f_p_count", "f_d_min", "f_d_max",
                   "f_d_count", "seeds_per_cell"} - block.keys()
        if missing:
            raise ConfigError(f"sweep block missing keys: {sorted(missing)} "
                              f"(use --preset or a config file)")
        block.setdefault("base_seed", self.seed)
        return SweepSpec(params=self.params, thresholds=self.thresholds,
                         protocol=self.protocol, **block)

    def image_spec(self) -> ImageDatasetSpec:
        block = dict(self.images)
        _check_keys(block, _IMAGE_KEYS, "images")
        block.setdefault("seed", self.seed)
        if "xi_s_set" in block:
            block["xi_s_set"] = tuple(block["xi_s_set"])
        if "xi_d_set" in block:
            block["xi_d_set"] = tuple(block["xi_d_set"])
        return ImageDatasetSpec(params=self.params, thresholds=self.thresholds,
                                protocol=self.protocol, **block)

    def video_spec(self) -> VideoDatasetSpec:
        block = dict(self.videos)
        _check_keys(block, _VIDEO_KEYS, "videos")
        block.setdefault("seed", self.seed)
        if "test_grid" in block:
            block["test_grid"] = tuple(block["test_grid"])
        return VideoDatasetSpec(params=self.params, thresholds=self.thresholds,
                                protocol=self.protocol, **block)


def _check_keys(block: dict, allowed: set, name: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in '{name}' block: {sorted(unknown)}")


def _build_params(block: dict) -> ModelParams:
    _check_keys(block, _PARAM_KEYS, "params")
    block = dict(block)
    ratio = block.pop("magnus_ratio", MAGNUS_RATIO)
    try:
        return ModelParams.create(magnus_ratio=ratio, **block)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid params block: {exc}") from exc


def load_config(path=None, preset: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge config file, preset blocks, and flag overrides into a RunConfig."""
    data: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must contain a JSON object")
    _check_keys(data, _TOP_KEYS, "top-level")

    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        for block_name, block in PRESETS[preset].items():
            merged = dict(block)
            merged.update(data.get(block_name, {}))
            data[block_name] = merged

    overrides = overrides or {}
    params_block = dict(data.get("params", {}))
    for key in ("f_p", "f_d", "dt", "pin_model"):
        if overrides.get(key) is not None:
            params_block[key] = overrides[key]

    protocol_block = dict(data.get("protocol", {}))
    _check_keys(protocol_block, _PROTOCOL_KEYS, "protocol")
    thresholds_block = dict(data.get("thresholds", {}))
    _check_keys(thresholds_block, _THRESHOLD_KEYS, "thresholds")

    try:
        params = _build_params(params_block)
        protocol = RunProtocol(**protocol_block)
        thresholds = LabelThresholds(**thresholds_block)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    cfg = RunConfig(
        seed=int(overrides.get("seed") if overrides.get("seed") is not None
                 else data.get("seed", 0)),
        workers=int(overrides.get("workers") if overrides.get("workers") is not None
                    else data.get("workers", 1)),
        out=str(overrides.get("out") if overrides.get("out") is not None
                else data.get("out", "out")),
        params=params, protocol=protocol, thresholds=thresholds,
        sweep=data.get("sweep", {}), images=data.get("images", {}),
        videos=data.get("videos", {}),
    )
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    return cfg
