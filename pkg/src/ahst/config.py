"""Run configuration (JSON)."""

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, GeometryError
from .imaging import NoiseModel
from .modes import DEFAULT_L_MAX, DEFAULT_N_PIXELS, DEFAULT_SIGMA, DEFAULT_WINDOW, BeamGeometry
from .recon import METHODS
from .states import state_from_spec


@dataclass
class NoiseConfig:
    photon_budget: float = math.inf  # null in JSON = infinite
    dark_level: float = 0.0
    bit_depth: int = 0
    waist_error: float = 0.0

    def model(self):
        try:
            return NoiseModel(self.photon_budget, self.dark_level, self.bit_depth, self.waist_error)
        except ValueError as exc:
            raise ConfigError(f"noise: {exc}") from exc


@dataclass
class RunConfig:
    sigma: float = DEFAULT_SIGMA
    n_pixels: int = DEFAULT_N_PIXELS
    window: float = DEFAULT_WINDOW
    l_max: int = DEFAULT_L_MAX
    dim: int = DEFAULT_L_MAX + 1
    state: object = None  # inline spec dict or path to a spec file
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    seed: int = 0
    repetitions: int = 10
    r_cut: float = None  # cycles/mm; None = default for l_max
    method: str = "fit"
    subtract_dark: bool = False
    gouy_rotate_90: bool = False
    kernel_cache: str = None
    wigner_extent: float = 6.0
    wigner_points: int = 201
    out: str = "out"

    def geometry(self, sigma=None):
        try:
            return BeamGeometry.default(self.sigma if sigma is None else sigma, self.n_pixels, self.window)
        except GeometryError as exc:
            raise ConfigError(f"geometry: {exc}") from exc

    def recon_sigma(self):
        """Waist assumed by the reconstruction (including any miscalibration)."""
        return self.sigma * (1 + self.noise.waist_error)

    def target_state(self, base=None):
        if self.state is None:
            return None
        spec = self.state
        if isinstance(spec, str):
            path = Path(spec)
            if base is not None and not path.is_absolute():
                path = Path(base) / path
            spec = load_json(path, "state spec")
        return state_from_spec(spec, self.dim)


def load_json(path, what="config"):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} {path} is not valid JSON: {exc}") from exc


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    return data


def config_from_dict(data):
    data = dict(_build(RunConfig, data, "config"))
    noise = data.pop("noise", {}) or {}
    noise = dict(_build(NoiseConfig, noise, "config.noise"))
    if noise.get("photon_budget", math.inf) is None:
        noise["photon_budget"] = math.inf
    try:
        cfg = RunConfig(noise=NoiseConfig(**noise), **data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    _validate(cfg)
    return cfg


def _validate(cfg):
    ints = {"n_pixels": cfg.n_pixels, "l_max": cfg.l_max, "dim": cfg.dim, "seed": cfg.seed,
            "repetitions": cfg.repetitions, "wigner_points": cfg.wigner_points,
            "noise.bit_depth": cfg.noise.bit_depth}
    for key, value in ints.items():
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg.l_max < 0 or not 1 <= cfg.dim <= cfg.l_max + 1:
        raise ConfigError(f"need 1 <= dim <= l_max + 1, got dim={cfg.dim}, l_max={cfg.l_max}")
    if cfg.repetitions < 1:
        raise ConfigError("repetitions must be >= 1")
    if cfg.method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {cfg.method!r}")
    if cfg.r_cut is not None and not cfg.r_cut > 0:
        raise ConfigError("r_cut must be positive")
    cfg.geometry()
    cfg.noise.model()


def load_config(path=None, **overrides):
    data = {} if path is None else load_json(path)
    cfg = config_from_dict(data)
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    _validate(cfg)
    return cfg
