"""
config.py

Run configuration for the atslab command line.

- Loads a YAML (or JSON) config file
- Validates the params, grids and tolerances sections
- Merges command-line overrides into a RunConfig
"""

import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from .ats_model import AtsParams
from .errors import ConfigError, DomainError
from .numerics import Tolerances

PARAM_KEYS = ("alpha", "beta", "delta", "k_bar", "eta_bar", "sigma_bar")
FORMATS = ("csv", "json")
THREADS_ENV = "ATSLAB_THREADS"

DEFAULT_PARAMS = {"alpha": 0.0, "beta": 1.0, "delta": -0.5, "k_bar": 1.0, "eta_bar": 1.0, "sigma_bar": 0.2}

DEFAULT_GRIDS = {
    "t": [1e-4, 1e-3, 1e-2, 1e-1],
    "y": [-1.0, -0.5, 0.0, 0.5, 1.0],
    "alpha": [0.0, 0.25, 0.5, 0.75],
    "k_bar": {"start": 0.05, "stop": 3.0, "num": 31},
    "sigma_eta": {"start": 0.05, "stop": 3.0, "num": 31},
    "beta": {"start": 0.0, "stop": 2.0, "num": 41},
    "delta": {"start": -1.5, "stop": 0.0, "num": 31},
}


def load_yaml_config(config_path="config.yaml"):
    """
    Load a YAML configuration file and return it as a dict.

    JSON files load through the same path.

    Parameters
    ----------
    config_path : str
        Path to the YAML or JSON file.

    Returns
    -------
    dict
        Parsed content.

    Raises
    ------
    FileNotFoundError
        If the file does not exist.
    ConfigError
        If the content is empty, unparsable or not a mapping.
    """
    if not os.path.exists(config_path):
        raise FileNotFoundError("Config file not found: {}".format(config_path))

    with open(config_path, "r") as f:
        try:
            cfg = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError("Config is not valid YAML/JSON: {}: {}".format(config_path, e)) from e

    if cfg is None:
        raise ConfigError("Config is empty: {}".format(config_path))

    if not isinstance(cfg, dict):
        raise ConfigError("Config root must be a mapping (dict).")

    return cfg


def get_params(cfg):
    """
    Extract and validate the 'params' section from the loaded config.

    Parameters
    ----------
    cfg : dict
        Parsed configuration.

    Returns
    -------
    AtsParams

    Raises
    ------
    KeyError
        If the section or one of its keys is missing.
    ConfigError
        If values are not numbers or outside their domain.
    """
    if "params" not in cfg:
        raise KeyError("Missing required config section: params")

    params = cfg["params"]
    if not isinstance(params, dict):
        raise ConfigError("Config key 'params' must be a mapping (dict).")

    for key in PARAM_KEYS:
        if key not in params:
            raise KeyError("Missing required config key: params.{}".format(key))

    return _make_params(params)


def _make_params(values: Dict[str, Any]) -> AtsParams:
    try:
        return AtsParams.from_dict(values)
    except DomainError as e:
        raise ConfigError(str(e)) from e


def parse_grid(name: str, spec) -> List[float]:
    """
    A grid given either as a list of numbers or as a mapping
    {start, stop, num, spacing: linear|log}.

    Raises
    ------
    ConfigError
        If the grid is empty, non-numeric or not strictly increasing.
    """
    if isinstance(spec, dict):
        unknown = set(spec) - {"start", "stop", "num", "spacing"}
        if unknown:
            raise ConfigError("grids.{}: unknown keys {}".format(name, sorted(unknown)))
        try:
            start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError("grids.{} needs numeric start, stop and num: {}".format(name, e)) from e
        spacing = spec.get("spacing", "linear")
        if spacing == "linear":
            # snapped so that round values such as -0.5 and 1.0 come out exact
            values = np.round(np.linspace(start, stop, num), 12)
        elif spacing == "log":
            if start <= 0.0 or stop <= 0.0:
                raise ConfigError("grids.{}: log spacing needs positive ends".format(name))
            values = np.geomspace(start, stop, num)
        else:
            raise ConfigError("grids.{}: spacing must be 'linear' or 'log', got {!r}".format(name, spacing))
    elif isinstance(spec, (list, tuple)):
        try:
            values = np.array([float(v) for v in spec])
        except (TypeError, ValueError) as e:
            raise ConfigError("grids.{} must contain numbers: {}".format(name, e)) from e
    else:
        values = np.array([_as_float("grids." + name, spec)])

    if values.size == 0:
        raise ConfigError("grids.{} must not be empty".format(name))
    if not np.all(np.isfinite(values)):
        raise ConfigError("grids.{} must be finite".format(name))
    if np.any(np.diff(values) <= 0.0):
        raise ConfigError("grids.{} must be strictly increasing".format(name))
    return [float(v) for v in values]


def _as_float(name: str, value) -> float:
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise ConfigError("{} must be a number, got {!r}".format(name, value)) from e


def resolve_threads(flag: Optional[int] = None) -> int:
    """Worker count: the flag, then $ATSLAB_THREADS, then the CPU count."""
    if flag is not None:
        threads = flag
    elif os.environ.get(THREADS_ENV):
        try:
            threads = int(os.environ[THREADS_ENV])
        except ValueError as e:
            raise ConfigError("{} must be an integer, got {!r}".format(THREADS_ENV, os.environ[THREADS_ENV])) from e
    else:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise ConfigError("threads must be >= 1, got {}".format(threads))
    return threads


@dataclass
class RunConfig:
    """
    Everything a command needs: model parameters, grids, output settings,
    seed and tolerances.
    """

    params: AtsParams
    t_grid: List[float] = field(default_factory=lambda: list(DEFAULT_GRIDS["t"]))
    y_grid: List[float] = field(default_factory=lambda: list(DEFAULT_GRIDS["y"]))
    alpha_grid: List[float] = field(default_factory=lambda: list(DEFAULT_GRIDS["alpha"]))
    k_grid: List[float] = field(default_factory=lambda: parse_grid("k_bar", DEFAULT_GRIDS["k_bar"]))
    se_grid: List[float] = field(default_factory=lambda: parse_grid("sigma_eta", DEFAULT_GRIDS["sigma_eta"]))
    beta_grid: List[float] = field(default_factory=lambda: parse_grid("beta", DEFAULT_GRIDS["beta"]))
    delta_grid: List[float] = field(default_factory=lambda: parse_grid("delta", DEFAULT_GRIDS["delta"]))
    out: Optional[str] = None
    fmt: str = "csv"
    seed: int = 42
    threads: int = 1
    tol: Tolerances = field(default_factory=Tolerances)
    mc_paths: int = 10 ** 6


def build_run_config(cfg: Optional[Dict[str, Any]] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Merge a loaded config and command-line overrides into a RunConfig.

    Overrides with value None are ignored. Parameter overrides apply key by key
    on top of the config's params section, or of the default Case-5 set when
    the config has none.

    Raises
    ------
    KeyError
        If the config has an incomplete params section.
    ConfigError
        For malformed values.
    """
    cfg = cfg or {}
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    values = get_params(cfg).to_dict() if "params" in cfg else dict(DEFAULT_PARAMS)
    for key in PARAM_KEYS:
        if key in overrides:
            values[key] = _as_float(key, overrides[key])
    params = _make_params(values)

    grids = dict(DEFAULT_GRIDS)
    if "grids" in cfg:
        if not isinstance(cfg["grids"], dict):
            raise ConfigError("Config key 'grids' must be a mapping (dict).")
        unknown = set(cfg["grids"]) - set(DEFAULT_GRIDS)
        if unknown:
            raise ConfigError("grids: unknown keys {}".format(sorted(unknown)))
        grids.update(cfg["grids"])
    if "t" in overrides:
        grids["t"] = overrides["t"]
    if "y" in overrides:
        grids["y"] = overrides["y"]

    output = cfg.get("output") or {}
    if not isinstance(output, dict):
        raise ConfigError("Config key 'output' must be a mapping (dict).")
    fmt = overrides.get("format", output.get("format", "csv"))
    if fmt not in FORMATS:
        raise ConfigError("format must be one of {}, got {!r}".format(FORMATS, fmt))

    seed = overrides.get("seed", cfg.get("seed", 42))
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer, got {!r}".format(seed))

    mc_paths = cfg.get("mc_paths", 10 ** 6)
    if isinstance(mc_paths, bool) or not isinstance(mc_paths, int) or mc_paths < 2:
        raise ConfigError("mc_paths must be an integer >= 2, got {!r}".format(mc_paths))

    tolerances = cfg.get("tolerances")
    if tolerances is not None and not isinstance(tolerances, dict):
        raise ConfigError("Config key 'tolerances' must be a mapping (dict).")

    t_grid = parse_grid("t", grids["t"])
    if t_grid[0] <= 0.0:
        raise ConfigError("grids.t must be positive, got {}".format(t_grid[0]))
    alpha_grid = parse_grid("alpha", grids["alpha"])
    if alpha_grid[0] < 0.0 or alpha_grid[-1] >= 1.0:
        raise ConfigError("grids.alpha must lie in [0, 1)")
    k_grid = parse_grid("k_bar", grids["k_bar"])
    se_grid = parse_grid("sigma_eta", grids["sigma_eta"])
    if k_grid[0] <= 0.0 or se_grid[0] <= 0.0:
        raise ConfigError("grids.k_bar and grids.sigma_eta must be positive")
    beta_grid = parse_grid("beta", grids["beta"])
    if beta_grid[0] < 0.0:
        raise ConfigError("grids.beta must be non-negative, got {}".format(beta_grid[0]))
    delta_grid = parse_grid("delta", grids["delta"])
    if delta_grid[-1] > 0.0:
        raise ConfigError("grids.delta must be non-positive, got {}".format(delta_grid[-1]))

    return RunConfig(
        params=params,
        t_grid=t_grid,
        y_grid=parse_grid("y", grids["y"]),
        alpha_grid=alpha_grid,
        k_grid=k_grid,
        se_grid=se_grid,
        beta_grid=beta_grid,
        delta_grid=delta_grid,
        out=overrides.get("out", output.get("path")),
        fmt=fmt,
        seed=seed,
        threads=resolve_threads(overrides.get("threads", cfg.get("threads"))),
        tol=Tolerances.from_mapping(tolerances),
        mc_paths=mc_paths,
    )
