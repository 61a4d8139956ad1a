"""Run configuration: an INI file whose values command-line flags override.

Example::

    [run]
    seed = 42
    out = results
    threads = 4

    [generate]
    method = kde-knn
    per_class = 540

    [experiment]
    seeds = 0, 1, 2
    models = svm_rbf
"""

import configparser
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from kdeknn.errors import ConfigError

OUT_ENV = "KDEKNN_OUT"

# option name -> (section, parser)
def _ints(text):
    return tuple(int(v) for v in str(text).replace(",", " ").split())


def _floats(text):
    return tuple(float(v) for v in str(text).replace(",", " ").split())


def _words(text):
    return tuple(v for v in str(text).replace(",", " ").split())


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _named_paths(text):
    out = []
    for item in _words(text):
        name, sep, path = item.partition("=")
        if not sep:
            name, path = Path(item).stem, item
        out.append((name, path))
    return tuple(out)


SCHEMA = {
    "seed": ("run", int),
    "out": ("run", str),
    "threads": ("run", int),
    "format": ("run", str),
    "label_column": ("run", str),
    "input": ("data", str),
    "external": ("data", str),
    "train_fraction": ("data", float),
    "n_per_class": ("cohort", _ints),
    "external_n_per_class": ("cohort", _ints),
    "n_features": ("cohort", int),
    "class_mean_shift": ("cohort", _floats),
    "covariance_scale": ("cohort", float),
    "band_correlation": ("cohort", float),
    "skew": ("cohort", float),
    "external_drift": ("cohort", _floats),
    "method": ("generate", str),
    "per_class": ("generate", _ints),
    "knn_k": ("generate", int),
    "smote_k": ("generate", int),
    "bandwidth_rule": ("generate", str),
    "regularization": ("generate", float),
    "max_attempts": ("generate", int),
    "batch_factor": ("generate", int),
    "units": ("generate", str),
    "real": ("privacy", str),
    "synthetic": ("privacy", _named_paths),
    "bins": ("privacy", int),
    "direction": ("privacy", str),
    "auc_report": ("privacy", str),
    "which": ("experiment", int),
    "methods": ("experiment", _words),
    "models": ("experiment", _words),
    "seeds": ("experiment", _ints),
    "fractions": ("experiment", _ints),
    "resplit": ("experiment", _bool),
}


@dataclass
class RunConfig:
    seed: int = 42
    out: str = None
    threads: int = 1
    format: str = "table"
    label_column: str = "label"
    input: str = None
    external: str = None
    train_fraction: float = 0.85
    n_per_class: tuple = None
    external_n_per_class: tuple = None
    n_features: int = None
    class_mean_shift: tuple = None
    covariance_scale: float = None
    band_correlation: float = None
    skew: float = None
    external_drift: tuple = None
    method: str = "kde_knn"
    per_class: tuple = (540, 540)
    knn_k: int = 5
    smote_k: int = 5
    bandwidth_rule: str = "scott"
    regularization: float = 1e-6
    max_attempts: int = None
    batch_factor: int = 4
    units: str = "raw"
    real: str = None
    synthetic: tuple = ()
    bins: int = 20
    direction: str = "synthetic_to_real"
    auc_report: str = None
    which: int = None
    methods: tuple = ("smote", "kde", "kde_knn")
    models: tuple = ("random_forest", "svm_linear", "svm_rbf")
    seeds: tuple = (0, 1, 2)
    fractions: tuple = (100, 80, 60, 40, 20, 0)
    resplit: bool = True
    sources: dict = field(default_factory=dict, repr=False)

    @property
    def out_dir(self):
        return Path(self.out or os.environ.get(OUT_ENV) or "kdeknn_out")

    def to_dict(self):
        skip = {"sources"}
        out = {}
        for f in fields(self):
            if f.name in skip:
                continue
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


def read_config_file(path):
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            key = key.replace("-", "_")
            if key not in SCHEMA:
                raise ConfigError(f"{path}: unknown option [{section}] {key}")
            expected, conv = SCHEMA[key]
            if section != expected:
                raise ConfigError(f"{path}: option {key} belongs in section [{expected}], found in [{section}]")
            try:
                values[key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"{path}: bad value for {key}: {exc}") from None
    return values


def build_config(file_path=None, overrides=None):
    """Defaults, then the config file, then non-None ``overrides`` (flags win)."""
    cfg = RunConfig()
    if file_path:
        for key, value in read_config_file(file_path).items():
            setattr(cfg, key, value)
            cfg.sources[key] = "file"
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in SCHEMA:
            raise ConfigError(f"unknown option {key}")
        conv = SCHEMA[key][1]
        if isinstance(value, str) and conv not in (str, int, float):
            value = conv(value)
        setattr(cfg, key, value)
        cfg.sources[key] = "flag"
    validate(cfg)
    return cfg


def _require_file(path, what):
    if path is None:
        raise ConfigError(f"{what} path is required")
    if not Path(path).is_file():
        raise ConfigError(f"{what} file not found: {path}")


def validate(cfg, command=None):
    if cfg.threads < 1:
        raise ConfigError("threads must be at least 1")
    if cfg.format not in ("json", "table", "csv"):
        raise ConfigError(f"format must be json, table or csv, got {cfg.format!r}")
    if not cfg.seeds:
        raise ConfigError("seeds must not be empty")
    if cfg.units not in ("raw", "normalized"):
        raise ConfigError("units must be raw or normalized")
    if cfg.per_class and len(cfg.per_class) not in (1, 2):
        raise ConfigError("per_class takes one count (both classes) or two")
    if command == "generate":
        _require_file(cfg.input, "input")
    elif command == "privacy":
        _require_file(cfg.real, "real")
        if not cfg.synthetic:
            raise ConfigError("at least one synthetic file is required")
        for _, p in cfg.synthetic:
            _require_file(p, "synthetic")
        if cfg.auc_report:
            _require_file(cfg.auc_report, "AUC report")
    elif command == "experiment":
        if cfg.which not in (1, 2, 3):
            raise ConfigError("experiment must be 1, 2 or 3")
        if (cfg.input is None) != (cfg.external is None):
            raise ConfigError("give both --input and --external, or neither to use simulated cohorts")
        if cfg.input is not None:
            _require_file(cfg.input, "input")
            _require_file(cfg.external, "external")
