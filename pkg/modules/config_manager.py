"""
Configuration Management Module

Loads, saves and validates experiment configuration. Files are either flat
``key=value`` text (dotted keys, ``#`` comments) or JSON; both resolve to the
same nested settings, layered over built-in defaults.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from modules.errors import ConfigError, ParameterError
from modules.graphs import GraphKernelSpec
from modules.kernels import KernelSpec

METHODS = ("pca", "dual_pca", "gpca", "kpca", "gkpca", "gmkpca", "multimodal", "semisup", "lle", "lne", "lneg")
GRAPH_SOURCES = ("none", "file", "knn", "dense", "constraints")
GRAPH_METHODS = ("gpca", "gkpca", "gmkpca", "multimodal")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def parse_value(text: str) -> Any:
    """Interpret a config string as bool, int, float, comma list or plain string"""
    text = text.strip()
    lowered = text.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    if lowered in ("none", "null"):
        return None
    if "," in text:
        return [parse_value(part) for part in text.split(",") if part.strip()]
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def flatten_config(config: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    """Nested dict -> {dotted.key: value}"""
    flat = {}
    for key, value in config.items():
        dotted = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(value, dict):
            flat.update(flatten_config(value, dotted))
        else:
            flat[dotted] = value
    return flat


def _deep_merge(base: Dict[str, Any], updates: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in updates.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


class ConfigManager:
    """Manages configuration files and settings"""

    def __init__(self, config_file: Optional[str] = None, create_missing: bool = False):
        self.config_file = config_file
        self.create_missing = create_missing
        self.logger = logging.getLogger(__name__)
        self.config = self._create_default_config()
        if config_file:
            self.load_config()

    def load_config(self) -> Dict[str, Any]:
        """
        Load the configuration file over the defaults

        Raises:
            ConfigError: missing file (unless create_missing) or malformed content
        """
        path = Path(self.config_file)
        if not path.exists():
            if not self.create_missing:
                raise ConfigError(f"Configuration file not found: {path}")
            self.logger.info("Configuration file not found, creating default configuration")
            self.config = self._create_default_config()
            self.save_config(self.config)
            return self.config

        text = path.read_text()
        if path.suffix.lower() == ".json":
            try:
                loaded = json.loads(text) if text.strip() else {}
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}: invalid JSON ({e})")
            if not isinstance(loaded, dict):
                raise ConfigError(f"{path}: top level must be an object")
        else:
            loaded = {}
            for key, value in self._parse_key_values(text, path):
                self._assign(loaded, key, value)
        self.config = _deep_merge(self._create_default_config(), loaded)
        self.logger.info(f"Configuration loaded from {path}")
        return self.config

    @staticmethod
    def _parse_key_values(text: str, path: Path) -> List[Tuple[str, Any]]:
        pairs = []
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected 'key=value', got {raw.strip()!r}")
            key, value = line.split("=", 1)
            key = key.strip()
            if not key:
                raise ConfigError(f"{path}:{line_no}: empty key")
            pairs.append((key, parse_value(value)))
        return pairs

    @staticmethod
    def _assign(config: Dict[str, Any], key: str, value: Any):
        keys = key.split(".")
        for k in keys[:-1]:
            if not isinstance(config.get(k), dict):
                config[k] = {}
            config = config[k]
        config[keys[-1]] = value

    def save_config(self, config: Dict[str, Any] = None, path: Optional[str] = None) -> bool:
        """Save configuration to file (JSON or key=value by suffix), by default the loaded one"""
        target = str(path or self.config_file)
        try:
            if config is None:
                config = self.config

            # Create backup of existing config
            if os.path.exists(target):
                backup_file = f"{target}.backup"
                with open(target, 'r') as src, open(backup_file, 'w') as dst:
                    dst.write(src.read())

            with open(target, 'w') as f:
                if target.lower().endswith(".json"):
                    json.dump(config, f, indent=2, sort_keys=True, default=str)
                else:
                    for key, value in sorted(flatten_config(config).items()):
                        f.write(f"{key}={self._format_value(value)}\n")

            self.config = config
            self.logger.info(f"Configuration saved to {target}")
            return True

        except OSError as e:
            self.logger.error(f"Error saving configuration: {e}")
            return False

    @staticmethod
    def _format_value(value: Any) -> str:
        if isinstance(value, (list, tuple)):
            return ",".join(str(v) for v in value)
        if isinstance(value, bool):
            return "true" if value else "false"
        if value is None:
            return "none"
        return str(value)

    def get(self, key: str, default: Any = None) -> Any:
        """Get a configuration value by dotted key"""
        value = self.config
        for k in key.split('.'):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    def set(self, key: str, value: Any) -> bool:
        """Set a configuration value by dotted key"""
        self._assign(self.config, key, value)
        self.logger.debug(f"Configuration value set: {key} = {value}")
        return True

    def update(self, updates: Dict[str, Any]) -> bool:
        """Apply dotted-key overrides; None values are skipped"""
        applied = 0
        for key, value in updates.items():
            if value is None:
                continue
            self.set(key, value)
            applied += 1
        self.logger.debug(f"Updated {applied} configuration values")
        return True

    def flat(self) -> Dict[str, Any]:
        return flatten_config(self.config)

    def experiment(self) -> "ExperimentConfig":
        return ExperimentConfig.from_mapping(self.flat())

    def validate_config(self) -> Dict[str, Any]:
        """Validate configuration and return validation results"""
        validation_results = {
            'valid': True,
            'errors': [],
            'warnings': []
        }

        known = set(flatten_config(self._create_default_config()))
        for key in sorted(set(self.flat()) - known):
            validation_results['warnings'].append(f"Unknown configuration key: {key}")

        log_level = str(self.get('logging.level', 'INFO')).upper()
        if log_level not in LOG_LEVELS:
            validation_results['errors'].append(f"Invalid logging level: {log_level}")

        try:
            self.experiment()
        except ConfigError as e:
            validation_results['errors'].extend(str(e).split("; "))

        validation_results['valid'] = len(validation_results['errors']) == 0
        return validation_results

    @staticmethod
    def _create_default_config() -> Dict[str, Any]:
        """Create default configuration"""
        return {
            "logging": {
                "level": "INFO",
                "file": "",
            },
            "experiment": {
                "method": "kpca",
                "d": 2,
                "seed": 0,
                "trials": 1,
                "workers": 0,
            },
            "kernel": {
                "kind": "gaussian",
                "sigma2": 1.0,
                "degree": 2,
                "offset": 0.0,
                "center": False,
                "dictionary": [],
            },
            "graph": {
                "source": "none",
                "file": [],
                "k": 10,
                "label_fraction": 0.2,
            },
            "graph_kernel": {
                "kind": ["identity"],
                "sigma2": 1.0,
                "a": 2.0,
                "p": 1,
                "beta": 1.0,
                "B": 1,
            },
            "regularization": {
                "gamma": 0.0,
                "gamma1": 0.5,
                "gamma2": 0.5,
                "mode": "reward",
            },
            "lneg": {
                "k": 10,
                "P": 2,
                "l1_weight": 0.01,
                "collapse": "sum",
                "max_iter": 1000,
                "tol": 1e-8,
            },
            "gmkpca": {
                "max_iter": 100,
                "tol": 1e-8,
                "learn_beta": True,
            },
        }


def _as_list(value: Any) -> list:
    if value is None or value == "":
        return []
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


@dataclass
class ExperimentConfig:
    """Resolved, validated parameters of one embedding run"""
    method: str = "kpca"
    d: int = 2
    kernel: KernelSpec = field(default_factory=KernelSpec)
    center_kernel: bool = False
    dictionary: List[float] = field(default_factory=list)
    graph_source: str = "none"
    graph_files: List[str] = field(default_factory=list)
    graph_k: Optional[int] = 10
    label_fraction: float = 0.2
    graph_kernels: List[GraphKernelSpec] = field(default_factory=lambda: [GraphKernelSpec()])
    gamma: float = 0.0
    gamma1: float = 0.5
    gamma2: float = 0.5
    mode: str = "reward"
    k: int = 10
    P: int = 2
    l1_weight: float = 0.01
    collapse: str = "sum"
    ista_max_iter: int = 1000
    ista_tol: float = 1e-8
    max_iter: int = 100
    tol: float = 1e-8
    learn_beta: bool = True
    seed: int = 0
    trials: int = 1
    workers: int = 0

    @classmethod
    def from_mapping(cls, flat: Dict[str, Any]) -> "ExperimentConfig":
        """
        Build from dotted keys (``kernel.kind``, ``lneg.P``, ...)

        Raises:
            ConfigError: every problem found, joined with '; '
        """
        defaults = flatten_config(ConfigManager._create_default_config())
        values = dict(defaults)
        values.update({k: v for k, v in flat.items() if v is not None})
        errors = []

        def number(key: str, cast=float, low=None, low_open=False):
            raw = values.get(key)
            try:
                result = cast(raw)
            except (TypeError, ValueError):
                errors.append(f"{key} must be a number, got {raw!r}")
                return cast(defaults[key])
            if low is not None and (result <= low if low_open else result < low):
                errors.append(f"{key}={result} must be {'>' if low_open else '>='} {low}")
            return result

        method = str(values["experiment.method"]).lower()
        if method not in METHODS:
            errors.append(f"experiment.method '{method}' is not one of {METHODS}")
        graph_source = str(values["graph.source"]).lower()
        if graph_source not in GRAPH_SOURCES:
            errors.append(f"graph.source '{graph_source}' is not one of {GRAPH_SOURCES}")

        kernel = KernelSpec()
        try:
            kernel = KernelSpec(kind=str(values["kernel.kind"]), sigma2=number("kernel.sigma2"),
                                degree=number("kernel.degree", int), offset=number("kernel.offset"))
        except ParameterError as e:
            errors.append(str(e))

        graph_kernels = []
        for kind in _as_list(values["graph_kernel.kind"]) or ["identity"]:
            try:
                graph_kernels.append(GraphKernelSpec(
                    kind=str(kind), sigma2=number("graph_kernel.sigma2"), a=number("graph_kernel.a"),
                    p=number("graph_kernel.p", int), beta=number("graph_kernel.beta"),
                    B=number("graph_kernel.B", int)))
            except ParameterError as e:
                errors.append(str(e))

        graph_k = values["graph.k"]
        if graph_k is not None:
            graph_k = number("graph.k", int, low=1)

        config = cls(
            method=method,
            d=number("experiment.d", int, low=1),
            kernel=kernel,
            center_kernel=bool(values["kernel.center"]),
            dictionary=[float(s) for s in _as_list(values["kernel.dictionary"])],
            graph_source=graph_source,
            graph_files=[str(f) for f in _as_list(values["graph.file"])],
            graph_k=graph_k,
            label_fraction=number("graph.label_fraction", low=0.0, low_open=True),
            graph_kernels=graph_kernels,
            gamma=number("regularization.gamma", low=0.0),
            gamma1=number("regularization.gamma1", low=0.0),
            gamma2=number("regularization.gamma2", low=0.0),
            mode=str(values["regularization.mode"]).lower(),
            k=number("lneg.k", int, low=1),
            P=number("lneg.P", int, low=1),
            l1_weight=number("lneg.l1_weight", low=0.0),
            collapse=str(values["lneg.collapse"]).lower(),
            ista_max_iter=number("lneg.max_iter", int, low=1),
            ista_tol=number("lneg.tol", low=0.0, low_open=True),
            max_iter=number("gmkpca.max_iter", int, low=1),
            tol=number("gmkpca.tol", low=0.0, low_open=True),
            learn_beta=bool(values["gmkpca.learn_beta"]),
            seed=number("experiment.seed", int),
            trials=number("experiment.trials", int, low=1),
            workers=number("experiment.workers", int, low=0),
        )

        if config.label_fraction > 1:
            errors.append(f"graph.label_fraction={config.label_fraction} must be <= 1")
        if config.mode not in ("reward", "penalty"):
            errors.append(f"regularization.mode '{config.mode}' must be 'reward' or 'penalty'")
        if config.collapse not in ("sum", "l2"):
            errors.append(f"lneg.collapse '{config.collapse}' must be 'sum' or 'l2'")
        if any(s <= 0 for s in config.dictionary):
            errors.append("kernel.dictionary bandwidths must be positive")
        if method in GRAPH_METHODS and graph_source in ("none", "constraints"):
            errors.append(f"method '{method}' needs graph.source of file, knn or dense")
        if method == "lneg" and graph_source == "constraints":
            errors.append("method 'lneg' takes a single graph; use graph.source none, file, knn or dense")
        if method == "semisup" and graph_source != "constraints":
            errors.append("method 'semisup' needs graph.source=constraints")
        if graph_source == "file" and not config.graph_files:
            errors.append("graph.source=file needs graph.file")
        if method == "gkpca" and config.mode == "penalty" and any(
                g.kind != "identity" for g in config.graph_kernels):
            errors.append("penalty mode requires graph_kernel.kind=identity")

        if errors:
            raise ConfigError("; ".join(errors))
        return config

    def to_dict(self) -> Dict[str, Any]:
        """Resolved parameters for metadata output"""
        data = asdict(self)
        data["kernel"] = self.kernel.describe()
        data["graph_kernels"] = [g.describe() for g in self.graph_kernels]
        return data
