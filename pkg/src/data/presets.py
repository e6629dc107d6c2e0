"""
Named parameter presets and JSON config files.

Presets live in config/presets.json; built-in defaults are used when the
file is missing. A config file has the same shape as one preset: an object
with one section per subcommand family.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

from ..errors import ConfigError
from .models import McConfig

logger = logging.getLogger(__name__)

DEFAULT_PRESETS_PATH = "config/presets.json"
WORKERS_ENV_VAR = "PRIOR_CONFLICT_WORKERS"
SECTIONS = ("mc", "check_normal", "check_binomial", "check_nig", "lasso", "quantum")

BUILTIN_PRESETS: Dict[str, Dict[str, Any]] = {
    "desk": {
        "description": "Desk-scale defaults",
        "mc": {"n_draws": 10000, "chunk_size": 1000},
        "lasso": {"n_reps": 500},
        "quantum": {"n_reps": 200, "n_trials": 50}
    },
    "full": {
        "description": "Full-scale draw and replicate counts",
        "mc": {"n_draws": 100000, "chunk_size": 2000},
        "lasso": {"n_reps": 1000},
        "quantum": {"n_reps": 500, "n_trials": 50}
    },
    "quick": {
        "description": "Smoke-test sizes",
        "mc": {"n_draws": 1000, "chunk_size": 250},
        "lasso": {"n_reps": 100},
        "quantum": {"n_reps": 50, "n_trials": 50}
    }
}


def _resolve(path: str) -> Path:
    resolved = Path(path)
    if not resolved.is_absolute() and not resolved.exists():
        # Try relative to the project root
        resolved = Path(__file__).parent.parent.parent / path
    return resolved


def load_presets(path: str = DEFAULT_PRESETS_PATH) -> Dict[str, Dict[str, Any]]:
    """Load presets from JSON, falling back to the built-in set."""
    try:
        preset_path = _resolve(path)
        if preset_path.exists():
            with open(preset_path) as f:
                data = json.load(f)
                return data.get('presets', {})
    except (OSError, ValueError) as e:
        logger.warning("Failed to load presets from %s: %s", path, e)

    return {name: dict(preset) for name, preset in BUILTIN_PRESETS.items()}


def get_preset(name: str, path: str = DEFAULT_PRESETS_PATH) -> Dict[str, Any]:
    presets = load_presets(path)
    if name not in presets:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(presets))}")
    return _validate_sections(presets[name], f"preset {name!r}")


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a JSON config file.

    Raises:
        ConfigError: file unreadable, not JSON, or with unknown sections
    """
    try:
        with open(_resolve(path)) as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    except ValueError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return _validate_sections(data, f"config file {path}")


def _validate_sections(data: Dict[str, Any], source: str) -> Dict[str, Any]:
    for key, value in data.items():
        if key == "description":
            continue
        if key not in SECTIONS:
            raise ConfigError(f"{source}: unknown section {key!r}; expected one of {', '.join(SECTIONS)}")
        if not isinstance(value, dict):
            raise ConfigError(f"{source}: section {key!r} must be an object")
    return data


def merge_layers(*layers: Optional[Dict[str, Any]]) -> Dict[str, Dict[str, Any]]:
    """Merge config layers section by section; later layers win."""
    merged: Dict[str, Dict[str, Any]] = {section: {} for section in SECTIONS}
    for layer in layers:
        if not layer:
            continue
        for section in SECTIONS:
            merged[section].update(layer.get(section, {}))
    return merged


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV_VAR)
    if value is None:
        return 1
    try:
        workers = int(value)
    except ValueError as e:
        raise ConfigError(f"{WORKERS_ENV_VAR} must be an integer, got {value!r}") from e
    if workers < 1:
        raise ConfigError(f"{WORKERS_ENV_VAR} must be >= 1, got {workers}")
    return workers


def mc_config_from(section: Dict[str, Any], **overrides) -> McConfig:
    """
    Build McConfig from an "mc" section plus non-None overrides.

    Raises:
        ConfigError: unknown keys
        DomainError: values outside their valid ranges
    """
    known = set(McConfig.__dataclass_fields__)
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown mc settings: {', '.join(sorted(unknown))}")
    values = {'n_workers': default_workers()}
    values.update(section)
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return McConfig.from_dict(values)
    except TypeError as e:
        raise ConfigError(f"invalid mc settings: {e}") from e
