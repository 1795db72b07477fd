"""Centralized configuration management using Pydantic Settings.

Two layers live here:

* ``RuntimeSettings`` - process-level knobs read from ``LTR_*`` environment
  variables (output directory fallback, worker count, log level).
* ``parse_config`` - the declarative experiment file (JSON) plus dotted-key
  overrides, validated into an ``ExperimentConfig``.

Usage:
    from ltr.config import get_settings, parse_config
    settings = get_settings()
    config = parse_config("exp.json", ["optimizer.lr=0.01"])
"""

import copy
import hashlib
import json
import logging
from collections.abc import Mapping, Sequence
from functools import lru_cache
from pathlib import Path
from typing import Any

from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ltr.errors import ConfigError
from ltr.models.experiment import ExperimentConfig

logger = logging.getLogger(__name__)

RESOLVED_CONFIG_NAME = "resolved_config.json"


class RuntimeSettings(BaseSettings):
    """Process-level runtime configuration."""

    model_config = SettingsConfigDict(env_prefix="LTR_", extra="ignore")

    out_dir: str | None = Field(default=None, description="Output directory fallback")
    workers: int = Field(default=1, ge=1, description="Parallel training runs")
    log_level: str = Field(default="INFO", description="Root log level")

    @field_validator("log_level", mode="before")
    @classmethod
    def parse_level(cls, v: Any) -> str:
        level = str(v).upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level {v!r}")
        return level


@lru_cache
def get_settings() -> RuntimeSettings:
    """Get cached RuntimeSettings instance (singleton pattern)."""
    return RuntimeSettings()


def clear_settings_cache() -> None:
    """Clear cached settings (useful for testing)."""
    get_settings.cache_clear()


def _parse_override(raw: str) -> tuple[list[str], Any]:
    if "=" not in raw:
        raise ConfigError(detail="override must look like key=value", override=raw)
    key, _, text = raw.partition("=")
    key = key.strip()
    if not key:
        raise ConfigError(detail="override has an empty key", override=raw)
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    return key.split("."), value


def apply_overrides(raw: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict[str, Any]:
    """Set dotted keys in a copy of the raw config tree."""
    tree = copy.deepcopy(dict(raw))
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        node = tree
        for part in parts[:-1]:
            child = node.get(part)
            if child is None:
                child = {}
                node[part] = child
            elif not isinstance(child, dict):
                raise ConfigError(detail="override descends into a scalar", key=dotted)
            node = child
        node[parts[-1]] = value
    return tree


def _format_validation_error(exc: ValidationError) -> ConfigError:
    problems = []
    for err in exc.errors():
        key = ".".join(str(p) for p in err["loc"]) or "<root>"
        problems.append(f"{key}: {err['msg']}")
    first_key = ".".join(str(p) for p in exc.errors()[0]["loc"]) if exc.errors() else ""
    return ConfigError(detail="; ".join(problems), key=first_key)


def validate_config(raw: Mapping[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise _format_validation_error(exc) from exc


def load_raw_config(path: str | Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(detail="config file not readable", path=str(p)) from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            detail=f"config is not valid JSON: {exc.msg}", path=str(p), line=exc.lineno
        ) from exc
    if not isinstance(raw, dict):
        raise ConfigError(detail="config root must be a JSON object", path=str(p))
    return raw


def parse_config(
    path: str | Path | None,
    overrides: Sequence[str] = (),
    echo_dir: str | Path | None = None,
) -> ExperimentConfig:
    """Load, override and validate an experiment config; optionally echo it."""
    raw = load_raw_config(path)
    dotted = {".".join(parts): value for parts, value in map(_parse_override, overrides)}
    config = validate_config(apply_overrides(raw, dotted))
    if echo_dir is not None:
        write_resolved_config(config, Path(echo_dir))
    return config


def canonical_json(config: ExperimentConfig) -> str:
    return json.dumps(config.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def write_resolved_config(config: ExperimentConfig, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / RESOLVED_CONFIG_NAME
    path.write_text(canonical_json(config), encoding="utf-8")
    logger.info("Resolved config written to %s", path)
    return path


def config_hash(config: ExperimentConfig) -> str:
    """Identity of a run; the output directory is not part of it."""
    payload = json.dumps(config.model_dump(mode="json", exclude={"output_dir"}), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def with_overrides(config: ExperimentConfig, overrides: Mapping[str, Any]) -> ExperimentConfig:
    """Return a new config with dotted-key values applied (used by grids and sweeps)."""
    return validate_config(apply_overrides(config.model_dump(mode="json"), overrides))
