"""Application configuration with flags > env > config file > defaults."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import ContractError
from .retrieval import RetrievalConfig

ENV_PREFIX = "HYPERHOP_"

# name -> (config file / env suffix, type)
_SETTING_TYPES: dict[str, type] = {
    "corpus": str,
    "index_dir": str,
    "cache_dir": str,
    "offline": bool,
    "api_base": str,
    "api_key": str,
    "embed_model": str,
    "embed_dim": int,
    "chat_model": str,
    "batch_size": int,
    "max_workers": int,
    "offline_dim": int,
    "extraction_prompt": str,
    "answer_prompt": str,
    "eta": float,
    "beta": float,
    "steps": int,
    "k1": int,
    "k2": int,
    "use_weight_matrix": bool,
    "use_semantic_enhancement": bool,
    "use_structural_enhancement": bool,
}


@dataclass
class AppConfig:
    corpus: str | None = None
    index_dir: str | None = None
    cache_dir: str | None = None
    offline: bool = False
    api_base: str | None = None
    api_key: str = ""
    embed_model: str | None = None
    embed_dim: int = 256
    chat_model: str | None = None
    batch_size: int = 64
    max_workers: int = 1
    offline_dim: int = 256
    extraction_prompt: str | None = None
    answer_prompt: str | None = None
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)

    def require(self, name: str) -> str:
        value = getattr(self, name)
        if not value:
            raise ContractError(f"missing required setting: {name}")
        return value


def _coerce(name: str, value: Any) -> Any:
    kind = _SETTING_TYPES[name]
    if kind is bool and isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ContractError(f"cannot parse boolean setting {name}={value!r}")
    return kind(value)


def _from_file(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ContractError(f"config file not found: {path}")
    data = json.loads(path.read_text(encoding="utf-8"))
    unknown = set(data) - set(_SETTING_TYPES)
    if unknown:
        raise ContractError(f"unknown config keys: {sorted(unknown)}")
    return {name: _coerce(name, value) for name, value in data.items()}


def _from_env(env: Mapping[str, str]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for name in _SETTING_TYPES:
        key = ENV_PREFIX + name.upper()
        if key in env:
            out[name] = _coerce(name, env[key])
    return out


def load_app_config(
    flag_values: Mapping[str, Any] | None = None,
    config_file: str | Path | None = None,
    env: Mapping[str, str] | None = None,
) -> AppConfig:
    """Merge settings by precedence: flags, then env, then file, defaults last."""
    merged: dict[str, Any] = {}
    if config_file:
        merged.update(_from_file(config_file))
    merged.update(_from_env(os.environ if env is None else env))
    if flag_values:
        merged.update({k: v for k, v in flag_values.items() if v is not None})

    retrieval_kwargs = {
        key: merged.pop(key)
        for key in (
            "eta",
            "beta",
            "steps",
            "k1",
            "k2",
            "use_weight_matrix",
            "use_semantic_enhancement",
            "use_structural_enhancement",
        )
        if key in merged
    }
    config = AppConfig(**merged)
    config.retrieval = RetrievalConfig(**retrieval_kwargs)
    return config
