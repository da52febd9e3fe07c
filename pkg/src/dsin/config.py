"""Flat run configuration with documented defaults and strict key checking."""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .sessionizer import SynthConfig

MODEL_TAGS = ("dsin-be", "dsin-pe", "dsin-be-no-siil", "youtube", "youtube-no-ub", "din")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # model
    model: str = "dsin-be"
    K: int = 8                      # sessions kept per user
    T: int = 10                     # behaviors kept per session
    d_model: int = 32
    heads: int = 2
    gap_seconds: int = 1800
    merge: str = "sum"              # Bi-LSTM direction merge: sum | concat
    scale: str = "model"            # attention denominator: sqrt(d_model) | sqrt(d_h) via "dh"
    mlp_hidden: list = field(default_factory=lambda: [200, 80])
    din_hidden: int = 36
    ln_eps: float = 1e-6
    forget_bias: float = 1.0
    # optimization
    epochs: int = 10
    batch_size: int = 256
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    # io
    train: str = ""
    test: str = ""
    out_dir: str = "run"
    # synthetic data
    n_users: int = 5000
    n_items: int = 200
    n_categories: int = 10
    sessions_per_user: int = 4
    behaviors_per_session: int = 5
    interest_shift_prob: float = 0.8
    focus_prob: float = 0.9
    records_per_user: int = 4
    n_days: int = 8
    recency_decay: float = 0.3
    history_target_prob: float = 0.5

    def validate(self) -> "RunConfig":
        if self.model not in MODEL_TAGS:
            raise ConfigError(f"unknown model {self.model!r}; valid: {', '.join(MODEL_TAGS)}")
        if self.d_model % 2 or self.d_model % self.heads:
            raise ConfigError("d_model must be divisible by 2 and by heads")
        if self.merge not in ("sum", "concat"):
            raise ConfigError("merge must be 'sum' or 'concat'")
        if self.scale not in ("model", "dh"):
            raise ConfigError("scale must be 'model' or 'dh'")
        if min(self.K, self.T, self.batch_size) < 1 or self.epochs < 0:
            raise ConfigError("K, T, batch_size must be >= 1 and epochs >= 0")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def model_dict(self) -> dict:
        """Keys that shape the model and its training (no paths)."""
        skip = {"train", "test", "out_dir"}
        return {k: v for k, v in self.to_dict().items() if k not in skip}

    def hash(self) -> str:
        blob = json.dumps(self.model_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def synth(self) -> SynthConfig:
        names = {f.name for f in dataclasses.fields(SynthConfig)}
        cfg = SynthConfig(**{k: v for k, v in self.to_dict().items() if k in names})
        try:
            cfg.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg

    def replace(self, **changes) -> "RunConfig":
        return from_mapping({**self.to_dict(), **changes})


def _coerce(name: str, value, default):
    if isinstance(default, bool):
        if isinstance(value, str):
            return value.lower() in ("1", "true", "yes")
        return bool(value)
    if isinstance(default, int):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            value = int(str(value))
        return value
    if isinstance(default, float):
        return float(value)
    if isinstance(default, list):
        if isinstance(value, str):
            value = json.loads(value)
        return [int(v) for v in value]
    return str(value)


def from_mapping(values: dict) -> RunConfig:
    known = {f.name: f for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    base = RunConfig()
    kwargs = {}
    for k, v in values.items():
        try:
            kwargs[k] = _coerce(k, v, getattr(base, k))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {k!r}: {v!r}") from exc
    return RunConfig(**kwargs).validate()


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def read_config_file(path) -> dict:
    """Read a flat config: a JSON object, or ``key = value`` lines (``#`` comments)."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        obj = json.loads(text)
        if not isinstance(obj, dict):
            raise ConfigError(f"{path}: expected a flat JSON object")
        return obj
    parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"),
                                       interpolation=None)
    parser.optionxform = str
    parser.read_string("[run]\n" + text, source=str(path))
    return {k: _parse_value(v) for k, v in parser["run"].items()}


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    values = read_config_file(path) if path else {}
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return from_mapping(values)
