"""Flat key-value run configuration.

A config file holds one `key = value` pair per line; `#` starts a comment.
Dotted prefixes route into subsections: `loss.gamma = 0.3`, `view.enable_flip
= true`, `net.use_age = false`. Tuples are comma-separated. The canonical
dump (every key in declaration order) is what gets hashed into checkpoints.
"""

from __future__ import annotations

import dataclasses
import hashlib
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

from ..losses.config import LossConfig
from ..net.model import CRNetConfig
from ..views import ViewConfig

_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


@dataclass
class TrainConfig:
    dataset_root: str = ""
    train_split: str = "train"
    input_size: int = 320
    batch_size: int = 16
    epochs: int = 150
    max_steps: int = 0           # 0 runs every epoch; otherwise stop after this many steps
    momentum: float = 0.9
    weight_decay: float = 5e-4
    max_lr: float = 1e-3
    seed: int = 0
    hflip: bool = True
    device: str = "cpu"
    out_dir: str = "runs/default"
    checkpoint_every: int = 10   # epochs between checkpoints
    resume_from: str = ""
    cache_limit: int = 64        # preload datasets up to this many samples
    loss: LossConfig = field(default_factory=LossConfig)
    view: ViewConfig = field(default_factory=ViewConfig)
    net: CRNetConfig = field(default_factory=CRNetConfig)


_SECTIONS = {"loss": LossConfig, "view": ViewConfig, "net": CRNetConfig}


def _coerce(raw: str, tp, key: str):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if len(args) == 1:
            return None if raw == "" else _coerce(raw, args[0], key)
        raise ValueError(f"unsupported union type for '{key}'")
    if tp is bool:
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"'{key}' expects a boolean, got '{raw}'")
    if tp is int:
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"'{key}' expects an integer, got '{raw}'") from None
    if tp is float:
        try:
            return float(raw)
        except ValueError:
            raise ValueError(f"'{key}' expects a number, got '{raw}'") from None
    if tp is str:
        return raw
    if origin is tuple:
        args = typing.get_args(tp)
        items = [s.strip() for s in raw.split(",") if s.strip() != ""]
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(s, args[0], key) for s in items)
        if len(items) != len(args):
            raise ValueError(f"'{key}' expects {len(args)} values, got {len(items)}")
        return tuple(_coerce(s, a, key) for s, a in zip(items, args))
    raise ValueError(f"unsupported config type for '{key}'")


def _field_types(cls) -> dict[str, object]:
    hints = typing.get_type_hints(cls)
    return {f.name: hints[f.name] for f in dataclasses.fields(cls)}


def parse_config(text: str, overrides: dict[str, str] | None = None) -> TrainConfig:
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value', got '{line.strip()}'")
        key, value = stripped.split("=", 1)
        key, value = key.strip(), value.strip()
        if key in pairs:
            raise ValueError(f"line {lineno}: duplicate key '{key}'")
        pairs[key] = value
    if overrides:
        pairs.update(overrides)

    top_types = _field_types(TrainConfig)
    section_types = {name: _field_types(cls) for name, cls in _SECTIONS.items()}
    top: dict[str, object] = {}
    sections: dict[str, dict[str, object]] = {name: {} for name in _SECTIONS}
    explicit_base_size = False
    for key, value in pairs.items():
        if "." in key:
            section, sub = key.split(".", 1)
            if section not in _SECTIONS or sub not in section_types[section]:
                raise ValueError(f"unknown config key '{key}'")
            sections[section][sub] = _coerce(value, section_types[section][sub], key)
            if key == "view.base_size":
                explicit_base_size = True
        else:
            if key not in top_types or key in _SECTIONS:
                raise ValueError(f"unknown config key '{key}'")
            top[key] = _coerce(value, top_types[key], key)

    cfg = TrainConfig(
        **top,
        loss=LossConfig(**sections["loss"]),
        view=ViewConfig(**sections["view"]),
        net=CRNetConfig(**sections["net"]),
    )
    if not explicit_base_size:
        cfg.view = dataclasses.replace(cfg.view, base_size=cfg.input_size)
    return cfg


def load_config(path: str | Path, overrides: dict[str, str] | None = None) -> TrainConfig:
    return parse_config(Path(path).read_text(), overrides)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format_value(v) for v in value)
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def dump_config(cfg: TrainConfig) -> str:
    lines = []
    for f in dataclasses.fields(TrainConfig):
        value = getattr(cfg, f.name)
        if f.name in _SECTIONS:
            for sub in dataclasses.fields(type(value)):
                lines.append(f"{f.name}.{sub.name} = {_format_value(getattr(value, sub.name))}")
        else:
            lines.append(f"{f.name} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


# Keys that say where a run reads and writes, not what it computes.  Two
# configs differing only here produce identical numbers, so these are left
# out of the hash and a checkpoint from one can seed a run with the other.
_RUN_ONLY_KEYS = frozenset({"out_dir", "resume_from", "checkpoint_every", "cache_limit"})


def config_hash(cfg: TrainConfig) -> str:
    lines = [
        line
        for line in dump_config(cfg).splitlines()
        if line.split(" = ")[0] not in _RUN_ONLY_KEYS
    ]
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


def validate_train_config(cfg: TrainConfig) -> None:
    """Checks that only matter when actually training."""
    if not cfg.dataset_root:
        raise ValueError("dataset_root is required for training")
    if cfg.input_size < 32:
        raise ValueError(f"input_size must be at least 32, got {cfg.input_size}")
    if cfg.batch_size < 1 or cfg.epochs < 1:
        raise ValueError("batch_size and epochs must be positive")
    if cfg.max_steps < 0:
        raise ValueError(f"max_steps must be >= 0, got {cfg.max_steps}")
    if cfg.max_lr <= 0:
        raise ValueError(f"max_lr must be positive, got {cfg.max_lr}")
    if not 0.0 <= cfg.momentum < 1.0:
        raise ValueError(f"momentum must lie in [0, 1), got {cfg.momentum}")
    if cfg.seed < 0:
        raise ValueError(f"seed must be non-negative, got {cfg.seed}")
    if cfg.checkpoint_every < 1:
        raise ValueError(f"checkpoint_every must be positive, got {cfg.checkpoint_every}")
    if cfg.view.base_size != cfg.input_size:
        raise ValueError(
            f"view.base_size {cfg.view.base_size} must match input_size {cfg.input_size}"
        )
    if cfg.loss.use_cv and not cfg.view.enable_resize:
        raise ValueError("the cross-view term requires view.enable_resize")
