"""Versioned training checkpoints.

A checkpoint is a single torch file holding named tensors plus run metadata:
format tag, version, model and optimizer state, epoch/step counters, the
canonical config text and its hash, the torch RNG state, and a metric
snapshot. Loading anything without the tag fails fast.
"""

from __future__ import annotations

import os
from pathlib import Path

import torch

FORMAT_TAG = "scribblecod-checkpoint"
FORMAT_VERSION = 1


def save_checkpoint(
    path: str | Path,
    *,
    model: torch.nn.Module,
    optimizer: torch.optim.Optimizer | None,
    epoch: int,
    global_step: int,
    config_text: str,
    config_hash: str,
    metrics: dict | None = None,
) -> Path:
    path = Path(path)
    payload = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "model": model.state_dict(),
        "optimizer": optimizer.state_dict() if optimizer is not None else None,
        "epoch": epoch,
        "global_step": global_step,
        "config": config_text,
        "config_hash": config_hash,
        "torch_rng": torch.get_rng_state(),
        "metrics": dict(metrics or {}),
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    torch.save(payload, tmp)
    os.replace(tmp, path)
    return path


def load_checkpoint(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"missing checkpoint {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise ValueError(f"{path} is not a readable checkpoint: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != FORMAT_TAG:
        raise ValueError(f"{path} is not a {FORMAT_TAG} file")
    if payload.get("version") != FORMAT_VERSION:
        raise ValueError(
            f"{path} has unsupported version {payload.get('version')}, "
            f"expected {FORMAT_VERSION}"
        )
    return payload
