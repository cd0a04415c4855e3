"""Training loop: two forward passes per step (original and transformed view),
partial supervision plus consistency and feature-guided objectives."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch
from torch.optim import SGD

from ..data.core import DatasetManifest, load_manifest, load_sample
from ..data.transforms import hflip_pair, resize_pair
from ..losses.composite import total_loss
from ..net.model import build_crnet
from ..views import apply_to_image, apply_to_map, sample_view
from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig, config_hash, dump_config, validate_train_config
from .schedule import triangle_lr
from .seeding import seed_everything, stream_rng


class TrainingDiverged(RuntimeError):
    """Raised when the loss turns non-finite; carries the offending batch."""

    def __init__(self, step: int, batch_ids: list[str], report: dict[str, float]):
        self.step = step
        self.batch_ids = batch_ids
        self.report = report
        super().__init__(
            f"non-finite loss at step {step} on batch {batch_ids}: {report}"
        )


class _SampleSource:
    """Loads samples resized to the training resolution, caching small sets."""

    def __init__(self, manifest: DatasetManifest, size: int, cache_limit: int):
        self.manifest = manifest
        self.size = size
        self.cache: dict[str, tuple[np.ndarray, np.ndarray]] | None = (
            {} if len(manifest.ids) <= cache_limit else None
        )

    def get(self, sample_id: str) -> tuple[np.ndarray, np.ndarray]:
        if self.cache is not None and sample_id in self.cache:
            return self.cache[sample_id]
        sample = load_sample(self.manifest, sample_id)
        if sample.scribble is None:
            raise ValueError(f"sample '{sample_id}' has no scribble")
        pair = resize_pair(sample.image, sample.scribble, (self.size, self.size))
        if self.cache is not None:
            self.cache[sample_id] = pair
        return pair


def _build_batch(
    source: _SampleSource,
    ids: list[str],
    hflip: bool,
    rng: np.random.Generator,
) -> tuple[torch.Tensor, torch.Tensor]:
    images, scribbles = [], []
    for sample_id in ids:
        image, scribble = source.get(sample_id)
        if hflip and rng.random() < 0.5:
            image, scribble = hflip_pair(image, scribble)
        images.append(torch.from_numpy(image).permute(2, 0, 1))
        scribbles.append(torch.from_numpy(scribble.astype(np.int64)))
    return torch.stack(images), torch.stack(scribbles)


def train(cfg: TrainConfig, log_fn=None) -> dict:
    """Run the configured training; returns a summary dict.

    Writes train_log.jsonl (one record per step) and checkpoints under
    cfg.out_dir. Resuming from an epoch checkpoint replays the remaining
    epochs exactly as an uninterrupted run would.
    """
    validate_train_config(cfg)
    device = torch.device(cfg.device)
    seed_everything(cfg.seed)
    manifest = load_manifest(cfg.dataset_root, cfg.train_split)
    source = _SampleSource(manifest, cfg.input_size, cfg.cache_limit)
    n = len(manifest.ids)
    steps_per_epoch = max(1, n // cfg.batch_size)
    total_steps = cfg.max_steps if cfg.max_steps > 0 else cfg.epochs * steps_per_epoch

    model = build_crnet(cfg.net, cfg.seed).to(device)
    model.train()
    optimizer = SGD(
        model.parameters(),
        lr=cfg.max_lr,
        momentum=cfg.momentum,
        weight_decay=cfg.weight_decay,
    )

    config_text = dump_config(cfg)
    cfg_hash = config_hash(cfg)
    start_epoch = 0
    global_step = 0
    if cfg.resume_from:
        payload = load_checkpoint(cfg.resume_from)
        if payload["config_hash"] != cfg_hash:
            raise ValueError(
                f"checkpoint {cfg.resume_from} was written with a different config; "
                "resume requires an identical one"
            )
        model.load_state_dict(payload["model"])
        if payload["optimizer"] is not None:
            optimizer.load_state_dict(payload["optimizer"])
        torch.set_rng_state(payload["torch_rng"])
        start_epoch = payload["epoch"] + 1
        global_step = payload["global_step"]

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "train_log.jsonl"
    last_report: dict[str, float] = {}
    current_epoch = start_epoch - 1
    with open(log_path, "a" if cfg.resume_from else "w") as log_file:
        for epoch in range(start_epoch, cfg.epochs):
            if global_step >= total_steps:
                break
            current_epoch = epoch
            order = stream_rng(cfg.seed, epoch, "order").permutation(n)
            rng_aug = stream_rng(cfg.seed, epoch, "augment")
            rng_view = stream_rng(cfg.seed, epoch, "views")
            # Batch norm needs more than one sample per step, so a trailing
            # partial batch is dropped whenever a full batch exists.
            epoch_len = n - n % cfg.batch_size if n >= cfg.batch_size else n
            if epoch_len == 1:
                raise ValueError(
                    "training needs at least 2 samples per step for batch"
                    f" statistics; got a batch of 1 (dataset size {n},"
                    f" batch size {cfg.batch_size})"
                )
            for lo in range(0, epoch_len, cfg.batch_size):
                if global_step >= total_steps:
                    break
                batch_ids = [manifest.ids[i] for i in order[lo : lo + cfg.batch_size]]
                images, scribbles = _build_batch(source, batch_ids, cfg.hflip, rng_aug)
                images = images.to(device)
                scribbles = scribbles.to(device)
                view = sample_view(cfg.view, rng_view)
                transformed = apply_to_image(view, images)

                lr = triangle_lr(global_step, total_steps, cfg.max_lr)
                for group in optimizer.param_groups:
                    group["lr"] = lr

                outputs = model(images)
                outputs_t = model(transformed)
                aligned, valid = apply_to_map(view, outputs.out0)
                breakdown = total_loss(
                    outputs.maps(),
                    outputs.feature,
                    scribbles,
                    images,
                    (aligned, outputs_t.out0, valid),
                    cfg.loss,
                    epoch,
                )
                if not torch.isfinite(breakdown.total):
                    raise TrainingDiverged(global_step, batch_ids, breakdown.as_dict())
                optimizer.zero_grad()
                breakdown.total.backward()
                optimizer.step()

                last_report = breakdown.as_dict()
                record = {"step": global_step, "epoch": epoch, "lr": lr, **last_report}
                log_file.write(json.dumps(record) + "\n")
                log_file.flush()
                if log_fn is not None:
                    log_fn(record)
                global_step += 1
            if (epoch + 1) % cfg.checkpoint_every == 0:
                save_checkpoint(
                    out_dir / f"epoch_{epoch:04d}.pt",
                    model=model,
                    optimizer=optimizer,
                    epoch=epoch,
                    global_step=global_step,
                    config_text=config_text,
                    config_hash=cfg_hash,
                    metrics=last_report,
                )
            if global_step >= total_steps:
                break

    final_path = save_checkpoint(
        out_dir / "last.pt",
        model=model,
        optimizer=optimizer,
        epoch=current_epoch,
        global_step=global_step,
        config_text=config_text,
        config_hash=cfg_hash,
        metrics=last_report,
    )
    return {
        "steps": global_step,
        "checkpoint": str(final_path),
        "log": str(log_path),
        "final": last_report,
    }
