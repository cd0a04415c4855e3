"""Checkpoint-driven inference over a directory of images."""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from ..data.core import IMAGE_EXTS, load_image
from ..data.transforms import resize_image
from ..net.model import CRNet
from .checkpoint import load_checkpoint
from .config import parse_config


def run_inference(
    checkpoint_path: str | Path,
    images_dir: str | Path,
    out_dir: str | Path,
    input_size: int | None = None,
    device: str = "cpu",
) -> list[str]:
    """Predict a grayscale map per image, saved at the image's own resolution.

    Unreadable images are skipped with a warning. Returns the written ids.
    """
    images_dir = Path(images_dir)
    out_dir = Path(out_dir)
    if not images_dir.is_dir():
        raise FileNotFoundError(f"missing images directory {images_dir}")
    payload = load_checkpoint(checkpoint_path)
    cfg = parse_config(payload["config"])
    size = input_size if input_size is not None else cfg.input_size

    model = CRNet(cfg.net)
    model.load_state_dict(payload["model"])
    model.to(torch.device(device))
    model.eval()

    paths = sorted(
        p for p in images_dir.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_EXTS
    )
    if not paths:
        raise ValueError(f"no images under {images_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for path in paths:
        try:
            image = load_image(path)
        except OSError as exc:
            warnings.warn(f"skipping unreadable image {path.name}: {exc}", stacklevel=2)
            continue
        original = image.shape[:2]
        resized = resize_image(image, (size, size))
        x = torch.from_numpy(resized).permute(2, 0, 1)[None].to(device)
        with torch.no_grad():
            pred = model(x).out0
            pred = F.interpolate(pred, size=original, mode="bilinear", align_corners=False)
        arr = np.rint(pred[0, 0].clamp(0, 1).cpu().numpy() * 255.0).astype(np.uint8)
        Image.fromarray(arr, "L").save(out_dir / f"{path.stem}.png")
        written.append(path.stem)
    return written
