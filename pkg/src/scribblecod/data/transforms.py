"""Deterministic raster transforms used by the data pipeline."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from .core import check_image, check_scribble


def _nearest_indices(dst: int, src: int) -> np.ndarray:
    # floor(i * src / dst), exact integer arithmetic
    idx = (np.arange(dst, dtype=np.int64) * src) // dst
    return np.minimum(idx, src - 1)


def resize_image(img: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Bilinear resize of a float RGB image to (H, W)."""
    check_image(img)
    h, w = size
    if h < 1 or w < 1:
        raise ValueError(f"target size must be positive, got {size}")
    t = torch.from_numpy(np.ascontiguousarray(img, dtype=np.float32)).permute(2, 0, 1)[None]
    out = F.interpolate(t, size=(h, w), mode="bilinear", align_corners=False)
    out = out.clamp_(0.0, 1.0)[0].permute(1, 2, 0).numpy()
    return np.ascontiguousarray(out)


def resize_scribble(scr: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbor resize of a ternary map; never invents labels."""
    check_scribble(scr)
    h, w = size
    if h < 1 or w < 1:
        raise ValueError(f"target size must be positive, got {size}")
    rows = _nearest_indices(h, scr.shape[0])
    cols = _nearest_indices(w, scr.shape[1])
    return np.ascontiguousarray(scr[rows[:, None], cols[None, :]])


def resize_pair(
    img: np.ndarray, scr: np.ndarray, size: tuple[int, int]
) -> tuple[np.ndarray, np.ndarray]:
    if img.shape[:2] != scr.shape:
        raise ValueError(f"image {img.shape[:2]} and scribble {scr.shape} sizes differ")
    return resize_image(img, size), resize_scribble(scr, size)


def hflip_pair(img: np.ndarray, scr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if img.shape[:2] != scr.shape:
        raise ValueError(f"image {img.shape[:2]} and scribble {scr.shape} sizes differ")
    return np.ascontiguousarray(img[:, ::-1, :]), np.ascontiguousarray(scr[:, ::-1])
