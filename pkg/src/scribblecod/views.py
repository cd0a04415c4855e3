"""Invertible view transforms for cross-view consistency training.

A sampled transform applies, in this fixed order: crop, integer translate,
bilinear resize, horizontal flip. The whole chain is affine per axis, so a
prediction made on the transformed view can be aligned back against the
transformed prediction of the original view with a single resampling pass
plus a validity mask marking pixels whose source location exists.

Coordinate convention: pixel centers at integer coordinates, an axis of
length n spans [-0.5, n - 0.5]. Sampling is edge-clamped bilinear and stays
differentiable with respect to the input map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch


@dataclass(frozen=True)
class ViewConfig:
    """Which ops may be sampled and their ranges.

    base_size is the (square) input resolution transforms are sampled for.
    Resize is the default op; consistency training requires at least one
    resolution-changing op to be active.
    """

    base_size: int = 320
    enable_resize: bool = True
    enable_flip: bool = False
    enable_translate: bool = False
    enable_crop: bool = False
    resize_scales: tuple[float, ...] = (0.75, 1.0, 1.25)
    max_translate: float = 0.10
    crop_area: tuple[float, float] = (0.75, 0.95)

    def __post_init__(self) -> None:
        if self.base_size < 1:
            raise ValueError(f"base_size must be positive, got {self.base_size}")
        if not self.resize_scales or any(s <= 0 for s in self.resize_scales):
            raise ValueError(f"resize_scales must be positive, got {self.resize_scales}")
        if not 0.0 <= self.max_translate < 1.0:
            raise ValueError(f"max_translate must lie in [0, 1), got {self.max_translate}")
        lo, hi = self.crop_area
        if not 0.0 < lo <= hi <= 1.0:
            raise ValueError(f"crop_area must satisfy 0 < lo <= hi <= 1, got {self.crop_area}")


@dataclass(frozen=True)
class ViewTransform:
    """One concrete transform instance.

    crop is (top, left, height, width) in source pixels; translate_dxdy is
    (dx, dy) with positive values moving content right/down; out_size is the
    post-resize (H, W).
    """

    src_size: tuple[int, int]
    crop: tuple[int, int, int, int]
    translate_dxdy: tuple[int, int]
    scale: float
    hflip: bool
    out_size: tuple[int, int]

    def __post_init__(self) -> None:
        sh, sw = self.src_size
        top, left, ch, cw = self.crop
        if ch < 1 or cw < 1 or top < 0 or left < 0 or top + ch > sh or left + cw > sw:
            raise ValueError(f"crop {self.crop} outside source {self.src_size}")
        if self.out_size[0] < 1 or self.out_size[1] < 1:
            raise ValueError(f"out_size must be positive, got {self.out_size}")
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    @classmethod
    def identity(cls, size: tuple[int, int]) -> "ViewTransform":
        h, w = size
        return cls(
            src_size=(h, w),
            crop=(0, 0, h, w),
            translate_dxdy=(0, 0),
            scale=1.0,
            hflip=False,
            out_size=(h, w),
        )


def sample_view(config: ViewConfig, rng: np.random.Generator) -> ViewTransform:
    """Draw one transform. Draw order is fixed so seeds replay exactly."""
    h = w = config.base_size
    if config.enable_crop:
        area = rng.uniform(*config.crop_area)
        side = float(np.sqrt(area))
        ch = max(1, round(h * side))
        cw = max(1, round(w * side))
        top = int(rng.integers(0, h - ch + 1))
        left = int(rng.integers(0, w - cw + 1))
    else:
        top, left, ch, cw = 0, 0, h, w
    if config.enable_translate:
        my = round(config.max_translate * ch)
        mx = round(config.max_translate * cw)
        dy = int(rng.integers(-my, my + 1))
        dx = int(rng.integers(-mx, mx + 1))
    else:
        dy, dx = 0, 0
    scale = float(rng.choice(config.resize_scales)) if config.enable_resize else 1.0
    flip = bool(rng.random() < 0.5) if config.enable_flip else False
    out = (max(1, round(ch * scale)), max(1, round(cw * scale)))
    return ViewTransform(
        src_size=(h, w),
        crop=(top, left, ch, cw),
        translate_dxdy=(dx, dy),
        scale=scale,
        hflip=flip,
        out_size=out,
    )


def _axis_coords(t: ViewTransform, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Inverse-map output pixel centers of one axis into crop-canvas coords.

    Returns float64 source coordinates and the validity mask (source point
    inside the canvas extent [-0.5, c - 0.5]).
    """
    c = t.crop[2] if axis == 0 else t.crop[3]
    n = t.out_size[axis]
    d = t.translate_dxdy[1] if axis == 0 else t.translate_dxdy[0]
    idx = np.arange(n, dtype=np.float64)
    if axis == 1 and t.hflip:
        idx = (n - 1) - idx
    src = (idx + 0.5) * (c / n) - 0.5 - d
    valid = (src >= -0.5) & (src <= c - 0.5)
    return src, valid


def _axis_sample(x: torch.Tensor, t: ViewTransform, axis: int) -> tuple[torch.Tensor, np.ndarray]:
    """Edge-clamped bilinear resample of one spatial axis (-2 rows, -1 cols)."""
    c = t.crop[2] if axis == 0 else t.crop[3]
    src, valid = _axis_coords(t, axis)
    sc = np.clip(src, 0.0, c - 1.0)
    i0 = np.floor(sc).astype(np.int64)
    i1 = np.minimum(i0 + 1, c - 1)
    w = torch.from_numpy(sc - i0).to(x.dtype)
    dim = x.dim() - 2 + axis
    a = x.index_select(dim, torch.from_numpy(i0))
    b = x.index_select(dim, torch.from_numpy(i1))
    shape = [1] * x.dim()
    shape[dim] = -1
    return a + (b - a) * w.view(shape), valid


def _apply(t: ViewTransform, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    if x.dim() != 4:
        raise ValueError(f"expected a (B, C, H, W) tensor, got shape {tuple(x.shape)}")
    if tuple(x.shape[-2:]) != t.src_size:
        raise ValueError(f"tensor size {tuple(x.shape[-2:])} does not match transform src {t.src_size}")
    top, left, ch, cw = t.crop
    x = x[..., top : top + ch, left : left + cw]
    x, vy = _axis_sample(x, t, 0)
    x, vx = _axis_sample(x, t, 1)
    mask = torch.from_numpy(vy[:, None] & vx[None, :]).view(1, 1, *t.out_size)
    return x * mask.to(x.dtype), mask


def apply_to_image(t: ViewTransform, image: torch.Tensor) -> torch.Tensor:
    """Transform a (B, C, H, W) image batch; invalid pixels are zero-filled."""
    out, _ = _apply(t, image)
    return out


def apply_to_map(t: ViewTransform, pred: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Transform a (B, 1, H, W) map, returning it with a (1, 1, H', W') bool mask.

    Gradients flow through to the input map; the mask is constant.
    """
    return _apply(t, pred)
