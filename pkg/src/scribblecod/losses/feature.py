"""Feature-guided objectives: local visual affinity and semantic significance.

Both losses push pairs of similar pixels toward the same class decision via
the discrepancy D(i,j) = 1 - Pi*Pj - (1-Pi)(1-Pj); gradients reach the
prediction only, never the pairing kernels.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from ..data.core import BACKGROUND, FOREGROUND
from .config import LossConfig


def pair_affinity(
    pos_sq: torch.Tensor | float,
    feat_sq: torch.Tensor | float,
    sigma_spatial: float,
    sigma_feature: float,
) -> torch.Tensor | float:
    """Gaussian pair kernel on squared position and feature distances."""
    arg = pos_sq / (2.0 * sigma_spatial**2) + feat_sq / (2.0 * sigma_feature**2)
    if isinstance(arg, torch.Tensor):
        return torch.exp(-arg)
    return float(np.exp(-arg))


def _check_pred(pred: torch.Tensor) -> None:
    if pred.dim() != 4 or pred.shape[1] != 1:
        raise ValueError(f"pred must be (B, 1, H, W), got {tuple(pred.shape)}")


def context_affinity_loss(pred: torch.Tensor, image: torch.Tensor, cfg: LossConfig) -> torch.Tensor:
    """Mean over pixels of the kernel-weighted discrepancy with every neighbor
    in the n x n window (center excluded, borders truncated)."""
    _check_pred(pred)
    if image.dim() != 4 or image.shape[1] != 3:
        raise ValueError(f"image must be (B, 3, H, W), got {tuple(image.shape)}")
    if image.shape[0] != pred.shape[0] or image.shape[-2:] != pred.shape[-2:]:
        raise ValueError(
            f"image {tuple(image.shape)} does not match pred {tuple(pred.shape)}"
        )
    b, _, h, w = pred.shape
    if min(h, w) < 2:
        raise ValueError("context affinity needs at least a 2-pixel side")
    r = cfg.kernel_window // 2
    p = pred[:, 0]
    img = image.detach()
    acc = torch.zeros_like(p)
    cnt = torch.zeros((h, w), dtype=p.dtype)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dy == 0 and dx == 0:
                continue
            iy = slice(max(0, -dy), h - max(0, dy))
            ix = slice(max(0, -dx), w - max(0, dx))
            jy = slice(max(0, dy), h - max(0, -dy))
            jx = slice(max(0, dx), w - max(0, -dx))
            if iy.start >= iy.stop or ix.start >= ix.stop:
                continue
            pi, pj = p[:, iy, ix], p[:, jy, jx]
            dcol = img[:, :, iy, ix] - img[:, :, jy, jx]
            k = pair_affinity(
                float(dy * dy + dx * dx), (dcol * dcol).sum(1), cfg.sigma_spatial, cfg.sigma_color
            )
            d = 1.0 - pi * pj - (1.0 - pi) * (1.0 - pj)
            # pad the overlap block back to (h, w) so accumulation stays functional
            pads = (ix.start, w - ix.stop, iy.start, h - iy.stop)
            acc = acc + F.pad(k * d, pads)
            cnt = cnt + F.pad(torch.ones((b, iy.stop - iy.start, ix.stop - ix.start), dtype=p.dtype), pads)[0]
    return (acc / cnt).mean()


def channel_significance(feature: torch.Tensor, pred: torch.Tensor) -> torch.Tensor:
    """Per-channel covariance between feature and prediction over pixels, (B, C)."""
    _check_pred(pred)
    if feature.dim() != 4 or feature.shape[0] != pred.shape[0] or feature.shape[-2:] != pred.shape[-2:]:
        raise ValueError(
            f"feature {tuple(feature.shape)} does not match pred {tuple(pred.shape)}"
        )
    f = feature.flatten(2)
    p = pred.flatten(2)
    fc = f - f.mean(dim=-1, keepdim=True)
    pc = p - p.mean(dim=-1, keepdim=True)
    return (fc * pc).mean(dim=-1)


def select_significant_channels(sig: torch.Tensor, n: int) -> torch.Tensor:
    """Indices of the n largest-magnitude significances, ties to the lower index.

    Asking for more channels than exist returns them all.
    """
    if sig.dim() != 1:
        raise ValueError(f"sig must be a vector, got shape {tuple(sig.shape)}")
    if n < 1:
        raise ValueError(f"need n >= 1, got n={n}")
    c = sig.numel()
    mag = sig.detach().abs().cpu().numpy()
    order = np.lexsort((np.arange(c), -mag))
    return torch.as_tensor(order[: min(n, c)].copy(), dtype=torch.long)


def boundary_regions(
    pred: torch.Tensor | np.ndarray, scribble: torch.Tensor | np.ndarray, cfg: LossConfig
) -> list[tuple[int, int, int, int]]:
    """Blocks (y0, x0, h, w) where both classes cover at least the boundary fraction.

    The image tiles into block_size x block_size cells from the top-left
    corner; edge cells keep their partial area. A pixel counts as foreground
    when scribbled so or predicted above fg_confidence, as background when
    scribbled so or predicted below bg_confidence.
    """
    p = pred.detach().cpu().numpy() if torch.is_tensor(pred) else np.asarray(pred)
    s = scribble.cpu().numpy() if torch.is_tensor(scribble) else np.asarray(scribble)
    if p.ndim != 2 or p.shape != s.shape:
        raise ValueError(f"pred {p.shape} and scribble {s.shape} must be equal (H, W)")
    fg = (s == FOREGROUND) | (p > cfg.fg_confidence)
    bg = (s == BACKGROUND) | (p < cfg.bg_confidence)
    h, w = p.shape
    bs = cfg.block_size
    out = []
    for y0 in range(0, h, bs):
        for x0 in range(0, w, bs):
            bh, bw = min(bs, h - y0), min(bs, w - x0)
            # 1e-9 guard keeps "at least 30%" exact despite float rounding
            need = cfg.boundary_fraction * (bh * bw) - 1e-9
            blk = (slice(y0, y0 + bh), slice(x0, x0 + bw))
            if fg[blk].sum() >= need and bg[blk].sum() >= need:
                out.append((y0, x0, bh, bw))
    return out


def ss_weight(cfg: LossConfig, epoch: int) -> float:
    """Ramp from 0 to w_ss_max linearly over the first w_ss_ramp_epochs epochs."""
    return cfg.w_ss_max * min(1.0, epoch / cfg.w_ss_ramp_epochs)


def semantic_significance_loss(
    pred: torch.Tensor,
    feature: torch.Tensor,
    scribble: torch.Tensor,
    cfg: LossConfig,
    epoch: int,
) -> torch.Tensor:
    """Kernel-weighted discrepancy over all pixel pairs of each boundary block.

    The kernel runs on the top-N significance channels, standardized per
    channel, and the feature map is a constant for this loss: supervision
    reaches the prediction only. Already weighted by the epoch ramp.
    """
    _check_pred(pred)
    if scribble.dim() != 3 or scribble.shape[0] != pred.shape[0] or scribble.shape[-2:] != pred.shape[-2:]:
        raise ValueError(
            f"scribble {tuple(scribble.shape)} does not match pred {tuple(pred.shape)}"
        )
    zero = pred.sum() * 0.0
    weight = ss_weight(cfg, epoch)
    if weight == 0.0:
        return zero
    feat = feature.detach()
    sig = channel_significance(feat, pred.detach())
    batch = pred.shape[0]
    total = zero
    for b in range(batch):
        idx = select_significant_channels(sig[b], cfg.top_channels)
        fsel = feat[b, idx]
        mean = fsel.mean(dim=(1, 2), keepdim=True)
        std = fsel.std(dim=(1, 2), unbiased=False, keepdim=True)
        fsel = (fsel - mean) / std.clamp_min(1e-6)
        pmap = pred[b, 0]
        blocks = boundary_regions(pmap, scribble[b], cfg)
        if not blocks:
            continue
        per_image = zero
        for y0, x0, bh, bw in blocks:
            ys, xs = slice(y0, y0 + bh), slice(x0, x0 + bw)
            pv = pmap[ys, xs].reshape(-1)
            fv = fsel[:, ys, xs].reshape(len(idx), -1).T
            yy, xx = torch.meshgrid(
                torch.arange(y0, y0 + bh), torch.arange(x0, x0 + bw), indexing="ij"
            )
            pos = torch.stack([yy.reshape(-1), xx.reshape(-1)], dim=1).to(fv.dtype)
            pos_sq = ((pos[:, None, :] - pos[None, :, :]) ** 2).sum(-1)
            feat_sq = ((fv[:, None, :] - fv[None, :, :]) ** 2).sum(-1)
            k = pair_affinity(pos_sq, feat_sq, cfg.sigma_spatial, cfg.sigma_color)
            d = 1.0 - pv[:, None] * pv[None, :] - (1.0 - pv[:, None]) * (1.0 - pv[None, :])
            per_image = per_image + (k * d).sum() / pv.numel()
        total = total + per_image / pmap.numel()
    return weight * total / batch
