"""Cross-view and inside-view consistency objectives.

All prediction maps are (B, 1, H, W) tensors of probabilities in [0, 1].
The validity mask marks aligned pixels whose source location existed in both
views; invalid pixels are excluded from every average.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F

from .config import LossConfig

SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2
_SSIM_WINDOW = 3


def _mean3(x: torch.Tensor) -> torch.Tensor:
    pad = _SSIM_WINDOW // 2
    return F.avg_pool2d(F.pad(x, (pad,) * 4, mode="reflect"), _SSIM_WINDOW, stride=1)


def ssim_map(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Per-pixel single-scale SSIM over 3x3 windows, same spatial size as inputs."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {tuple(a.shape)} vs {tuple(b.shape)}")
    mu_a, mu_b = _mean3(a), _mean3(b)
    var_a = _mean3(a * a) - mu_a * mu_a
    var_b = _mean3(b * b) - mu_b * mu_b
    cov = _mean3(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return num / den


def _valid_mask(valid: torch.Tensor | None, like: torch.Tensor) -> torch.Tensor:
    if valid is None:
        return torch.ones_like(like)
    return valid.to(like.dtype).expand_as(like)


def cv_loss(
    p: torch.Tensor,
    p_hat: torch.Tensor,
    valid: torch.Tensor | None = None,
    alpha: float = 0.85,
) -> torch.Tensor:
    """Symmetric view-pair loss: (1-alpha)(1-SSIM)/2 + alpha*|p - p_hat|, averaged
    over valid pixels. Empty mask gives 0."""
    if p.shape != p_hat.shape:
        raise ValueError(f"shape mismatch {tuple(p.shape)} vs {tuple(p_hat.shape)}")
    m = _valid_mask(valid, p)
    count = m.sum()
    if count == 0:
        return (p.sum() + p_hat.sum()) * 0.0
    term = (1.0 - alpha) * (1.0 - ssim_map(p, p_hat)) / 2.0 + alpha * (p - p_hat).abs()
    return (term * m).sum() / count


def rcv_loss(
    p: torch.Tensor,
    p_hat: torch.Tensor,
    valid: torch.Tensor | None = None,
    gamma: float = 0.3,
    alpha: float = 0.85,
) -> torch.Tensor:
    """Reliability-weighted view-pair loss.

    The branch supervising p sees p_hat as a constant and vice versa, so the
    gradient into p is scaled by (1 + gamma) and into p_hat by (1 - gamma),
    while the value is always 2 * cv_loss regardless of gamma.
    """
    into_p = cv_loss(p, p_hat.detach(), valid, alpha)
    into_p_hat = cv_loss(p.detach(), p_hat, valid, alpha)
    return (1.0 + gamma) * into_p + (1.0 - gamma) * into_p_hat


def binary_entropy_map(p: torch.Tensor) -> torch.Tensor:
    """Elementwise Bernoulli entropy in nats; exactly 0 at hard 0/1 values."""
    return torch.special.entr(p) + torch.special.entr(1.0 - p)


def iv_loss(pred: torch.Tensor, cfg: LossConfig, epoch: int) -> torch.Tensor:
    """Weighted mean entropy over confident pixels (entropy <= threshold).

    Pixels above the threshold count as near-boundary and are excluded. Zero
    before iv_start_epoch and when no pixel qualifies.
    """
    if epoch < cfg.iv_start_epoch:
        return pred.sum() * 0.0
    ent = binary_entropy_map(pred)
    keep = ent <= cfg.entropy_threshold
    if not keep.any():
        return pred.sum() * 0.0
    return cfg.w_iv * ent[keep].mean()
