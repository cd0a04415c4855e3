"""Objective configuration and the per-step loss report."""

from __future__ import annotations

from dataclasses import dataclass, field

import torch


@dataclass
class LossConfig:
    alpha: float = 0.85            # L1 weight inside the view-pair term, 1-alpha goes to SSIM
    gamma: float = 0.3             # reliability bias between original and transformed view
    w_iv: float = 0.05
    entropy_threshold: float = 0.5
    iv_start_epoch: int = 100
    sigma_spatial: float = 6.0
    sigma_color: float = 0.1       # also the bandwidth of the significant-feature kernel
    kernel_window: int = 5
    top_channels: int = 16
    block_size: int = 20
    boundary_fraction: float = 0.3
    fg_confidence: float = 0.8
    bg_confidence: float = 0.2
    w_ss_max: float = 0.3
    w_ss_ramp_epochs: int = 50
    betas: tuple[float, float, float, float] = (0.3, 0.3, 0.3, 0.3)
    use_pce: bool = True
    use_cv: bool = True
    use_iv: bool = True
    use_ca: bool = True
    use_ss: bool = True
    use_aux: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.kernel_window < 3 or self.kernel_window % 2 == 0:
            raise ValueError(f"kernel_window must be odd and >= 3, got {self.kernel_window}")
        if self.sigma_spatial <= 0 or self.sigma_color <= 0:
            raise ValueError("kernel bandwidths must be positive")
        if self.top_channels < 1:
            raise ValueError(f"top_channels must be positive, got {self.top_channels}")
        if self.block_size < 1:
            raise ValueError(f"block_size must be positive, got {self.block_size}")
        if not 0.0 < self.boundary_fraction <= 1.0:
            raise ValueError(f"boundary_fraction must lie in (0, 1], got {self.boundary_fraction}")
        if not 0.0 <= self.bg_confidence < self.fg_confidence <= 1.0:
            raise ValueError("need 0 <= bg_confidence < fg_confidence <= 1")
        if self.w_ss_ramp_epochs < 1:
            raise ValueError(f"w_ss_ramp_epochs must be positive, got {self.w_ss_ramp_epochs}")
        if len(self.betas) != 4:
            raise ValueError(f"betas must hold 4 values, got {len(self.betas)}")


@dataclass
class LossBreakdown:
    """Values as they enter the total: iv/ss carry their weights, aux are raw.

    total = pce + rcv + iv + ca + ss + sum(beta_i * aux_i) over active terms.
    cv is informational (the symmetric view-pair value, rcv / 2).
    """

    total: torch.Tensor
    pce: float = 0.0
    cv: float = 0.0
    rcv: float = 0.0
    iv: float = 0.0
    ca: float = 0.0
    ss: float = 0.0
    w_ss: float = 0.0
    aux: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def as_dict(self) -> dict[str, float]:
        d = {
            "total": float(self.total.detach()),
            "pce": self.pce,
            "cv": self.cv,
            "rcv": self.rcv,
            "iv": self.iv,
            "ca": self.ca,
            "ss": self.ss,
            "w_ss": self.w_ss,
        }
        for i, v in enumerate(self.aux, start=1):
            d[f"aux{i}"] = v
        return d
