from .config import LossBreakdown, LossConfig
from .consistency import binary_entropy_map, cv_loss, iv_loss, rcv_loss, ssim_map
from .feature import (
    boundary_regions,
    channel_significance,
    context_affinity_loss,
    pair_affinity,
    select_significant_channels,
    semantic_significance_loss,
    ss_weight,
)
from .composite import aux_loss, pce_loss, total_loss

__all__ = [
    "LossBreakdown",
    "LossConfig",
    "binary_entropy_map",
    "cv_loss",
    "iv_loss",
    "rcv_loss",
    "ssim_map",
    "boundary_regions",
    "channel_significance",
    "context_affinity_loss",
    "pair_affinity",
    "select_significant_channels",
    "semantic_significance_loss",
    "ss_weight",
    "aux_loss",
    "pce_loss",
    "total_loss",
]
