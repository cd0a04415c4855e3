"""Partial supervision and the combined training objective."""

from __future__ import annotations

from typing import Sequence

import torch

from ..data.core import FOREGROUND, UNLABELED
from .config import LossBreakdown, LossConfig
from .consistency import iv_loss, rcv_loss
from .feature import context_affinity_loss, semantic_significance_loss, ss_weight

_LOG_EPS = 1e-6


def pce_loss(pred: torch.Tensor, scribble: torch.Tensor) -> torch.Tensor:
    """Cross-entropy averaged over labeled pixels only, natural log."""
    if pred.dim() != 4 or pred.shape[1] != 1:
        raise ValueError(f"pred must be (B, 1, H, W), got {tuple(pred.shape)}")
    if scribble.shape != (pred.shape[0], *pred.shape[-2:]):
        raise ValueError(
            f"scribble {tuple(scribble.shape)} does not match pred {tuple(pred.shape)}"
        )
    labeled = scribble != UNLABELED
    if not labeled.any():
        raise ValueError("batch carries no labeled scribble pixels")
    p = pred[:, 0][labeled].clamp(_LOG_EPS, 1.0 - _LOG_EPS)
    y = (scribble[labeled] == FOREGROUND).to(p.dtype)
    return -(y * p.log() + (1.0 - y) * (1.0 - p).log()).mean()


def aux_loss(
    pred_i: torch.Tensor,
    scribble: torch.Tensor,
    image: torch.Tensor,
    cfg: LossConfig,
    epoch: int,
) -> torch.Tensor:
    """Side-output supervision: partial cross-entropy, visual affinity and
    confident-entropy terms, each honoring its global toggle."""
    total = pred_i.sum() * 0.0
    if cfg.use_pce:
        total = total + pce_loss(pred_i, scribble)
    if cfg.use_ca:
        total = total + context_affinity_loss(pred_i, image, cfg)
    if cfg.use_iv:
        total = total + iv_loss(pred_i, cfg, epoch)
    return total


def total_loss(
    outputs: Sequence[torch.Tensor],
    feature: torch.Tensor,
    scribble: torch.Tensor,
    image: torch.Tensor,
    view_pair: tuple[torch.Tensor, torch.Tensor, torch.Tensor] | None,
    cfg: LossConfig,
    epoch: int,
) -> LossBreakdown:
    """Combine all active terms for the main output plus weighted side outputs.

    outputs is the 5-tuple of prediction maps, main first. view_pair is
    (aligned_main, transformed_view_main, validity) and is required whenever
    the cross-view term is active.
    """
    if len(outputs) != 5:
        raise ValueError(f"expected 5 output maps, got {len(outputs)}")
    out0 = outputs[0]
    total = out0.sum() * 0.0
    report = {"pce": 0.0, "cv": 0.0, "rcv": 0.0, "iv": 0.0, "ca": 0.0, "ss": 0.0}
    if cfg.use_pce:
        term = pce_loss(out0, scribble)
        total = total + term
        report["pce"] = float(term.detach())
    if cfg.use_cv:
        if view_pair is None:
            raise ValueError("cross-view term is active but no view pair was given")
        aligned, transformed, valid = view_pair
        term = rcv_loss(aligned, transformed, valid, cfg.gamma, cfg.alpha)
        total = total + term
        report["rcv"] = float(term.detach())
        report["cv"] = report["rcv"] / 2.0
    if cfg.use_iv:
        term = iv_loss(out0, cfg, epoch)
        total = total + term
        report["iv"] = float(term.detach())
    if cfg.use_ca:
        term = context_affinity_loss(out0, image, cfg)
        total = total + term
        report["ca"] = float(term.detach())
    if cfg.use_ss:
        term = semantic_significance_loss(out0, feature, scribble, cfg, epoch)
        total = total + term
        report["ss"] = float(term.detach())
    aux_vals = [0.0, 0.0, 0.0, 0.0]
    if cfg.use_aux:
        for i, (out_i, beta) in enumerate(zip(outputs[1:], cfg.betas)):
            term = aux_loss(out_i, scribble, image, cfg, epoch)
            total = total + beta * term
            aux_vals[i] = float(term.detach())
    return LossBreakdown(
        total=total,
        w_ss=ss_weight(cfg, epoch) if cfg.use_ss else 0.0,
        aux=tuple(aux_vals),
        **report,
    )
