"""Evaluation measures for soft segmentation maps against binary masks.

All functions take pred as a float (H, W) array in [0, 1] and gt as a bool
(H, W) array, and return python floats in [0, 1].
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as TF
from PIL import Image
from scipy import ndimage

from .data.core import load_gt

_EPS = float(np.finfo(np.float64).eps)

METRIC_NAMES = ("mae", "s_measure", "e_measure", "weighted_fbeta")


def _check_pair(pred: np.ndarray, gt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt)
    if pred.ndim != 2 or gt.ndim != 2 or pred.shape != gt.shape:
        raise ValueError(f"pred {pred.shape} and gt {gt.shape} must be equal (H, W)")
    if gt.dtype != bool:
        raise ValueError(f"gt must be bool, got {gt.dtype}")
    if pred.min() < 0.0 or pred.max() > 1.0:
        raise ValueError("pred values must lie in [0, 1]")
    return pred, gt


def mae(pred: np.ndarray, gt: np.ndarray) -> float:
    pred, gt = _check_pair(pred, gt)
    return float(np.abs(pred - gt.astype(np.float64)).mean())


def _object_score(x: np.ndarray) -> float:
    if x.size == 0:
        return 0.0
    mean = float(x.mean())
    std = float(x.std(ddof=1)) if x.size > 1 else 0.0
    return 2.0 * mean / (mean * mean + 1.0 + std + _EPS)


def _s_object(pred: np.ndarray, gt: np.ndarray) -> float:
    mu = float(gt.mean())
    fg = _object_score(pred[gt])
    bg = _object_score((1.0 - pred)[~gt])
    return mu * fg + (1.0 - mu) * bg


def _region_ssim(p: np.ndarray, g: np.ndarray) -> float:
    n = p.size
    if n == 0:
        return 0.0
    x, y = float(p.mean()), float(g.mean())
    if n > 1:
        sx = float(p.var(ddof=1))
        sy = float(g.var(ddof=1))
        sxy = float(((p - x) * (g - y)).sum() / (n - 1))
    else:
        sx = sy = sxy = 0.0
    aa = 4.0 * x * y * sxy
    bb = (x * x + y * y) * (sx + sy)
    if aa != 0.0:
        return aa / (bb + _EPS)
    if bb == 0.0:
        return 1.0
    return 0.0


def _s_region(pred: np.ndarray, gt: np.ndarray) -> float:
    rows, cols = np.nonzero(gt)
    # centroid pixel belongs to the upper-left block
    r = int(round(rows.mean())) + 1
    c = int(round(cols.mean())) + 1
    h, w = gt.shape
    total = float(h * w)
    score = 0.0
    for ys, xs in ((slice(0, r), slice(0, c)), (slice(0, r), slice(c, w)),
                   (slice(r, h), slice(0, c)), (slice(r, h), slice(c, w))):
        p, g = pred[ys, xs], gt[ys, xs].astype(np.float64)
        score += (p.size / total) * _region_ssim(p, g)
    return score


def s_measure(pred: np.ndarray, gt: np.ndarray, alpha: float = 0.5) -> float:
    """Structural similarity of prediction and mask, object + region blend.

    Degenerate masks fall back to the mean prediction: an all-background gt
    scores 1 - mean(pred), an all-foreground gt scores mean(pred).
    """
    pred, gt = _check_pair(pred, gt)
    mu = float(gt.mean())
    if mu == 0.0:
        return float(1.0 - pred.mean())
    if mu == 1.0:
        return float(pred.mean())
    score = alpha * _s_object(pred, gt) + (1.0 - alpha) * _s_region(pred, gt)
    return float(max(score, 0.0))


def _enhanced_sum(binary: np.ndarray, gt: np.ndarray) -> float:
    fg_total = int(gt.sum())
    if fg_total == 0:
        return float((~binary).sum())
    if fg_total == gt.size:
        return float(binary.sum())
    dp = binary.astype(np.float64) - binary.mean()
    dg = gt.astype(np.float64) - gt.mean()
    align = 2.0 * dp * dg / (dp * dp + dg * dg + _EPS)
    return float(((align + 1.0) ** 2 / 4.0).sum())


def e_measure(pred: np.ndarray, gt: np.ndarray) -> float:
    """Mean enhanced-alignment score over 256 evenly spaced thresholds.

    Thresholds sit at bin centers (k + 0.5)/256 with pred >= t, so a binary
    prediction equal to gt scores 1 at every threshold.
    """
    pred, gt = _check_pair(pred, gt)
    n = gt.size
    scores = [
        _enhanced_sum(pred >= (k + 0.5) / 256.0, gt) / n
        for k in range(256)
    ]
    return float(np.mean(scores))


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    r = size // 2
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    k = np.exp(-(yy * yy + xx * xx) / (2.0 * sigma * sigma))
    return k / k.sum()


def weighted_fbeta(pred: np.ndarray, gt: np.ndarray, beta_sq: float = 1.0) -> float:
    """Weighted F-measure: errors at background pixels inherit the error of
    the nearest foreground pixel, smoothed 7x7, with distance-decayed
    background weighting. Empty gt scores 0 with a warning."""
    pred, gt = _check_pair(pred, gt)
    if not gt.any():
        warnings.warn("weighted_fbeta: empty ground truth scores 0", stacklevel=2)
        return 0.0
    err = np.abs(pred - gt.astype(np.float64))
    dist, (iy, ix) = ndimage.distance_transform_edt(~gt, return_indices=True)
    err_t = err.copy()
    err_t[~gt] = err[iy[~gt], ix[~gt]]
    smoothed = ndimage.convolve(err_t, _gaussian_kernel(7, 5.0), mode="constant", cval=0.0)
    err_min = err.copy()
    swap = gt & (smoothed < err)
    err_min[swap] = smoothed[swap]
    weight = np.ones_like(err)
    weight[~gt] = 2.0 - np.exp(np.log(0.5) / 5.0 * dist[~gt])
    err_w = err_min * weight
    fg_total = float(gt.sum())
    tp_w = fg_total - float(err_w[gt].sum())
    fp_w = float(err_w[~gt].sum())
    recall = 1.0 - float(err_w[gt].mean())
    precision = tp_w / (_EPS + tp_w + fp_w)
    return float((1.0 + beta_sq) * recall * precision / (_EPS + recall + beta_sq * precision))


@dataclass
class MetricReport:
    rows: list[dict] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.rows)

    def means(self) -> dict[str, float]:
        if not self.rows:
            return {name: float("nan") for name in METRIC_NAMES}
        return {
            name: float(np.mean([row[name] for row in self.rows]))
            for name in METRIC_NAMES
        }

    def to_json(self, path: str | Path) -> None:
        payload = {"count": self.count, "means": self.means(), "per_sample": self.rows}
        Path(path).write_text(json.dumps(payload, indent=2) + "\n")

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["id", *METRIC_NAMES])
            writer.writeheader()
            writer.writerows(self.rows)

    def summary(self) -> str:
        m = self.means()
        cells = ", ".join(f"{name}={m[name]:.4f}" for name in METRIC_NAMES)
        return f"{self.count} samples: {cells}"


def _load_pred(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float64)
    return arr / 255.0


def _resize_pred(pred: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    t = torch.from_numpy(pred)[None, None]
    out = TF.interpolate(t, size=size, mode="bilinear", align_corners=False)
    return out[0, 0].clamp_(0.0, 1.0).numpy()


def evaluate_dataset(
    pred_dir: str | Path, gt_dir: str | Path, resize_pred: bool = True
) -> MetricReport:
    """Score every gt mask against the same-named prediction raster.

    Ids come from the gt directory. Missing predictions raise; extra
    predictions only warn. Size mismatches are resolved by resizing the
    prediction to the gt grid unless resize_pred is off, in which case they
    raise.
    """
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    if not gt_dir.is_dir():
        raise FileNotFoundError(f"missing gt directory {gt_dir}")
    if not pred_dir.is_dir():
        raise FileNotFoundError(f"missing prediction directory {pred_dir}")
    ids = sorted(p.stem for p in gt_dir.glob("*.png"))
    if not ids:
        raise ValueError(f"no gt masks under {gt_dir}")
    missing = [i for i in ids if not (pred_dir / f"{i}.png").is_file()]
    if missing:
        raise FileNotFoundError(f"missing predictions for {len(missing)} ids: {missing[:5]}")
    extra = sorted(set(p.stem for p in pred_dir.glob("*.png")) - set(ids))
    if extra:
        warnings.warn(f"{len(extra)} predictions have no gt and are ignored", stacklevel=2)
    report = MetricReport()
    for sample_id in ids:
        gt = load_gt(gt_dir / f"{sample_id}.png")
        pred = _load_pred(pred_dir / f"{sample_id}.png")
        if pred.shape != gt.shape:
            if not resize_pred:
                raise ValueError(
                    f"prediction {pred.shape} does not match gt {gt.shape} for '{sample_id}'"
                )
            pred = _resize_pred(pred, gt.shape)
        report.rows.append({
            "id": sample_id,
            "mae": mae(pred, gt),
            "s_measure": s_measure(pred, gt),
            "e_measure": e_measure(pred, gt),
            "weighted_fbeta": weighted_fbeta(pred, gt),
        })
    return report
