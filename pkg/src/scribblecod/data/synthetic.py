"""Synthetic camouflage-style fixtures.

Each sample is a lobed blob whose texture comes from the same value-noise
family as the background, with parameters offset by at most 15 percent, so
the object boundary carries little contrast. Scribbles are thin strokes
placed strictly inside an eroded foreground / eroded background.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import ndimage

from .core import (
    BACKGROUND,
    FOREGROUND,
    Sample,
    encode_scribble,
    save_image,
    save_mask,
)

MIN_SIZE = 32
TEXTURE_OFFSET = 0.15


def _value_noise(rng: np.random.Generator, size: int, cells: int) -> np.ndarray:
    g = rng.random((cells + 1, cells + 1))
    coord = np.linspace(0.0, cells, size)
    i0 = np.minimum(coord.astype(np.int64), cells - 1)
    t = coord - i0
    y0, ty = i0[:, None], t[:, None]
    x0, tx = i0[None, :], t[None, :]
    return (
        g[y0, x0] * (1 - ty) * (1 - tx)
        + g[y0 + 1, x0] * ty * (1 - tx)
        + g[y0, x0 + 1] * (1 - ty) * tx
        + g[y0 + 1, x0 + 1] * ty * tx
    )


def _blob_mask(rng: np.random.Generator, size: int) -> np.ndarray:
    cy, cx = size / 2 + rng.uniform(-size / 8, size / 8, size=2)
    r0 = rng.uniform(0.18, 0.28) * size
    harmonics = rng.integers(2, 6, size=3)
    amps = rng.uniform(0.0, 0.08, size=3)
    phases = rng.uniform(0.0, 2 * np.pi, size=3)
    yy, xx = np.mgrid[0:size, 0:size]
    theta = np.arctan2(yy - cy, xx - cx)
    r = r0 * (1.0 + sum(a * np.sin(k * theta + p) for k, a, p in zip(harmonics, amps, phases)))
    return (yy - cy) ** 2 + (xx - cx) ** 2 <= r**2


def _texture(rng: np.random.Generator, size: int, base: np.ndarray, amp: float) -> np.ndarray:
    noise = _value_noise(rng, size, max(2, size // 8))
    img = base[None, None, :] + amp * (noise[:, :, None] - 0.5)
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def _longest_run(row: np.ndarray) -> tuple[int, int]:
    """(start, length) of the longest True run, (-1, 0) if none."""
    bestks, bestn = -1, 0
    k = 0
    n = len(row)
    while k < n:
        if row[k]:
            j = k
            while j < n and row[j]:
                j += 1
            if j - k > bestn:
                bestks, bestn = k, j - k
            k = j
        else:
            k += 1
    return bestks, bestn


def _stroke_from_region(region: np.ndarray, max_len: int) -> tuple[int, int, int]:
    """Pick (row, col_start, length) of the best horizontal run in region."""
    best = (-1, -1, 0)
    for r in range(region.shape[0]):
        ks, n = _longest_run(region[r])
        if n > best[2]:
            best = (r, ks, n)
    r, ks, n = best
    if n <= 0:
        return best
    if n > max_len:
        ks += (n - max_len) // 2
        n = max_len
    return r, ks, n


def _make_sample(rng: np.random.Generator, sample_id: str, size: int) -> Sample:
    margin = max(1, round(0.05 * size))
    for _ in range(100):
        mask = _blob_mask(rng, size)
        inner_fg = ndimage.binary_erosion(mask, iterations=margin)
        inner_bg = ndimage.binary_erosion(~mask, iterations=margin, border_value=1)
        if inner_fg.any() and inner_bg.any():
            break
    else:
        raise RuntimeError(f"could not place a blob with margin {margin} at size {size}")

    base_bg = rng.uniform(0.25, 0.75, size=3)
    amp_bg = rng.uniform(0.15, 0.30)
    base_fg = np.clip(base_bg * (1.0 + rng.uniform(-TEXTURE_OFFSET, TEXTURE_OFFSET, size=3)), 0.0, 1.0)
    amp_fg = amp_bg * (1.0 + rng.uniform(-TEXTURE_OFFSET, TEXTURE_OFFSET))
    bg_tex = _texture(rng, size, base_bg, amp_bg)
    fg_tex = _texture(rng, size, base_fg, amp_fg)
    image = np.where(mask[:, :, None], fg_tex, bg_tex)

    scribble = np.zeros((size, size), dtype=np.uint8)
    r, ks, n = _stroke_from_region(inner_fg, max_len=max(3, size // 3))
    scribble[r, ks : ks + n] = FOREGROUND
    r, ks, n = _stroke_from_region(inner_bg, max_len=max(3, size // 3))
    scribble[r, ks : ks + n] = BACKGROUND

    return Sample(id=sample_id, image=image, scribble=scribble, gt_mask=mask)


def synth_generate(count: int, size: int, seed: int) -> list[Sample]:
    """Deterministic synthetic dataset; same arguments give identical samples."""
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    if size < MIN_SIZE:
        raise ValueError(f"size must be at least {MIN_SIZE}, got {size}")
    rng = np.random.default_rng(seed)
    return [_make_sample(rng, f"synth_{i:04d}", size) for i in range(count)]


def save_synthetic(root: str | Path, split: str, samples: list[Sample]) -> Path:
    """Write samples in the standard dataset layout, returns the split dir."""
    split_dir = Path(root) / split
    for sub in ("images", "scribbles", "gt"):
        (split_dir / sub).mkdir(parents=True, exist_ok=True)
    for s in samples:
        save_image(split_dir / "images" / f"{s.id}.png", s.image)
        if s.scribble is not None:
            encode_scribble(split_dir / "scribbles" / f"{s.id}.png", s.scribble)
        if s.gt_mask is not None:
            save_mask(split_dir / "gt" / f"{s.id}.png", s.gt_mask)
    (split_dir / "ids.txt").write_text("".join(f"{s.id}\n" for s in samples))
    return split_dir
