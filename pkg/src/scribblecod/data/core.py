"""Dataset layout, raster IO and validation.

On-disk layout for a dataset root:

    <root>/<split>/images/<id>.png|.jpg     RGB image
    <root>/<split>/scribbles/<id>.png       ternary annotation, values {0,1,2}
    <root>/<split>/gt/<id>.png              binary mask, evaluation splits only
    <root>/<split>/ids.txt                  optional manifest, one id per line

Scribble label codes: 0 unlabeled, 1 foreground, 2 background. Scribble PNGs
store the raw codes in an 8-bit single channel, they are not grayscale images.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

UNLABELED = 0
FOREGROUND = 1
BACKGROUND = 2

IMAGE_EXTS = (".png", ".jpg", ".jpeg")


def check_image(img: np.ndarray) -> None:
    """Raise ValueError unless img is a float (H, W, 3) array in [0, 1]."""
    if not isinstance(img, np.ndarray):
        raise ValueError(f"image must be ndarray, got {type(img).__name__}")
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"image must have shape (H, W, 3), got {img.shape}")
    if img.dtype.kind != "f":
        raise ValueError(f"image must be float, got dtype {img.dtype}")
    if img.size == 0:
        raise ValueError("image is empty")
    lo, hi = float(img.min()), float(img.max())
    if not np.isfinite([lo, hi]).all() or lo < 0.0 or hi > 1.0:
        raise ValueError(f"image values must lie in [0, 1], got [{lo}, {hi}]")


def check_scribble(scr: np.ndarray) -> None:
    """Raise ValueError unless scr is a uint8 (H, W) map with values in {0,1,2}."""
    if not isinstance(scr, np.ndarray):
        raise ValueError(f"scribble must be ndarray, got {type(scr).__name__}")
    if scr.ndim != 2:
        raise ValueError(f"scribble must have shape (H, W), got {scr.shape}")
    if scr.dtype != np.uint8:
        raise ValueError(f"scribble must be uint8, got dtype {scr.dtype}")
    bad = np.setdiff1d(np.unique(scr), [UNLABELED, FOREGROUND, BACKGROUND])
    if bad.size:
        raise ValueError(f"scribble contains invalid labels {bad.tolist()}")


def load_image(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32)
    return arr / 255.0


def save_image(path: str | Path, img: np.ndarray) -> None:
    check_image(img)
    arr = np.rint(np.asarray(img, dtype=np.float64) * 255.0).astype(np.uint8)
    Image.fromarray(arr, "RGB").save(path)


def load_gt(path: str | Path) -> np.ndarray:
    """Binary mask from an 8-bit raster, thresholded at mid-gray."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return arr > 127


def save_mask(path: str | Path, mask: np.ndarray) -> None:
    if mask.ndim != 2 or mask.dtype != bool:
        raise ValueError(f"mask must be bool (H, W), got {mask.dtype} {mask.shape}")
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), "L").save(path)


def decode_scribble(path: str | Path) -> np.ndarray:
    """Load a ternary scribble map, validating the label set."""
    with Image.open(path) as im:
        if im.mode not in ("L", "P"):
            raise ValueError(f"scribble raster must be single channel, got mode {im.mode}")
        arr = np.asarray(im, dtype=np.uint8)
    check_scribble(arr)
    return arr


def encode_scribble(path: str | Path, scr: np.ndarray) -> None:
    check_scribble(scr)
    path = Path(path)
    if path.suffix.lower() != ".png":
        raise ValueError(f"scribbles are stored lossless as .png, got {path.name}")
    Image.fromarray(scr, "L").save(path)


@dataclass
class Sample:
    id: str
    image: np.ndarray
    scribble: np.ndarray | None = None
    gt_mask: np.ndarray | None = None


@dataclass
class DatasetManifest:
    root: Path
    split: str
    ids: list[str]
    with_scribbles: bool
    with_gt: bool

    @property
    def split_dir(self) -> Path:
        return self.root / self.split

    def image_path(self, sample_id: str) -> Path:
        base = self.split_dir / "images"
        for ext in IMAGE_EXTS:
            p = base / f"{sample_id}{ext}"
            if p.is_file():
                return p
        raise FileNotFoundError(f"no image for id '{sample_id}' under {base}")

    def scribble_path(self, sample_id: str) -> Path:
        return self.split_dir / "scribbles" / f"{sample_id}.png"

    def gt_path(self, sample_id: str) -> Path:
        return self.split_dir / "gt" / f"{sample_id}.png"


def list_image_ids(images_dir: Path) -> list[str]:
    ids = sorted(
        p.stem for p in images_dir.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_EXTS
    )
    return ids


def load_manifest(root: str | Path, split: str) -> DatasetManifest:
    """Resolve the id list for one split.

    Uses <split>/ids.txt when present, otherwise sorts the images directory.
    gt maps are attached only for non-train splits that ship a gt directory.
    """
    root = Path(root)
    split_dir = root / split
    images_dir = split_dir / "images"
    if not images_dir.is_dir():
        raise FileNotFoundError(f"missing images directory {images_dir}")
    ids_file = split_dir / "ids.txt"
    if ids_file.is_file():
        ids = [line.strip() for line in ids_file.read_text().splitlines() if line.strip()]
    else:
        ids = list_image_ids(images_dir)
    if not ids:
        raise ValueError(f"split '{split}' at {root} resolves to an empty id list")
    if len(set(ids)) != len(ids):
        raise ValueError(f"split '{split}' has duplicate ids")
    return DatasetManifest(
        root=root,
        split=split,
        ids=ids,
        with_scribbles=(split_dir / "scribbles").is_dir(),
        with_gt=(split_dir / "gt").is_dir() and split != "train",
    )


def load_sample(manifest: DatasetManifest, sample_id: str) -> Sample:
    if sample_id not in manifest.ids:
        raise KeyError(f"unknown sample id '{sample_id}' in split '{manifest.split}'")
    image = load_image(manifest.image_path(sample_id))
    scribble = None
    if manifest.with_scribbles:
        spath = manifest.scribble_path(sample_id)
        if manifest.split == "train" and not spath.is_file():
            raise FileNotFoundError(f"missing scribble {spath}")
        if spath.is_file():
            scribble = decode_scribble(spath)
            if scribble.shape != image.shape[:2]:
                raise ValueError(
                    f"scribble size {scribble.shape} does not match image "
                    f"{image.shape[:2]} for id '{sample_id}'"
                )
    gt = None
    if manifest.with_gt:
        gpath = manifest.gt_path(sample_id)
        if not gpath.is_file():
            raise FileNotFoundError(f"missing gt mask {gpath}")
        gt = load_gt(gpath)
        if gt.shape != image.shape[:2]:
            raise ValueError(
                f"gt size {gt.shape} does not match image {image.shape[:2]} "
                f"for id '{sample_id}'"
            )
    return Sample(id=sample_id, image=image, scribble=scribble, gt_mask=gt)


@dataclass
class DatasetReport:
    root: str
    split: str
    checked: int
    violations: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        head = f"{self.root}/{self.split}: {self.checked} samples checked"
        if self.ok:
            return head + ", no violations"
        lines = [head + f", {len(self.violations)} violations"]
        lines += [f"  {sid}: {msg}" for sid, msg in self.violations]
        return "\n".join(lines)


def validate_dataset(root: str | Path, split: str) -> DatasetReport:
    """Check every sample of a split against the format contract."""
    manifest = load_manifest(root, split)
    report = DatasetReport(root=str(root), split=split, checked=len(manifest.ids))
    for sid in manifest.ids:
        try:
            image = load_image(manifest.image_path(sid))
        except (OSError, ValueError) as exc:
            report.violations.append((sid, f"unreadable image: {exc}"))
            continue
        if manifest.split == "train" or manifest.with_scribbles:
            spath = manifest.scribble_path(sid)
            if not spath.is_file():
                if manifest.split == "train":
                    report.violations.append((sid, "missing scribble"))
            else:
                try:
                    scr = decode_scribble(spath)
                except (OSError, ValueError) as exc:
                    report.violations.append((sid, f"bad scribble: {exc}"))
                else:
                    if scr.shape != image.shape[:2]:
                        report.violations.append(
                            (sid, f"scribble size {scr.shape} != image {image.shape[:2]}")
                        )
                    else:
                        if not (scr == FOREGROUND).any():
                            report.violations.append((sid, "scribble has no foreground pixels"))
                        if not (scr == BACKGROUND).any():
                            report.violations.append((sid, "scribble has no background pixels"))
        if manifest.with_gt:
            gpath = manifest.gt_path(sid)
            if not gpath.is_file():
                report.violations.append((sid, "missing gt mask"))
            else:
                try:
                    gt = load_gt(gpath)
                except OSError as exc:
                    report.violations.append((sid, f"bad gt mask: {exc}"))
                else:
                    if gt.shape != image.shape[:2]:
                        report.violations.append(
                            (sid, f"gt size {gt.shape} != image {image.shape[:2]}")
                        )
    return report


def atomic_write_bytes(path: str | Path, payload: bytes) -> None:
    """Write via a sibling temp file and rename, so readers never see a torn file."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)
