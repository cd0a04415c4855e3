from .core import (
    UNLABELED,
    FOREGROUND,
    BACKGROUND,
    Sample,
    DatasetManifest,
    DatasetReport,
    check_image,
    check_scribble,
    decode_scribble,
    encode_scribble,
    load_image,
    load_gt,
    load_manifest,
    load_sample,
    save_image,
    validate_dataset,
)
from .transforms import hflip_pair, resize_image, resize_pair, resize_scribble
from .synthetic import save_synthetic, synth_generate

__all__ = [
    "UNLABELED",
    "FOREGROUND",
    "BACKGROUND",
    "Sample",
    "DatasetManifest",
    "DatasetReport",
    "check_image",
    "check_scribble",
    "decode_scribble",
    "encode_scribble",
    "load_image",
    "load_gt",
    "load_manifest",
    "load_sample",
    "save_image",
    "validate_dataset",
    "hflip_pair",
    "resize_image",
    "resize_pair",
    "resize_scribble",
    "save_synthetic",
    "synth_generate",
]
