from .config import (
    TrainConfig,
    config_hash,
    dump_config,
    load_config,
    parse_config,
    validate_train_config,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .schedule import triangle_lr
from .seeding import seed_everything, stream_rng
from .train import TrainingDiverged, train
from .infer import run_inference
from .server import AnnotationServer, make_server

__all__ = [
    "TrainConfig",
    "config_hash",
    "dump_config",
    "load_config",
    "parse_config",
    "validate_train_config",
    "load_checkpoint",
    "save_checkpoint",
    "triangle_lr",
    "seed_everything",
    "stream_rng",
    "TrainingDiverged",
    "train",
    "run_inference",
    "AnnotationServer",
    "make_server",
]
