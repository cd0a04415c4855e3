from .blocks import (
    AxisGate,
    ContrastExtractor,
    GlobalContextPyramid,
    LocalContextContrast,
    SemanticRelation,
)
from .model import (
    CRNet,
    CRNetConfig,
    NetworkOutputs,
    ResNetBackbone,
    build_crnet,
)

__all__ = [
    "AxisGate",
    "ContrastExtractor",
    "GlobalContextPyramid",
    "LocalContextContrast",
    "SemanticRelation",
    "CRNet",
    "CRNetConfig",
    "NetworkOutputs",
    "ResNetBackbone",
    "build_crnet",
]
