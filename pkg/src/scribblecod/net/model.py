"""The segmentation network: ResNet-50 trunk, contrast and semantic-relation
branches, pyramid global context, and a five-head decoder."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F
from torchvision.models import resnet50

from .blocks import (
    ConvBNAct,
    GlobalContextPyramid,
    LocalContextContrast,
    SemanticRelation,
)

MIN_INPUT = 32

# channel widths of the four trunk stages
STAGE_CHANNELS = (256, 512, 1024, 2048)

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass
class CRNetConfig:
    decoder_channels: int = 64
    dilations: tuple[int, int] = (4, 8)
    use_age: bool = True
    use_lcc: bool = True
    use_lsr: bool = True
    pretrained_backbone: str | None = None

    def __post_init__(self) -> None:
        if self.decoder_channels < 1:
            raise ValueError(f"decoder_channels must be positive, got {self.decoder_channels}")
        if len(self.dilations) != 2 or any(d < 1 for d in self.dilations):
            raise ValueError(f"dilations must be two positive ints, got {self.dilations}")


@dataclass
class NetworkOutputs:
    """Five probability maps plus the pre-head feature, all at input size."""

    out0: torch.Tensor
    out1: torch.Tensor
    out2: torch.Tensor
    out3: torch.Tensor
    out4: torch.Tensor
    feature: torch.Tensor

    def maps(self) -> tuple[torch.Tensor, ...]:
        return (self.out0, self.out1, self.out2, self.out3, self.out4)


class ResNetBackbone(nn.Module):
    """ResNet-50 trunk exposing the four stage features at strides 4/8/16/32."""

    def __init__(self):
        super().__init__()
        net = resnet50(weights=None)
        self.stem = nn.Sequential(net.conv1, net.bn1, net.relu, net.maxpool)
        self.layer1 = net.layer1
        self.layer2 = net.layer2
        self.layer3 = net.layer3
        self.layer4 = net.layer4

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, ...]:
        x = self.stem(x)
        f1 = self.layer1(x)
        f2 = self.layer2(f1)
        f3 = self.layer3(f2)
        f4 = self.layer4(f3)
        return f1, f2, f3, f4

    def load_pretrained(self, path: str) -> tuple[list[str], list[str]]:
        """Load a standard-format classification checkpoint.

        Returns (missing, unexpected) key lists; a complete checkpoint leaves
        missing empty. Classifier weights are ignored.
        """
        state = torch.load(path, map_location="cpu", weights_only=True)
        if isinstance(state, dict) and "state_dict" in state:
            state = state["state_dict"]
        remap = {}
        for key, value in state.items():
            if key.startswith("fc."):
                continue
            if key.startswith("conv1."):
                remap["stem.0." + key[len("conv1."):]] = value
            elif key.startswith("bn1."):
                remap["stem.1." + key[len("bn1."):]] = value
            else:
                remap[key] = value
        result = self.load_state_dict(remap, strict=False)
        return list(result.missing_keys), list(result.unexpected_keys)


def _up_to(x: torch.Tensor, size: tuple[int, int]) -> torch.Tensor:
    if tuple(x.shape[-2:]) == tuple(size):
        return x
    return F.interpolate(x, size=size, mode="bilinear", align_corners=False)


class CRNet(nn.Module):
    """Contrast/relation network with one main and four side outputs.

    Takes (B, 3, H, W) RGB in [0, 1], H and W at least 32. Low stages feed
    contrast branches, high stages feed semantic-relation branches, and the
    deepest stage additionally feeds the global pyramid; the decoder fuses
    top-down into a shared 64-channel feature.
    """

    def __init__(self, config: CRNetConfig | None = None):
        super().__init__()
        cfg = config if config is not None else CRNetConfig()
        self.config = cfg
        self.backbone = ResNetBackbone()
        c = cfg.decoder_channels
        cc = 2 * c
        relu = lambda: nn.ReLU(inplace=True)  # noqa: E731
        if cfg.use_lcc:
            self.contrast0 = LocalContextContrast(STAGE_CHANNELS[0], c, cfg.dilations)
            self.contrast1 = LocalContextContrast(STAGE_CHANNELS[1], c, cfg.dilations)
        else:
            self.contrast0 = ConvBNAct(STAGE_CHANNELS[0], cc, 1, relu())
            self.contrast1 = ConvBNAct(STAGE_CHANNELS[1], cc, 1, relu())
        if cfg.use_lsr:
            self.semantic0 = SemanticRelation(STAGE_CHANNELS[2], c)
            self.semantic1 = SemanticRelation(STAGE_CHANNELS[3], c)
        else:
            self.semantic0 = ConvBNAct(STAGE_CHANNELS[2], c, 1, relu())
            self.semantic1 = ConvBNAct(STAGE_CHANNELS[3], c, 1, relu())
        if cfg.use_age:
            self.global_ctx = GlobalContextPyramid(STAGE_CHANNELS[3], c)
        else:
            self.global_ctx = ConvBNAct(STAGE_CHANNELS[3], c, 1, relu())
        self.fuse_l1 = ConvBNAct(2 * c, c, 3, relu(), padding=1)
        self.fuse_l0 = ConvBNAct(2 * c, c, 3, relu(), padding=1)
        self.fuse_out0 = ConvBNAct(cc + c, c, 3, relu(), padding=1)
        self.fuse_out1 = ConvBNAct(cc + c, c, 3, relu(), padding=1)
        self.fuse_feat = ConvBNAct(2 * c, c, 3, relu(), padding=1)
        self.head_main = nn.Conv2d(c, 1, 3, padding=1)
        self.heads_aux = nn.ModuleList([
            nn.Conv2d(cc, 1, 1),
            nn.Conv2d(cc, 1, 1),
            nn.Conv2d(c, 1, 1),
            nn.Conv2d(c, 1, 1),
        ])
        self.register_buffer("input_mean", torch.tensor(IMAGENET_MEAN).view(1, 3, 1, 1))
        self.register_buffer("input_std", torch.tensor(IMAGENET_STD).view(1, 3, 1, 1))

    def _check_input(self, image: torch.Tensor) -> None:
        if image.dim() != 4 or image.shape[1] != 3:
            raise ValueError(f"expected (B, 3, H, W) input, got {tuple(image.shape)}")
        h, w = image.shape[-2:]
        if h < MIN_INPUT or w < MIN_INPUT:
            raise ValueError(f"input sides must be at least {MIN_INPUT}, got {(h, w)}")
        if not torch.isfinite(image).all():
            raise ValueError("input contains non-finite values")
        if float(image.min()) < 0.0 or float(image.max()) > 1.0:
            raise ValueError("input values must lie in [0, 1]")

    def forward(self, image: torch.Tensor) -> NetworkOutputs:
        self._check_input(image)
        size = tuple(image.shape[-2:])
        x = (image - self.input_mean) / self.input_std
        f1, f2, f3, f4 = self.backbone(x)
        fc0 = self.contrast0(f1)
        fc1 = self.contrast1(f2)
        fs0 = self.semantic0(f3)
        fs1 = self.semantic1(f4)
        fsg = self.global_ctx(f4)
        fl1 = self.fuse_l1(torch.cat([fs1, fsg], dim=1))
        fl0 = self.fuse_l0(torch.cat([fs0, _up_to(fl1, fs0.shape[-2:])], dim=1))
        fo0 = self.fuse_out0(torch.cat([fc0, _up_to(fl0, fc0.shape[-2:])], dim=1))
        fo1 = self.fuse_out1(torch.cat([fc1, _up_to(fl1, fc1.shape[-2:])], dim=1))
        feat = self.fuse_feat(torch.cat([fo0, _up_to(fo1, fo0.shape[-2:])], dim=1))
        out0 = torch.sigmoid(_up_to(self.head_main(feat), size))
        side = [
            torch.sigmoid(_up_to(head(f), size))
            for head, f in zip(self.heads_aux, (fc0, fc1, fl0, fl1))
        ]
        return NetworkOutputs(out0, *side, feature=_up_to(feat, size))


def _init_decoder(module: nn.Module) -> None:
    if isinstance(module, nn.Conv2d):
        nn.init.kaiming_normal_(module.weight, mode="fan_out", nonlinearity="relu")
        if module.bias is not None:
            nn.init.zeros_(module.bias)
    elif isinstance(module, nn.BatchNorm2d):
        nn.init.ones_(module.weight)
        nn.init.zeros_(module.bias)


def build_crnet(config: CRNetConfig | None = None, seed: int = 0) -> CRNet:
    """Construct and initialize the network deterministically.

    The same (config, seed) pair yields bit-identical parameters. The trunk
    keeps its standard initialization (or the checkpoint named in config);
    decoder modules are re-initialized kaiming-normal.
    """
    cfg = config if config is not None else CRNetConfig()
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        model = CRNet(cfg)
        for name, module in model.named_modules():
            if name.startswith("backbone") or name == "":
                continue
            _init_decoder(module)
        if cfg.pretrained_backbone:
            missing, _ = model.backbone.load_pretrained(cfg.pretrained_backbone)
            if missing:
                raise ValueError(
                    f"backbone checkpoint {cfg.pretrained_backbone} left "
                    f"{len(missing)} tensors uninitialized: {missing[:5]}..."
                )
    return model
