"""Building blocks: axis attention, contrast extraction, semantic relation,
and the global pyramid context."""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F


class ConvBN(nn.Sequential):
    def __init__(self, cin, cout, k, stride=1, padding=0, dilation=1, padding_mode="zeros"):
        super().__init__(
            nn.Conv2d(
                cin, cout, k,
                stride=stride, padding=padding, dilation=dilation,
                padding_mode=padding_mode, bias=False,
            ),
            nn.BatchNorm2d(cout),
        )


class ConvBNAct(nn.Sequential):
    def __init__(self, cin, cout, k, act, stride=1, padding=0, dilation=1, padding_mode="zeros"):
        super().__init__(
            nn.Conv2d(
                cin, cout, k,
                stride=stride, padding=padding, dilation=dilation,
                padding_mode=padding_mode, bias=False,
            ),
            nn.BatchNorm2d(cout),
            act,
        )


class AxisGate(nn.Module):
    """Cross-axis gate: per-row and per-column pooled descriptors produce two
    sigmoid gates that modulate the input, so |out| <= |in| elementwise."""

    def __init__(self, channels: int):
        super().__init__()
        self.pool_h = nn.AdaptiveAvgPool2d((None, 1))
        self.pool_w = nn.AdaptiveAvgPool2d((1, None))
        self.mix = ConvBNAct(channels, channels, 1, nn.SiLU())
        self.gate_h = nn.Conv2d(channels, channels, 1)
        self.gate_w = nn.Conv2d(channels, channels, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        _, _, h, w = x.shape
        ah = self.pool_h(x)
        aw = self.pool_w(x).permute(0, 1, 3, 2)
        mid = self.mix(torch.cat([ah, aw], dim=2))
        mid_h, mid_w = torch.split(mid, [h, w], dim=2)
        gh = torch.sigmoid(self.gate_h(mid_h))
        gw = torch.sigmoid(self.gate_w(mid_w.permute(0, 1, 3, 2)))
        return x * gh * gw


class ContrastExtractor(nn.Module):
    """Local minus dilated-context response, each gated, then BN + ReLU.

    Replicate padding keeps constant maps constant, so with shared weights a
    flat input yields an exactly zero contrast."""

    def __init__(self, channels: int, context_dilation: int):
        super().__init__()
        self.local = nn.Conv2d(channels, channels, 3, padding=1, padding_mode="replicate", bias=False)
        self.context = nn.Conv2d(
            channels, channels, 3,
            padding=context_dilation, dilation=context_dilation,
            padding_mode="replicate", bias=False,
        )
        self.gate_local = AxisGate(channels)
        self.gate_context = AxisGate(channels)
        self.bn = nn.BatchNorm2d(channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        f_local = self.gate_local(self.local(x))
        f_context = self.gate_context(self.context(x))
        return F.relu(self.bn(f_local - f_context))


class LocalContextContrast(nn.Module):
    """Squeeze to the working width, then two contrast extractors at different
    context dilations, concatenated: output has 2x the working width."""

    def __init__(self, in_channels: int, channels: int = 64, dilations: tuple[int, int] = (4, 8)):
        super().__init__()
        self.squeeze = ConvBNAct(in_channels, channels, 1, nn.ReLU(inplace=True))
        self.fine = ContrastExtractor(channels, dilations[0])
        self.coarse = ContrastExtractor(channels, dilations[1])

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        low = self.squeeze(x)
        return torch.cat([self.fine(low), self.coarse(low)], dim=1)


def _branch(cin: int, cout: int, specs: list[tuple[int, int, int]]) -> nn.Sequential:
    """Chain of conv+BN with GELU between convs but not after the last one.

    specs holds (kernel, padding, dilation) per conv; first conv maps cin->cout.
    """
    layers: list[nn.Module] = []
    c = cin
    for i, (k, p, d) in enumerate(specs):
        if i > 0:
            layers.append(nn.GELU())
        layers.append(ConvBN(c, cout, k, padding=p, dilation=d))
        c = cout
    return nn.Sequential(*layers)


class SemanticRelation(nn.Module):
    """Four receptive-field branches, fused and added to a projected residual."""

    def __init__(self, in_channels: int, channels: int = 64):
        super().__init__()
        self.branches = nn.ModuleList([
            _branch(in_channels, channels, [(1, 0, 1)]),
            _branch(in_channels, channels, [(1, 0, 1), (7, 3, 1), (3, 7, 7)]),
            _branch(in_channels, channels, [(1, 0, 1), (7, 3, 1), (7, 3, 1), (3, 7, 7)]),
            _branch(in_channels, channels, [(1, 0, 1), (7, 3, 1), (7, 3, 1), (3, 7, 7)]),
        ])
        self.fuse = ConvBN(4 * channels, channels, 3, padding=1)
        self.residual = nn.Conv2d(in_channels, channels, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        mid = self.fuse(torch.cat([b(x) for b in self.branches], dim=1))
        return F.gelu(mid + self.residual(x))


class GlobalContextPyramid(nn.Module):
    """Pyramid pooling with GELU: four adaptive pool levels squeezed to C/4,
    upsampled, concatenated with the input and projected."""

    POOL_SIZES = (1, 2, 3, 6)

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        level_c = in_channels // 4
        self.levels = nn.ModuleList([
            nn.Sequential(
                nn.AdaptiveAvgPool2d(size),
                ConvBNAct(in_channels, level_c, 1, nn.GELU()),
            )
            for size in self.POOL_SIZES
        ])
        self.project = ConvBNAct(in_channels + 4 * level_c, out_channels, 1, nn.GELU())

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        size = x.shape[-2:]
        feats = [x] + [
            F.interpolate(level(x), size=size, mode="bilinear", align_corners=False)
            for level in self.levels
        ]
        return self.project(torch.cat(feats, dim=1))
