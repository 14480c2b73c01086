"""Network building blocks for all three stages, scaled to desk size.

Generators follow the dense-block recipe (BN + ReLU + 3x3 conv + dropout,
1x1-conv transitions with 2x2 pooling); discriminators use four downsampling
layers with instance norm and leaky ReLU. Everything runs comfortably on CPU
at 64x48.
"""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F


def init_weights(module: nn.Module, std: float = 0.02) -> None:
    """Gaussian init, the usual choice for small GANs."""
    for m in module.modules():
        if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
            nn.init.normal_(m.weight, 0.0, std)
            if m.bias is not None:
                nn.init.zeros_(m.bias)


class DenseLayer(nn.Module):
    def __init__(self, in_ch: int, growth: int, dropout: float):
        super().__init__()
        self.bn = nn.BatchNorm2d(in_ch)
        self.conv = nn.Conv2d(in_ch, growth, 3, padding=1)
        self.drop = nn.Dropout2d(dropout)

    def forward(self, x):
        y = self.drop(self.conv(F.relu(self.bn(x))))
        return torch.cat([x, y], dim=1)


class DenseBlock(nn.Module):
    def __init__(self, in_ch: int, growth: int, layers: int, dropout: float):
        super().__init__()
        self.layers = nn.Sequential(
            *[DenseLayer(in_ch + i * growth, growth, dropout) for i in range(layers)]
        )
        self.out_channels = in_ch + layers * growth

    def forward(self, x):
        return self.layers(x)


class TransitionDown(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, dropout: float):
        super().__init__()
        self.bn = nn.BatchNorm2d(in_ch)
        self.conv = nn.Conv2d(in_ch, out_ch, 1)
        self.drop = nn.Dropout2d(dropout)
        self.pool = nn.AvgPool2d(2)

    def forward(self, x):
        return self.pool(self.drop(self.conv(F.relu(self.bn(x)))))


class DenseEncoderDecoder(nn.Module):
    """Dense-block encoder/decoder with skip connections.

    Output spatial size equals input size; inputs are padded internally to a
    multiple of 2**n_down and cropped back.
    """

    def __init__(
        self,
        in_ch: int,
        out_ch: int,
        base: int = 16,
        growth: int = 12,
        block_layers: int = 3,
        n_down: int = 2,
        dropout: float = 0.1,
    ):
        super().__init__()
        self.n_down = n_down
        self.stem = nn.Conv2d(in_ch, base, 3, padding=1)
        ch = base
        self.down_blocks = nn.ModuleList()
        self.transitions = nn.ModuleList()
        skip_chs = []
        for _ in range(n_down):
            block = DenseBlock(ch, growth, block_layers, dropout)
            self.down_blocks.append(block)
            skip_chs.append(block.out_channels)
            self.transitions.append(TransitionDown(block.out_channels, block.out_channels // 2, dropout))
            ch = block.out_channels // 2
        self.bottleneck = DenseBlock(ch, growth, block_layers, dropout)
        ch = self.bottleneck.out_channels
        self.up_convs = nn.ModuleList()
        self.up_blocks = nn.ModuleList()
        for skip_ch in reversed(skip_chs):
            self.up_convs.append(nn.Conv2d(ch, skip_ch, 3, padding=1))
            self.up_blocks.append(nn.Conv2d(skip_ch * 2, skip_ch, 3, padding=1))
            ch = skip_ch
        self.head = nn.Conv2d(ch, out_ch, 1)
        init_weights(self)

    def forward(self, x):
        h, w = x.shape[-2:]
        mult = 2**self.n_down
        pad_h = (-h) % mult
        pad_w = (-w) % mult
        if pad_h or pad_w:
            x = F.pad(x, (0, pad_w, 0, pad_h), mode="replicate")
        x = self.stem(x)
        skips = []
        for block, trans in zip(self.down_blocks, self.transitions):
            x = block(x)
            skips.append(x)
            x = trans(x)
        x = self.bottleneck(x)
        for up_conv, up_block, skip in zip(self.up_convs, self.up_blocks, reversed(skips)):
            x = F.interpolate(x, size=skip.shape[-2:], mode="bilinear", align_corners=False)
            x = F.relu(up_conv(x))
            x = F.relu(up_block(torch.cat([x, skip], dim=1)))
        x = self.head(x)
        return x[..., :h, :w]


class UNetSmall(nn.Module):
    """Compact U-Net used for contour warping and try-on synthesis."""

    def __init__(self, in_ch: int, out_ch: int, base: int = 24, depth: int = 3):
        super().__init__()
        self.depth = depth
        chs = [base * (2**i) for i in range(depth)]
        self.enc = nn.ModuleList()
        prev = in_ch
        for c in chs:
            self.enc.append(
                nn.Sequential(
                    nn.Conv2d(prev, c, 3, padding=1),
                    nn.InstanceNorm2d(c, affine=True),
                    nn.LeakyReLU(0.2, inplace=True),
                    nn.Conv2d(c, c, 3, padding=1),
                    nn.InstanceNorm2d(c, affine=True),
                    nn.LeakyReLU(0.2, inplace=True),
                )
            )
            prev = c
        self.dec = nn.ModuleList()
        for c_out, c_in in zip(reversed(chs[:-1]), reversed(chs[1:])):
            self.dec.append(
                nn.Sequential(
                    nn.Conv2d(c_in + c_out, c_out, 3, padding=1),
                    nn.InstanceNorm2d(c_out, affine=True),
                    nn.LeakyReLU(0.2, inplace=True),
                    nn.Conv2d(c_out, c_out, 3, padding=1),
                    nn.InstanceNorm2d(c_out, affine=True),
                    nn.LeakyReLU(0.2, inplace=True),
                )
            )
        self.head = nn.Conv2d(chs[0], out_ch, 1)
        init_weights(self)

    def forward(self, x):
        h, w = x.shape[-2:]
        mult = 2 ** (self.depth - 1)
        pad_h = (-h) % mult
        pad_w = (-w) % mult
        if pad_h or pad_w:
            x = F.pad(x, (0, pad_w, 0, pad_h), mode="replicate")
        feats = []
        for i, enc in enumerate(self.enc):
            x = enc(x)
            if i < self.depth - 1:
                feats.append(x)
                x = F.avg_pool2d(x, 2)
        for dec, skip in zip(self.dec, reversed(feats)):
            x = F.interpolate(x, size=skip.shape[-2:], mode="bilinear", align_corners=False)
            x = dec(torch.cat([x, skip], dim=1))
        x = self.head(x)
        return x[..., :h, :w]


class ResidualBlock(nn.Module):
    def __init__(self, ch: int):
        super().__init__()
        self.conv1 = nn.Conv2d(ch, ch, 3, padding=1)
        self.conv2 = nn.Conv2d(ch, ch, 3, padding=1)
        self.norm1 = nn.InstanceNorm2d(ch, affine=True)
        self.norm2 = nn.InstanceNorm2d(ch, affine=True)

    def forward(self, x):
        y = F.relu(self.norm1(self.conv1(x)))
        y = self.norm2(self.conv2(y))
        return F.relu(x + y)


class CorrespondenceNet(nn.Module):
    """Six-block residual net: warped mask -> per-texel garment coordinates.

    The mask is concatenated with normalized y/x coordinate channels; without
    them a purely convolutional net has no absolute-position signal and every
    texel inside a flat mask region would predict the same coordinates.
    Outputs pass through tanh and rescale to [0, size-1], so they are always
    inside the garment image regardless of training state.
    """

    def __init__(
        self,
        grid: int = 32,
        image_height: int = 64,
        image_width: int = 48,
        width: int = 32,
        blocks: int = 6,
    ):
        super().__init__()
        self.grid = grid
        self.image_height = image_height
        self.image_width = image_width
        yy = torch.linspace(-1.0, 1.0, image_height).view(1, 1, image_height, 1)
        xx = torch.linspace(-1.0, 1.0, image_width).view(1, 1, 1, image_width)
        coords = torch.cat(
            [yy.expand(1, 1, image_height, image_width), xx.expand(1, 1, image_height, image_width)],
            dim=1,
        )
        self.register_buffer("input_coords", coords, persistent=False)
        self.stem = nn.Sequential(
            nn.Conv2d(3, width, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(width, width, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
        )
        self.blocks = nn.Sequential(*[ResidualBlock(width) for _ in range(blocks)])
        self.head = nn.Conv2d(width, 2, 3, padding=1)
        init_weights(self)

    def forward(self, mask: torch.Tensor) -> torch.Tensor:
        """mask: (B, 1, H, W) -> coords (B, 2, K, K): channel 0 = y, 1 = x."""
        b = mask.shape[0]
        x = torch.cat([mask, self.input_coords.expand(b, -1, -1, -1)], dim=1)
        x = self.stem(x)
        x = self.blocks(x)
        x = F.interpolate(x, size=(self.grid, self.grid), mode="bilinear", align_corners=False)
        t = torch.tanh(self.head(x))
        y = (t[:, 0] + 1) * 0.5 * (self.image_height - 1)
        xcoord = (t[:, 1] + 1) * 0.5 * (self.image_width - 1)
        return torch.stack([y, xcoord], dim=1)


class PatchDiscriminator(nn.Module):
    """Four downsampling conv layers, instance norm, leaky ReLU.

    Returns per-patch probabilities clamped to the open interval (0, 1).
    """

    SCORE_EPS = 1e-6

    def __init__(self, in_ch: int, base: int = 16):
        super().__init__()
        layers = [nn.Conv2d(in_ch, base, 4, stride=2, padding=1), nn.LeakyReLU(0.2, inplace=True)]
        ch = base
        for _ in range(3):
            nxt = min(ch * 2, 128)
            layers += [
                nn.Conv2d(ch, nxt, 4, stride=2, padding=1),
                nn.InstanceNorm2d(nxt, affine=True),
                nn.LeakyReLU(0.2, inplace=True),
            ]
            ch = nxt
        layers.append(nn.Conv2d(ch, 1, 3, padding=1))
        self.net = nn.Sequential(*layers)
        init_weights(self)

    def forward(self, *conditioned: torch.Tensor) -> torch.Tensor:
        x = torch.cat(conditioned, dim=1)
        h, w = x.shape[-2:]
        pad_h = (-h) % 16
        pad_w = (-w) % 16
        if pad_h or pad_w:
            x = F.pad(x, (0, pad_w, 0, pad_h), mode="replicate")
        logits = self.net(x)
        return torch.sigmoid(logits).clamp(self.SCORE_EPS, 1 - self.SCORE_EPS)
