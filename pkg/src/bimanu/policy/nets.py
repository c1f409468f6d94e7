"""Observation encoders and the conditional 1-D convolutional denoiser.

Default widths: proprioception and touch go through two fully connected
layers (hidden 256, output 64, ReLU); each camera has its own residual
convolutional encoder with GroupNorm in place of BatchNorm and a 32-wide
output head; no weight sharing across cameras. The denoiser is a 1-D conv
encoder-decoder over the 16-step action axis, conditioned on the
concatenated observation features plus a sinusoidal diffusion-step
embedding via feature-wise affine (FiLM) modulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch
import torch.nn as nn


@dataclass(frozen=True)
class EncoderConfig:
    proprio_dim: int = 24
    touch_dim: int = 60
    mlp_hidden: int = 256
    mlp_out: int = 64
    vision_out: int = 32
    vision_channels: tuple[int, ...] = (8, 16, 16, 32)
    vision_groups: int = 8
    image_channels: int = 3  # 4 with depth


@dataclass(frozen=True)
class DenoiserConfig:
    horizon: int = 16
    action_dim: int = 24
    channels: tuple[int, ...] = (64, 128)
    kernel: int = 3
    groups: int = 8
    step_embed_dim: int = 64


class MlpEncoder(nn.Module):
    """Two fully connected layers with ReLU, for proprio and touch."""

    def __init__(self, in_dim: int, hidden: int, out_dim: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(in_dim, hidden), nn.ReLU(), nn.Linear(hidden, out_dim)
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class ResidualBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int, stride: int, groups: int):
        super().__init__()
        g_in = math.gcd(groups, c_out)
        self.conv1 = nn.Conv2d(c_in, c_out, 3, stride=stride, padding=1, bias=False)
        self.norm1 = nn.GroupNorm(g_in, c_out)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, padding=1, bias=False)
        self.norm2 = nn.GroupNorm(g_in, c_out)
        self.act = nn.ReLU()
        if stride != 1 or c_in != c_out:
            self.skip = nn.Sequential(
                nn.Conv2d(c_in, c_out, 1, stride=stride, bias=False),
                nn.GroupNorm(g_in, c_out),
            )
        else:
            self.skip = nn.Identity()

    def forward(self, x):
        h = self.act(self.norm1(self.conv1(x)))
        h = self.norm2(self.conv2(h))
        return self.act(h + self.skip(x))


class VisionEncoder(nn.Module):
    """Residual conv encoder, GroupNorm throughout, global pool + FC head.

    The desk-scale default is one residual block per stage; full_depth=True
    doubles up the blocks for the deeper 18-layer-style variant.
    """

    def __init__(self, cfg: EncoderConfig, full_depth: bool = False):
        super().__init__()
        c0 = cfg.vision_channels[0]
        # stride-2 stem keeps the single-core training budget reasonable
        self.stem = nn.Sequential(
            nn.Conv2d(cfg.image_channels, c0, 3, stride=2, padding=1, bias=False),
            nn.GroupNorm(math.gcd(cfg.vision_groups, c0), c0),
            nn.ReLU(),
        )
        blocks = []
        c_prev = c0
        for i, c in enumerate(cfg.vision_channels):
            stride = 2 if i > 0 else 1
            blocks.append(ResidualBlock(c_prev, c, stride, cfg.vision_groups))
            if full_depth:
                blocks.append(ResidualBlock(c, c, 1, cfg.vision_groups))
            c_prev = c
        self.blocks = nn.Sequential(*blocks)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.head = nn.Linear(c_prev, cfg.vision_out)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.blocks(self.stem(x))
        return self.head(self.pool(h).flatten(1))


class SinusoidalStepEmbedding(nn.Module):
    def __init__(self, dim: int):
        super().__init__()
        if dim % 2 != 0:
            raise ValueError("embedding dim must be even")
        self.dim = dim

    def forward(self, t: torch.Tensor) -> torch.Tensor:
        half = self.dim // 2
        freqs = torch.exp(
            -math.log(10000.0)
            * torch.arange(half, dtype=t.dtype, device=t.device)
            / max(half - 1, 1)
        )
        args = t[:, None].to(freqs.dtype) * freqs[None, :]
        return torch.cat([torch.sin(args), torch.cos(args)], dim=-1)


class FilmConvBlock(nn.Module):
    """Conv1d + GroupNorm + Mish with per-channel affine modulation from the
    conditioning vector."""

    def __init__(self, c_in: int, c_out: int, kernel: int, groups: int, cond_dim: int):
        super().__init__()
        self.conv = nn.Conv1d(c_in, c_out, kernel, padding=kernel // 2)
        self.norm = nn.GroupNorm(math.gcd(groups, c_out), c_out)
        self.act = nn.Mish()
        self.film = nn.Linear(cond_dim, 2 * c_out)

    def forward(self, x: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        h = self.norm(self.conv(x))
        scale, bias = self.film(cond).chunk(2, dim=-1)
        h = h * (1.0 + scale[:, :, None]) + bias[:, :, None]
        return self.act(h)


class Denoiser(nn.Module):
    """Noise predictor over (B, horizon, action_dim) chunks.

    Encoder-decoder over the time axis with stride-2 down/up sampling and
    skip connections; every block is FiLM-conditioned on the observation
    features concatenated with the diffusion-step embedding.
    """

    def __init__(self, cfg: DenoiserConfig, obs_feature_dim: int):
        super().__init__()
        self.cfg = cfg
        self.step_embed = nn.Sequential(
            SinusoidalStepEmbedding(cfg.step_embed_dim),
            nn.Linear(cfg.step_embed_dim, cfg.step_embed_dim),
            nn.Mish(),
        )
        cond_dim = obs_feature_dim + cfg.step_embed_dim
        self.cond_dim = cond_dim
        chans = list(cfg.channels)
        self.down = nn.ModuleList()
        self.downsample = nn.ModuleList()
        c_prev = cfg.action_dim
        for c in chans:
            self.down.append(FilmConvBlock(c_prev, c, cfg.kernel, cfg.groups, cond_dim))
            self.downsample.append(nn.Conv1d(c, c, 3, stride=2, padding=1))
            c_prev = c
        self.mid = FilmConvBlock(c_prev, c_prev, cfg.kernel, cfg.groups, cond_dim)
        self.up = nn.ModuleList()
        self.upsample = nn.ModuleList()
        for c in reversed(chans):
            self.upsample.append(nn.ConvTranspose1d(c_prev, c, 4, stride=2, padding=1))
            self.up.append(FilmConvBlock(2 * c, c, cfg.kernel, cfg.groups, cond_dim))
            c_prev = c
        self.final = nn.Conv1d(c_prev, cfg.action_dim, 1)

    def forward(self, x: torch.Tensor, t: torch.Tensor, obs_feat: torch.Tensor) -> torch.Tensor:
        """x: (B, horizon, action_dim); t: (B,) step indices; returns the
        predicted noise with the same shape as x."""
        cond = torch.cat([obs_feat, self.step_embed(t.to(x.dtype))], dim=-1)
        h = x.transpose(1, 2)  # (B, action_dim, horizon)
        skips = []
        for block, down in zip(self.down, self.downsample):
            h = block(h, cond)
            skips.append(h)
            h = down(h)
        h = self.mid(h, cond)
        for up, block, skip in zip(self.upsample, self.up, reversed(skips)):
            h = up(h)
            h = block(torch.cat([h, skip], dim=1), cond)
        return self.final(h).transpose(1, 2)
