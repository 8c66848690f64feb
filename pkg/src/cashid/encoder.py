"""Signal encoder backbones, embedding enhancer and contrastive losses."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .signals import IQSignal

BACKBONES = ("desk_small", "paper_cvcnn")


@dataclass(frozen=True)
class EncoderConfig:
    """Architecture of the embedding extractor and its enhancer head.

    input_length: number of IQ samples per training/inference slice.
    embedding_dim: width of the embedding the hasher and identifier consume.
    enhancer_dim: width of the enhanced space the contrastive loss acts on.
    """

    backbone: str = "paper_cvcnn"
    input_length: int = 4000
    embedding_dim: int = 768
    enhancer_dim: int = 12
    enhancer_hidden: Sequence[int] = (256, 128)
    normalize_enhanced: bool = True

    def __post_init__(self):
        if self.backbone not in BACKBONES:
            raise ValueError(f"unknown backbone {self.backbone!r}")
        if min(self.input_length, self.embedding_dim, self.enhancer_dim) < 1:
            raise ValueError("input_length, embedding_dim, enhancer_dim must be >= 1")
        min_length = 64 if self.backbone == "paper_cvcnn" else 8
        if self.input_length < min_length:
            raise ValueError(
                f"backbone {self.backbone!r} needs input_length >= {min_length}"
            )
        if len(self.enhancer_hidden) != 2 or min(self.enhancer_hidden) < 1:
            raise ValueError("enhancer_hidden must be two positive widths")
        object.__setattr__(self, "enhancer_hidden", tuple(self.enhancer_hidden))

    @classmethod
    def paper(cls) -> "EncoderConfig":
        return cls()

    @classmethod
    def desk(cls) -> "EncoderConfig":
        """Small configuration for fast CPU experiments."""
        return cls(
            backbone="desk_small",
            input_length=256,
            embedding_dim=128,
            enhancer_dim=12,
            enhancer_hidden=(128, 64),
        )


class ComplexConv1d(nn.Module):
    """Complex convolution on real tensors laid out [re channels, im channels]."""

    def __init__(self, in_channels, out_channels, kernel_size, padding=0):
        super().__init__()
        self.in_channels = in_channels
        self.conv_re = nn.Conv1d(in_channels, out_channels, kernel_size, padding=padding)
        self.conv_im = nn.Conv1d(in_channels, out_channels, kernel_size, padding=padding)

    def forward(self, x):
        xr, xi = x[:, : self.in_channels], x[:, self.in_channels :]
        yr = self.conv_re(xr) - self.conv_im(xi)
        yi = self.conv_re(xi) + self.conv_im(xr)
        return torch.cat([yr, yi], dim=1)


class CvcnnEncoder(nn.Module):
    """Nine-layer complex-valued CNN over raw IQ slices."""

    CHANNELS = (1, 8, 8, 16, 16, 32, 32, 64, 64, 64)
    POOL_AFTER = frozenset({1, 2, 3, 4, 5, 6})

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.input_length = cfg.input_length
        self.convs = nn.ModuleList(
            ComplexConv1d(self.CHANNELS[i], self.CHANNELS[i + 1], 5, padding=2)
            for i in range(9)
        )
        self.head = nn.Linear(self.CHANNELS[-1], cfg.embedding_dim)

    def forward(self, x):
        for i, conv in enumerate(self.convs, start=1):
            x = F.relu(conv(x))
            if i in self.POOL_AFTER:
                x = F.max_pool1d(x, 2)
        half = x.shape[1] // 2
        magnitude = torch.sqrt(x[:, :half] ** 2 + x[:, half:] ** 2 + 1e-12)
        pooled = magnitude.mean(dim=2)
        return self.head(pooled)


class DeskEncoder(nn.Module):
    """Compact real-valued CNN for CPU-scale experiments."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.input_length = cfg.input_length
        self.features = nn.Sequential(
            nn.Conv1d(2, 32, 7, stride=2, padding=3),
            nn.BatchNorm1d(32),
            nn.ReLU(),
            nn.Conv1d(32, 64, 5, stride=2, padding=2),
            nn.BatchNorm1d(64),
            nn.ReLU(),
            nn.Conv1d(64, 128, 3, stride=2, padding=1),
            nn.BatchNorm1d(128),
            nn.ReLU(),
        )
        self.head = nn.Linear(128, cfg.embedding_dim)

    def forward(self, x):
        x = self.features(x)
        return self.head(x.mean(dim=2))


class Enhancer(nn.Module):
    """MLP mapping embeddings into the space the contrastive loss acts on."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        h1, h2 = cfg.enhancer_hidden
        self.net = nn.Sequential(
            nn.Linear(cfg.embedding_dim, h1),
            nn.ReLU(),
            nn.Linear(h1, h2),
            nn.ReLU(),
            nn.Linear(h2, cfg.enhancer_dim),
        )
        self.normalize = cfg.normalize_enhanced

    def forward(self, e):
        out = self.net(e)
        if self.normalize:
            out = F.normalize(out, dim=-1)
        return out


def build_encoder(cfg: EncoderConfig, dtype=torch.float64) -> nn.Module:
    encoder = DeskEncoder(cfg) if cfg.backbone == "desk_small" else CvcnnEncoder(cfg)
    return encoder.to(dtype)


def build_enhancer(cfg: EncoderConfig, dtype=torch.float64) -> nn.Module:
    return Enhancer(cfg).to(dtype)


def signals_to_tensor(signals, input_length: int, dtype=torch.float64) -> torch.Tensor:
    """Stack IQ signals into a (batch, 2, input_length) real tensor."""
    arrays = []
    for sig in signals:
        if sig.length != input_length:
            raise ValueError(
                f"signal length {sig.length} does not match encoder input {input_length}"
            )
        arrays.append(np.stack([sig.samples.real, sig.samples.imag]))
    stacked = torch.from_numpy(np.stack(arrays))
    return stacked.to(dtype)


def extract_embedding(encoder: nn.Module, batch: torch.Tensor) -> torch.Tensor:
    """Run the encoder on a (batch, 2, length) tensor of IQ slices."""
    if batch.ndim != 3 or batch.shape[1] != 2:
        raise ValueError(f"expected (batch, 2, length) input, got {tuple(batch.shape)}")
    return encoder(batch)


def supcon_loss(features: torch.Tensor, labels: torch.Tensor,
                temperature: float = 1.0) -> torch.Tensor:
    """Supervised contrastive loss, summed over anchors.

    Each anchor p averages -log softmax similarity over its positives
    I(p) (same label, other views); the denominator runs over every
    other sample in the batch.  Raises ValueError if any anchor has no
    positive.
    """
    if features.ndim != 2 or features.shape[0] < 2:
        raise ValueError("features must be (m, d) with m >= 2")
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    m = features.shape[0]
    labels = labels.reshape(-1)
    if labels.shape[0] != m:
        raise ValueError("labels must match the batch size")

    sim = features @ features.T / temperature
    eye = torch.eye(m, dtype=torch.bool, device=features.device)
    pos_mask = (labels.unsqueeze(0) == labels.unsqueeze(1)) & ~eye
    pos_counts = pos_mask.sum(dim=1)
    if bool((pos_counts == 0).any()):
        raise ValueError("every anchor needs at least one positive in the batch")

    # max-shift keeps exp() in range without changing the softmax
    shifted = sim - sim.max(dim=1, keepdim=True).values.detach()
    denom = torch.logsumexp(shifted.masked_fill(eye, float("-inf")), dim=1)
    log_prob = shifted - denom.unsqueeze(1)
    per_anchor = -(log_prob * pos_mask).sum(dim=1) / pos_counts
    return per_anchor.sum()


def instance_contrastive_loss(features: torch.Tensor,
                              instance_ids: torch.Tensor,
                              temperature: float = 1.0) -> torch.Tensor:
    """Self-supervised variant: the only positive is the other view of
    the same signal, so every instance id must appear exactly twice."""
    ids = instance_ids.reshape(-1)
    _, counts = torch.unique(ids, return_counts=True)
    if bool((counts != 2).any()):
        raise ValueError("each instance id must appear exactly twice")
    return supcon_loss(features, ids, temperature)
