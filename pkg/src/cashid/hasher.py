"""Online signal hasher: sign and confidence projectors over a shared trunk."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import torch
import torch.nn as nn

from .encoder import supcon_loss


@dataclass(frozen=True)
class HasherConfig:
    """Shape of the hashing head.

    code_length: number of bits in the hash code.
    input_dim: embedding width the trunk consumes.
    trunk_hidden: widths of the three shared fully connected layers.
    confidence_head: when False the hasher degenerates to a plain
    sign projector (the vanilla-hashing ablation).
    """

    code_length: int = 12
    input_dim: int = 768
    trunk_hidden: Sequence[int] = (512, 256, 128)
    confidence_head: bool = True

    def __post_init__(self):
        if self.code_length < 1:
            raise ValueError("code_length must be >= 1")
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if len(self.trunk_hidden) != 3 or min(self.trunk_hidden) < 1:
            raise ValueError("trunk_hidden must be three positive widths")
        object.__setattr__(self, "trunk_hidden", tuple(self.trunk_hidden))


class SoftHash(NamedTuple):
    """Relaxed hash outputs for a batch: code in (-1, 1), confidence >= 0."""

    code: torch.Tensor
    confidence: torch.Tensor


class SignalHasher(nn.Module):
    """Three shared FC layers feeding a sign head and a confidence head."""

    def __init__(self, cfg: HasherConfig):
        super().__init__()
        self.cfg = cfg
        h1, h2, h3 = cfg.trunk_hidden
        self.trunk = nn.Sequential(
            nn.Linear(cfg.input_dim, h1),
            nn.ReLU(),
            nn.Linear(h1, h2),
            nn.ReLU(),
            nn.Linear(h2, h3),
            nn.ReLU(),
        )
        self.sign_head = nn.Linear(h3, cfg.code_length)
        self.confidence_head = (
            nn.Linear(h3, cfg.code_length) if cfg.confidence_head else None
        )

    def forward(self, e: torch.Tensor) -> torch.Tensor:
        return self.sign_head(self.trunk(e))


def sign_project(hasher: SignalHasher, e: torch.Tensor) -> torch.Tensor:
    """Raw sign-projector outputs (pre-binarization)."""
    return hasher.sign_head(hasher.trunk(e))


def confidence_project(hasher: SignalHasher, e: torch.Tensor) -> torch.Tensor:
    """Raw confidence-projector outputs."""
    if hasher.confidence_head is None:
        raise ValueError("this hasher was built without a confidence head")
    return hasher.confidence_head(hasher.trunk(e))


def hard_sign(x: torch.Tensor) -> torch.Tensor:
    """Binarize to +/-1; zeros map to -1."""
    return torch.where(x > 0, 1.0, -1.0).to(x.dtype)


def hard_hash(hasher: SignalHasher, e: torch.Tensor) -> torch.Tensor:
    """Binary hash codes in {-1, +1} for a batch of embeddings."""
    return hard_sign(sign_project(hasher, e))


def soft_hash(hasher: SignalHasher, e: torch.Tensor) -> SoftHash:
    """Differentiable relaxation: tanh code and tanh(x)*x confidence."""
    shared = hasher.trunk(e)
    code = torch.tanh(hasher.sign_head(shared))
    if hasher.confidence_head is None:
        raise ValueError("this hasher was built without a confidence head")
    raw = hasher.confidence_head(shared)
    return SoftHash(code=code, confidence=torch.tanh(raw) * raw)


def hasher_loss(soft: SoftHash, labels: torch.Tensor,
                temperature: float = 1.0) -> torch.Tensor:
    """Supervised contrastive loss on confidence-weighted relaxed codes."""
    weighted = soft.code * soft.confidence
    return supcon_loss(weighted, labels, temperature)


def binary_constraint(code: torch.Tensor) -> torch.Tensor:
    """Mean distance of relaxed code entries from +/-1.

    Equals mean over the batch of 1 - |code|_1 / code_length; zero iff
    every entry sits exactly at -1 or +1.
    """
    if code.ndim != 2:
        raise ValueError("code must be (batch, code_length)")
    length = code.shape[1]
    return (1.0 - code.abs().sum(dim=1) / length).mean()


def similarity_constraint(code: torch.Tensor, labels: torch.Tensor,
                          temperature: float = 1.0) -> torch.Tensor:
    """Contrastive pull on the relaxed codes themselves (no confidence)."""
    return supcon_loss(code, labels, temperature)


def hash_regularizer(soft: SoftHash, labels: torch.Tensor,
                     temperature: float = 1.0):
    """Return (binary_constraint, similarity_constraint) for logging and summing."""
    return binary_constraint(soft.code), similarity_constraint(
        soft.code, labels, temperature
    )


def vanilla_hash_loss(hasher: SignalHasher, e: torch.Tensor,
                      labels: torch.Tensor, temperature: float = 1.0) -> torch.Tensor:
    """Ablation objective: contrastive loss on tanh-relaxed codes alone."""
    code = torch.tanh(sign_project(hasher, e))
    return supcon_loss(code, labels, temperature)
