"""Trained model container: encoder, enhancer, hasher, identifier."""

from __future__ import annotations

from dataclasses import asdict, replace
from pathlib import Path

import torch

from .encoder import EncoderConfig, build_encoder, build_enhancer, extract_embedding
from .hasher import HasherConfig, SignalHasher
from .identifier import (
    IdentifierConfig,
    IdentifierState,
    ReciprocalPoints,
    indicator,
)

SNAPSHOT_VERSION = 1

_DTYPES = {"float32": torch.float32, "float64": torch.float64}


class CashModel:
    """Bundle of the trained networks plus everything inference needs.

    classes: ordered tuple of training class labels; the identifier's
    reciprocal points follow this order.  constant_indicator, when set,
    bypasses the identifier and stamps every signal with that value
    (used by the few-shot and no-identifier modes).
    """

    def __init__(
        self,
        encoder_cfg: EncoderConfig,
        hasher_cfg: HasherConfig,
        identifier_cfg: IdentifierConfig,
        classes,
        no_identifier: bool = False,
        constant_indicator=None,
        dtype=torch.float64,
        seed: int = 0,
    ):
        if hasher_cfg.input_dim != encoder_cfg.embedding_dim:
            raise ValueError("hasher input_dim must equal encoder embedding_dim")
        if no_identifier:
            # the no-identifier model IS the vanilla-hash baseline: a
            # bare sign projector and a fixed "no seen evidence" flag
            if hasher_cfg.confidence_head:
                hasher_cfg = replace(hasher_cfg, confidence_head=False)
            if constant_indicator is None:
                constant_indicator = -1
        if constant_indicator not in (None, -1, 1):
            raise ValueError("constant_indicator must be None, -1 or +1")
        self.encoder_cfg = encoder_cfg
        self.hasher_cfg = hasher_cfg
        self.identifier_cfg = identifier_cfg
        self.classes = tuple(sorted(classes))
        if not self.classes:
            raise ValueError("model needs at least one training class")
        self.class_to_index = {c: i for i, c in enumerate(self.classes)}
        self.no_identifier = no_identifier
        self.constant_indicator = constant_indicator
        self.dtype = dtype
        self.identifier_state = None

        torch.manual_seed(seed)
        self.encoder = build_encoder(encoder_cfg, dtype)
        self.enhancer = build_enhancer(encoder_cfg, dtype)
        self.hasher = SignalHasher(hasher_cfg).to(dtype)
        if no_identifier:
            self.projector = None
            self.points = None
        else:
            self.projector = torch.nn.Linear(
                encoder_cfg.embedding_dim, identifier_cfg.projection_dim
            ).to(dtype)
            self.points = ReciprocalPoints(
                len(self.classes), identifier_cfg.projection_dim
            ).to(dtype)

    @property
    def input_length(self) -> int:
        return self.encoder_cfg.input_length

    @property
    def code_length(self) -> int:
        return self.hasher_cfg.code_length

    def modules(self):
        mods = {"encoder": self.encoder, "enhancer": self.enhancer, "hasher": self.hasher}
        if self.projector is not None:
            mods["projector"] = self.projector
            mods["points"] = self.points
        return mods

    def train_mode(self):
        for mod in self.modules().values():
            mod.train()

    def eval_mode(self):
        for mod in self.modules().values():
            mod.eval()

    def embed(self, batch: torch.Tensor) -> torch.Tensor:
        """Inference-mode embeddings for a (batch, 2, length) tensor."""
        self.eval_mode()
        with torch.no_grad():
            return extract_embedding(self.encoder, batch)

    def indicators(self, embeddings: torch.Tensor) -> torch.Tensor:
        """Seen-emitters indicator per embedding (+1 seen, -1 novel)."""
        if self.constant_indicator is not None:
            return torch.full(
                (embeddings.shape[0],), self.constant_indicator, dtype=torch.long
            )
        if self.identifier_state is None:
            raise ValueError("identifier is not calibrated; train or load a model first")
        with torch.no_grad():
            z = self.projector(embeddings)
            return indicator(z, self.points, self.identifier_state)

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        state = {name: mod.state_dict() for name, mod in self.modules().items()}
        payload = {
            "format_version": SNAPSHOT_VERSION,
            "encoder_cfg": asdict(self.encoder_cfg),
            "hasher_cfg": asdict(self.hasher_cfg),
            "identifier_cfg": asdict(self.identifier_cfg),
            "classes": list(self.classes),
            "no_identifier": self.no_identifier,
            "constant_indicator": self.constant_indicator,
            "dtype": "float64" if self.dtype == torch.float64 else "float32",
            "identifier_state": (
                asdict(self.identifier_state) if self.identifier_state else None
            ),
            "state": state,
        }
        torch.save(payload, path)
        return path


def load_model(path) -> CashModel:
    """Rebuild a CashModel saved by CashModel.save.

    Raises ValueError on unknown snapshot versions.
    """
    payload = torch.load(Path(path), weights_only=True)
    version = payload.get("format_version")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported model snapshot version {version!r}")
    model = CashModel(
        EncoderConfig(**payload["encoder_cfg"]),
        HasherConfig(**payload["hasher_cfg"]),
        IdentifierConfig(**payload["identifier_cfg"]),
        payload["classes"],
        no_identifier=payload["no_identifier"],
        constant_indicator=payload["constant_indicator"],
        dtype=_DTYPES[payload["dtype"]],
    )
    for name, mod in model.modules().items():
        mod.load_state_dict(payload["state"][name])
    if payload["identifier_state"] is not None:
        model.identifier_state = IdentifierState(**payload["identifier_state"])
    model.eval_mode()
    return model
