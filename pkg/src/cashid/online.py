"""Online identification: collision-alleviated codes and the hash table."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import torch

from .encoder import extract_embedding, signals_to_tensor
from .hasher import hard_hash
from .model import CashModel
from .signals import IQSignal, center_slice

TABLE_SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class CollisionCode:
    """A signal's full identity code: hash bits plus the seen indicator.

    bits: tuple of -1/+1 ints of the hasher's code length.
    indicator: +1 when the signal was identified as from a seen
    emitter, -1 otherwise.  Two codes equal in bits but differing in
    the indicator are distinct identities.
    """

    bits: tuple
    indicator: int

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits or any(b not in (-1, 1) for b in bits):
            raise ValueError("bits must be a nonempty tuple of -1/+1")
        if self.indicator not in (-1, 1):
            raise ValueError("indicator must be -1 or +1")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return len(self.bits) + 1

    def key(self) -> tuple:
        return self.bits + (self.indicator,)


class TableOverflow(RuntimeError):
    """Raised when a bounded hash table would exceed its size limit."""


class HashTable:
    """Insertion-ordered map from collision codes to dense labels.

    The first distinct code gets label 0, the next label 1, and so on;
    replaying a code stream therefore reproduces the label stream.
    max_entries, when set, aborts (never evicts) on overflow.
    """

    def __init__(self, max_entries: Optional[int] = None):
        if max_entries is not None and max_entries < 1:
            raise ValueError("max_entries must be >= 1 when set")
        self._entries: dict = {}
        self.max_entries = max_entries

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, code: CollisionCode) -> bool:
        return code.key() in self._entries

    @property
    def next_label(self) -> int:
        return len(self._entries)

    def entries(self) -> list:
        """(code, label) pairs in insertion order."""
        return [
            (CollisionCode(key[:-1], key[-1]), label)
            for key, label in self._entries.items()
        ]

    def identify(self, code: CollisionCode) -> int:
        key = code.key()
        existing = self._entries.get(key)
        if existing is not None:
            return existing
        if self.max_entries is not None and len(self._entries) >= self.max_entries:
            raise TableOverflow(
                f"table limited to {self.max_entries} entries cannot admit a new code"
            )
        label = len(self._entries)
        self._entries[key] = label
        return label

    def snapshot(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "version": TABLE_SNAPSHOT_VERSION,
            "max_entries": self.max_entries,
            "codes": [list(key) for key, _ in sorted(
                self._entries.items(), key=lambda kv: kv[1]
            )],
        }
        path.write_text(json.dumps(payload))
        return path

    @classmethod
    def restore(cls, path) -> "HashTable":
        payload = json.loads(Path(path).read_text())
        version = payload.get("version")
        if version != TABLE_SNAPSHOT_VERSION:
            raise ValueError(f"unsupported table snapshot version {version!r}")
        table = cls(max_entries=payload.get("max_entries"))
        for key in payload["codes"]:
            table.identify(CollisionCode(tuple(key[:-1]), key[-1]))
        return table


def identify(table: HashTable, code: CollisionCode) -> int:
    """Label for the code; new codes are inserted with the next label."""
    return table.identify(code)


def encode_batch(model: CashModel, signals) -> list:
    """Collision codes for many signals at once (center slices)."""
    slices = [center_slice(sig, model.input_length) for sig in signals]
    batch = signals_to_tensor(slices, model.input_length, model.dtype)
    model.eval_mode()
    with torch.no_grad():
        embeddings = extract_embedding(model.encoder, batch)
        bits = hard_hash(model.hasher, embeddings)
        indicators = model.indicators(embeddings)
    return [
        CollisionCode(tuple(int(b) for b in row), int(a))
        for row, a in zip(bits.tolist(), indicators.tolist())
    ]


def encode(model: CashModel, signal: IQSignal) -> CollisionCode:
    """Collision code for one signal: center slice, embed, hash, indicate."""
    return encode_batch(model, [signal])[0]


def stream_identify(model: CashModel, signals, table: Optional[HashTable] = None):
    """Assign labels to a signal stream in order.

    Returns (rows, table) where each row is
    {"sample_index", "code", "label"}; codes are listed bits-then-
    indicator.  Pass an existing table to continue a previous stream.
    """
    if table is None:
        table = HashTable()
    rows = []
    codes = encode_batch(model, signals) if len(signals) else []
    for idx, code in enumerate(codes):
        rows.append(
            {"sample_index": idx, "code": list(code.key()), "label": table.identify(code)}
        )
    return rows, table
