"""On-disk dataset format: a JSON manifest plus raw interleaved IQ files.

Each signal lives in its own binary file of little-endian float32
values laid out [i0, q0, i1, q1, ...].  The manifest lists every file
with its emitter label and records the shared sample rate.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .signals import IQSignal, SignalDataset

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"


def save_dataset(dataset: SignalDataset, out_dir) -> Path:
    """Write every signal and a manifest into out_dir; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    rates = {sig.sample_rate_hz for sig in dataset.signals}
    if len(rates) > 1:
        raise ValueError("dataset mixes sample rates, cannot share one manifest")
    for idx, sig in enumerate(dataset.signals):
        name = f"signal_{idx:05d}.iq"
        sig.interleaved().astype("<f4").tofile(out_dir / name)
        records.append({"file": name, "emitter_id": sig.emitter_id})
    manifest = {
        "version": MANIFEST_VERSION,
        "sample_rate_hz": rates.pop() if rates else 1.0,
        "records": records,
    }
    path = out_dir / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2))
    return path


def load_dataset(manifest_path, role: str = "train") -> SignalDataset:
    """Load a dataset previously written by save_dataset.

    manifest_path may be the manifest file or its directory.  Raises
    ValueError for unknown manifest versions or truncated IQ files and
    FileNotFoundError for missing signal files.
    """
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / MANIFEST_NAME
    manifest = json.loads(manifest_path.read_text())
    version = manifest.get("version")
    if version != MANIFEST_VERSION:
        raise ValueError(f"unsupported manifest version {version!r}")
    rate = float(manifest.get("sample_rate_hz", 1.0))

    signals = []
    for record in manifest["records"]:
        path = manifest_path.parent / record["file"]
        if not path.exists():
            raise FileNotFoundError(f"manifest references missing file {path}")
        raw = np.fromfile(path, dtype="<f4")
        if raw.size == 0 or raw.size % 2 != 0:
            raise ValueError(f"truncated IQ file {path}: {raw.size} floats")
        samples = raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64)
        signals.append(
            IQSignal(samples, emitter_id=record["emitter_id"], sample_rate_hz=rate)
        )
    class_space = frozenset(
        s.emitter_id for s in signals if s.emitter_id is not None
    )
    return SignalDataset(tuple(signals), class_space, role)
