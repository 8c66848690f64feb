"""Core signal containers, slicing and dataset splitting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np


@dataclass(frozen=True, eq=False)
class IQSignal:
    """A complex baseband signal with an optional emitter label.

    samples: 1-D complex array of IQ samples.
    emitter_id: ground-truth emitter label, None for unlabeled captures.
    sample_rate_hz: nominal sample rate, informational only.
    """

    samples: np.ndarray
    emitter_id: Optional[int] = None
    sample_rate_hz: float = 1.0

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if not np.iscomplexobj(samples):
            samples = samples.astype(np.complex128)
        if not np.all(np.isfinite(samples.real)) or not np.all(np.isfinite(samples.imag)):
            raise ValueError("samples contain non-finite values")
        object.__setattr__(self, "samples", samples)

    @property
    def length(self) -> int:
        return self.samples.shape[0]

    def interleaved(self) -> np.ndarray:
        """Return [i0, q0, i1, q1, ...] as float32, the on-disk layout."""
        out = np.empty(2 * self.length, dtype=np.float32)
        out[0::2] = self.samples.real
        out[1::2] = self.samples.imag
        return out


@dataclass(frozen=True)
class SignalDataset:
    """Immutable collection of labeled signals.

    role: "train" or "test".  Train datasets must only contain labels
    from their own class space; test datasets may contain anything.
    """

    signals: tuple
    class_space: frozenset
    role: str = "train"

    def __post_init__(self):
        if self.role not in ("train", "test"):
            raise ValueError(f"role must be 'train' or 'test', got {self.role!r}")
        object.__setattr__(self, "signals", tuple(self.signals))
        object.__setattr__(self, "class_space", frozenset(self.class_space))
        if self.role == "train":
            for sig in self.signals:
                if sig.emitter_id not in self.class_space:
                    raise ValueError(
                        f"train signal labeled {sig.emitter_id} outside class space"
                    )

    def __len__(self) -> int:
        return len(self.signals)

    def __iter__(self):
        return iter(self.signals)

    def __getitem__(self, idx) -> IQSignal:
        return self.signals[idx]

    def labels(self) -> np.ndarray:
        return np.array([sig.emitter_id for sig in self.signals])

    def subset(self, indices, role: Optional[str] = None) -> "SignalDataset":
        picked = tuple(self.signals[i] for i in indices)
        return SignalDataset(picked, self.class_space, role or self.role)


@dataclass(frozen=True)
class EmitterProfile:
    """Hardware fingerprint of one simulated emitter.

    The impairment chain applies, in order: IQ imbalance, DC offset,
    cubic amplifier nonlinearity, carrier frequency offset, Wiener
    phase noise.  freq_offset_ppm is parts-per-million of the sample
    rate, so the offset advances the carrier phase by
    2*pi*ppm*1e-6 radians per sample.
    """

    emitter_id: int
    freq_offset_ppm: float = 0.0
    iq_gain_imbalance_db: float = 0.0
    iq_phase_imbalance_deg: float = 0.0
    dc_offset: complex = 0.0
    pa_cubic_coeff: float = 0.0
    phase_noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        values = (
            self.freq_offset_ppm,
            self.iq_gain_imbalance_db,
            self.iq_phase_imbalance_deg,
            abs(self.dc_offset),
            self.pa_cubic_coeff,
            self.phase_noise_std,
        )
        if not all(np.isfinite(v) for v in values):
            raise ValueError("profile parameters must be finite")
        if abs(self.pa_cubic_coeff) >= 1.0:
            raise ValueError("|pa_cubic_coeff| must be < 1 to keep the amplifier stable")
        if self.phase_noise_std < 0:
            raise ValueError("phase_noise_std must be >= 0")


@dataclass(frozen=True)
class SplitConfig:
    """How to carve a labeled dataset into train and test sets.

    seen: either a fraction of classes (float in (0, 1)) or an explicit
    sequence of seen class labels.
    shots_per_novel: labeled samples per novel class moved into train
    (few-shot mode only; must be 0 for the generalized zero-shot mode).
    """

    mode: str = "gzsl"
    seen: Union[float, Sequence[int]] = 0.5
    shots_per_novel: int = 0
    test_per_class: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("gzsl", "fsl"):
            raise ValueError(f"mode must be 'gzsl' or 'fsl', got {self.mode!r}")
        if self.mode == "gzsl" and self.shots_per_novel != 0:
            raise ValueError("gzsl splits take no novel shots")
        if self.mode == "fsl" and self.shots_per_novel < 1:
            raise ValueError("fsl splits need at least one shot per novel class")
        if isinstance(self.seen, float) and not 0.0 < self.seen < 1.0:
            raise ValueError("seen fraction must lie in (0, 1)")
        if self.test_per_class < 1:
            raise ValueError("test_per_class must be >= 1")


@dataclass(frozen=True)
class SplitResult:
    """Outcome of split_dataset: the (train, test) pair plus the class partition."""

    train: SignalDataset
    test: SignalDataset
    seen_classes: frozenset
    novel_classes: frozenset

    def __iter__(self):
        # unpacks as (train, test)
        return iter((self.train, self.test))


def random_slice(signal: IQSignal, length: int, rng: np.random.Generator) -> IQSignal:
    """Cut a uniformly random contiguous window of the given length."""
    if length < 1:
        raise ValueError("slice length must be >= 1")
    if signal.length < length:
        raise ValueError(
            f"signal of length {signal.length} too short for slice of {length}"
        )
    start = int(rng.integers(0, signal.length - length + 1))
    return IQSignal(
        signal.samples[start : start + length],
        emitter_id=signal.emitter_id,
        sample_rate_hz=signal.sample_rate_hz,
    )


def center_slice(signal: IQSignal, length: int) -> IQSignal:
    """Cut the centered window of the given length (deterministic)."""
    if length < 1:
        raise ValueError("slice length must be >= 1")
    if signal.length < length:
        raise ValueError(
            f"signal of length {signal.length} too short for slice of {length}"
        )
    start = (signal.length - length) // 2
    return IQSignal(
        signal.samples[start : start + length],
        emitter_id=signal.emitter_id,
        sample_rate_hz=signal.sample_rate_hz,
    )


def partition_classes(class_space, cfg: SplitConfig):
    """Deterministically pick the seen classes for a split config."""
    classes = sorted(class_space)
    if isinstance(cfg.seen, float):
        rng = np.random.default_rng(cfg.seed)
        count = int(round(cfg.seen * len(classes)))
        count = min(max(count, 1), len(classes) - 1)
        seen = set(int(c) for c in rng.choice(classes, size=count, replace=False))
    else:
        seen = set(int(c) for c in cfg.seen)
        unknown = seen - set(classes)
        if unknown:
            raise ValueError(f"seen classes {sorted(unknown)} not present in dataset")
        if not seen or len(seen) == len(classes):
            raise ValueError("seen classes must be a proper nonempty subset")
    novel = set(classes) - seen
    return frozenset(seen), frozenset(novel)


def split_dataset(dataset: SignalDataset, cfg: SplitConfig) -> SplitResult:
    """Split one labeled dataset into a train set and a held-out test set.

    Every class contributes cfg.test_per_class samples to test.  Seen
    classes contribute all remaining samples to train.  Novel classes
    contribute cfg.shots_per_novel samples to train in few-shot mode
    and nothing otherwise.
    """
    seen, novel = partition_classes(dataset.class_space, cfg)
    rng = np.random.default_rng(cfg.seed + 1)

    by_class = {}
    for idx, sig in enumerate(dataset.signals):
        by_class.setdefault(sig.emitter_id, []).append(idx)

    train_idx, test_idx = [], []
    for cls in sorted(by_class):
        indices = np.array(by_class[cls])
        rng.shuffle(indices)
        need = cfg.test_per_class + (
            1 if cls in seen else (cfg.shots_per_novel if cfg.mode == "fsl" else 0)
        )
        if len(indices) < need:
            raise ValueError(
                f"class {cls} has {len(indices)} samples, split needs {need}"
            )
        test_idx.extend(int(i) for i in indices[: cfg.test_per_class])
        rest = indices[cfg.test_per_class :]
        if cls in seen:
            train_idx.extend(int(i) for i in rest)
        elif cfg.mode == "fsl":
            train_idx.extend(int(i) for i in rest[: cfg.shots_per_novel])

    train_space = seen if cfg.mode == "gzsl" else seen | novel
    train = SignalDataset(
        tuple(dataset.signals[i] for i in sorted(train_idx)), train_space, "train"
    )
    test = SignalDataset(
        tuple(dataset.signals[i] for i in sorted(test_idx)), dataset.class_space, "test"
    )
    return SplitResult(train, test, seen, novel)


PROFILE_AXES = ("freq", "gain", "phase", "dc", "cubic", "phase_noise")


def make_profile_bank(
    count: int, seed: int = 0, spread: float = 1.0, axis_spread: dict = None
) -> list:
    """Generate well-separated emitter profiles for simulation.

    Each impairment axis takes evenly spaced values that are permuted
    independently, so any two profiles differ along every axis.  spread
    scales all impairment magnitudes; axis_spread optionally multiplies
    individual axes on top of that (e.g. {"freq": 0.05} shrinks the
    frequency offsets so identification leans on the nonlinear axes).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    axis_spread = dict(axis_spread or {})
    unknown = set(axis_spread) - set(PROFILE_AXES)
    if unknown:
        raise ValueError(f"unknown profile axes: {sorted(unknown)}")
    scales = {name: float(axis_spread.get(name, 1.0)) for name in PROFILE_AXES}
    rng = np.random.default_rng(seed)

    def axis(lo, hi):
        values = np.linspace(lo, hi, count)
        return values[rng.permutation(count)]

    freq = axis(-1500.0, 1500.0)
    gain = axis(-2.5, 2.5)
    phase = axis(-8.0, 8.0)
    cubic = axis(-0.22, 0.22)
    pn = axis(0.0005, 0.004)
    angles = rng.permutation(count) * (2 * np.pi / max(count, 1))
    dc = 0.04 * np.exp(1j * angles)

    profiles = []
    for i in range(count):
        profiles.append(
            EmitterProfile(
                emitter_id=i,
                freq_offset_ppm=float(freq[i]) * spread * scales["freq"],
                iq_gain_imbalance_db=float(gain[i]) * spread * scales["gain"],
                iq_phase_imbalance_deg=float(phase[i]) * spread * scales["phase"],
                dc_offset=complex(dc[i]) * spread * scales["dc"],
                pa_cubic_coeff=float(cubic[i]) * spread * scales["cubic"],
                phase_noise_std=float(pn[i]) * spread * scales["phase_noise"],
                seed=seed * 100003 + i,
            )
        )
    return profiles
