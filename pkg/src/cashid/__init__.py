"""Online specific emitter identification via collision-alleviated signal hashing.

The package trains a signal encoder, an online signal hasher and a
seen-emitter identifier on signals from a closed set of emitters, then
assigns every incoming signal a binary hash code plus a seen/novel
indicator.  Codes index an insertion-ordered hash table, so previously
unseen emitters receive fresh labels on the fly without retraining.
"""

from .signals import (
    EmitterProfile,
    IQSignal,
    SignalDataset,
    SplitConfig,
    SplitResult,
    center_slice,
    make_profile_bank,
    random_slice,
    split_dataset,
)
from .simulate import simulate_dataset, simulate_emitter_signal
from .datafiles import load_dataset, save_dataset
from .encoder import EncoderConfig, build_encoder, build_enhancer, supcon_loss
from .hasher import HasherConfig, SignalHasher, hard_hash
from .identifier import IdentifierConfig, IdentifierState, ReciprocalPoints
from .model import CashModel, load_model
from .training import TrainConfig, train_model
from .online import CollisionCode, HashTable, encode, identify
from .evaluation import EvalReport, evaluate, hungarian_accuracy
from .experiments import ExperimentConfig, run_experiment, run_trial, sweep

__all__ = [
    "CashModel",
    "CollisionCode",
    "EmitterProfile",
    "EncoderConfig",
    "EvalReport",
    "ExperimentConfig",
    "HashTable",
    "HasherConfig",
    "IQSignal",
    "IdentifierConfig",
    "IdentifierState",
    "ReciprocalPoints",
    "SignalDataset",
    "SignalHasher",
    "SplitConfig",
    "SplitResult",
    "TrainConfig",
    "build_encoder",
    "build_enhancer",
    "center_slice",
    "encode",
    "evaluate",
    "hard_hash",
    "hungarian_accuracy",
    "identify",
    "load_dataset",
    "load_model",
    "make_profile_bank",
    "random_slice",
    "run_experiment",
    "run_trial",
    "save_dataset",
    "simulate_dataset",
    "simulate_emitter_signal",
    "split_dataset",
    "supcon_loss",
    "sweep",
    "train_model",
    "__version__",
]

__version__ = "0.1.0"
