"""Shared fixtures: a small trained model reused across integration tests."""

from dataclasses import replace
from types import SimpleNamespace

import pytest
import torch

from cashid.encoder import EncoderConfig
from cashid.hasher import HasherConfig
from cashid.identifier import IdentifierConfig
from cashid.model import CashModel
from cashid.signals import SplitConfig, make_profile_bank, split_dataset
from cashid.simulate import simulate_dataset
from cashid.training import TrainConfig, train_model

torch.set_num_threads(max(torch.get_num_threads(), 2))


def small_profile_bank(count: int = 5, seed: int = 0, spread: float = 0.8) -> list:
    """Profiles without the DC-offset cue, matching the experiment banks."""
    return [replace(p, dc_offset=0j) for p in make_profile_bank(count, seed, spread)]


SMALL_ENCODER = EncoderConfig.desk()
SMALL_HASHER = HasherConfig(code_length=8, input_dim=SMALL_ENCODER.embedding_dim)
SMALL_IDENTIFIER = IdentifierConfig(projection_dim=16, margin_weight=0.4)
SMALL_TRAIN = TrainConfig(
    alpha=0.1, beta=1.0, batch_size=64,
    adam_epochs=12, sgd_epochs=2, step2_adam_epochs=12, step2_sgd_epochs=2,
    seed=0,
)


@pytest.fixture(scope="session")
def desk_run():
    """One small end-to-end training run shared by the integration tests.

    Returns the trained model, its data split, the raw dataset and the
    training log.  Tests must not mutate the model.
    """
    bank = small_profile_bank()
    data = simulate_dataset(bank, 48, 320, snr_db=25.0, seed=0)
    split = split_dataset(
        data, SplitConfig(mode="gzsl", seen=[0, 1, 2], test_per_class=12, seed=0)
    )
    model = CashModel(
        SMALL_ENCODER, SMALL_HASHER, SMALL_IDENTIFIER,
        split.train.class_space, seed=0,
    )
    log = train_model(split.train, model, SMALL_TRAIN)
    return SimpleNamespace(model=model, split=split, data=data, log=log, bank=bank)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one pass/fail line per acceptance criterion at the end."""
    lines = {}
    for outcome in ("passed", "skipped", "failed"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            if getattr(report, "when", "call") not in ("setup", "call"):
                continue
            name = nodeid.split("::")[-1]
            # later outcomes override: a failed call beats a passed setup
            lines[name] = outcome.upper()
    if not lines:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(lines):
        terminalreporter.write_line(f"{name}: {lines[name]}")
