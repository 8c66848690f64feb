"""Hashing head: binarization, relaxations, losses and constraints."""

import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from cashid.hasher import (
    HasherConfig,
    SignalHasher,
    binary_constraint,
    confidence_project,
    hard_hash,
    hard_sign,
    hash_regularizer,
    hasher_loss,
    sign_project,
    similarity_constraint,
    soft_hash,
    vanilla_hash_loss,
)

from oracles import grad_check, supcon_reference

torch.manual_seed(0)

SMALL = HasherConfig(code_length=6, input_dim=10, trunk_hidden=(16, 12, 8))


def small_hasher(confidence=True, seed=0):
    torch.manual_seed(seed)
    cfg = HasherConfig(
        code_length=SMALL.code_length, input_dim=SMALL.input_dim,
        trunk_hidden=SMALL.trunk_hidden, confidence_head=confidence,
    )
    return SignalHasher(cfg).double()


def embeddings(m=8, seed=0):
    rng = np.random.default_rng(seed)
    return torch.tensor(rng.normal(size=(m, SMALL.input_dim)), dtype=torch.float64)


PAIR_LABELS = torch.tensor([0, 0, 1, 1, 2, 2, 3, 3])


class TestHardSign:
    def test_zero_maps_to_minus_one(self):
        x = torch.tensor([-2.0, -0.0, 0.0, 1e-300, 3.0], dtype=torch.float64)
        assert hard_sign(x).tolist() == [-1.0, -1.0, -1.0, 1.0, 1.0]

    def test_all_entries_pm_one_over_random_inputs(self):
        rng = np.random.default_rng(1)
        x = torch.tensor(rng.normal(size=10_000))
        out = hard_sign(x)
        assert torch.all((out == 1) | (out == -1))

    def test_preserves_dtype(self):
        x = torch.zeros(3, dtype=torch.float32)
        assert hard_sign(x).dtype == torch.float32


class TestProjections:
    def test_sign_project_shape_and_forward_alias(self):
        hasher = small_hasher()
        e = embeddings()
        raw = sign_project(hasher, e)
        assert raw.shape == (8, SMALL.code_length)
        assert torch.equal(raw, hasher(e))

    def test_hard_hash_is_sign_of_projection(self):
        hasher = small_hasher()
        e = embeddings()
        assert torch.equal(hard_hash(hasher, e), hard_sign(sign_project(hasher, e)))

    def test_confidence_project_requires_head(self):
        hasher = small_hasher(confidence=False)
        with pytest.raises(ValueError, match="confidence"):
            confidence_project(hasher, embeddings())

    def test_soft_hash_relaxations(self):
        hasher = small_hasher()
        e = embeddings()
        soft = soft_hash(hasher, e)
        raw_code = sign_project(hasher, e)
        raw_conf = confidence_project(hasher, e)
        assert torch.allclose(soft.code, torch.tanh(raw_code))
        assert torch.allclose(soft.confidence, torch.tanh(raw_conf) * raw_conf)
        # x * tanh(x) is a smooth |x|: nonnegative everywhere
        assert torch.all(soft.confidence >= 0)

    def test_confidence_approaches_magnitude(self):
        # at x = 3 the gap between x and x*tanh(x) is under 0.0149
        x = torch.tensor([3.0], dtype=torch.float64)
        gap = float(x - torch.tanh(x) * x)
        assert 0 < gap <= 0.0149


class TestBinaryConstraint:
    def test_saturated_codes_give_zero(self):
        code = hard_sign(torch.tensor(np.random.default_rng(0).normal(size=(5, 7))))
        assert float(binary_constraint(code)) == pytest.approx(0.0, abs=1e-15)

    def test_zero_codes_give_one(self):
        assert float(binary_constraint(torch.zeros(3, 4))) == pytest.approx(1.0)

    def test_hand_value(self):
        # rows [0.5, -0.5] and [1, -1]: means of 1 - |h|_1/F are 0.5 and 0
        code = torch.tensor([[0.5, -0.5], [1.0, -1.0]], dtype=torch.float64)
        assert float(binary_constraint(code)) == pytest.approx(0.25, abs=1e-15)

    def test_large_logit_limit(self):
        # scaling the sign logits by 1e3 saturates the tanh relaxation
        rng = np.random.default_rng(2)
        logits = rng.uniform(0.05, 3.0, size=(5, 7)) * rng.choice([-1, 1], size=(5, 7))
        code = torch.tanh(torch.tensor(1e3 * logits))
        assert float(binary_constraint(code)) < 1e-6

    @given(st.integers(min_value=1, max_value=30), st.integers(min_value=1, max_value=12))
    @settings(max_examples=30, deadline=None)
    def test_bounded_for_relaxed_codes(self, m, f):
        rng = np.random.default_rng(m * 13 + f)
        code = torch.tensor(np.tanh(rng.normal(size=(m, f))))
        value = float(binary_constraint(code))
        assert 0.0 <= value <= 1.0  # tanh outputs stay in (-1, 1)

    def test_requires_2d(self):
        with pytest.raises(ValueError):
            binary_constraint(torch.zeros(5))


class TestHashLosses:
    def test_hasher_loss_is_supcon_on_weighted_codes(self):
        hasher = small_hasher()
        soft = soft_hash(hasher, embeddings())
        loss = hasher_loss(soft, PAIR_LABELS)
        weighted = (soft.code * soft.confidence).detach().numpy()
        assert loss.detach().item() == pytest.approx(
            supcon_reference(weighted, PAIR_LABELS.tolist()), rel=1e-12
        )

    def test_similarity_constraint_is_supcon_on_codes(self):
        hasher = small_hasher()
        with torch.no_grad():
            soft = soft_hash(hasher, embeddings())
            value = similarity_constraint(soft.code, PAIR_LABELS)
        assert float(value) == pytest.approx(
            supcon_reference(soft.code.numpy(), PAIR_LABELS.tolist()),
            rel=1e-12,
        )

    def test_hash_regularizer_bundles_both(self):
        hasher = small_hasher()
        with torch.no_grad():
            soft = soft_hash(hasher, embeddings())
            c_bin, c_sim = hash_regularizer(soft, PAIR_LABELS)
            assert float(c_bin) == pytest.approx(float(binary_constraint(soft.code)))
            assert float(c_sim) == pytest.approx(
                float(similarity_constraint(soft.code, PAIR_LABELS))
            )

    def test_vanilla_loss_ignores_confidence(self):
        with_head = small_hasher(confidence=True, seed=4)
        without = small_hasher(confidence=False, seed=4)
        # same seed: trunk and sign head weights coincide
        e = embeddings(seed=2)
        with torch.no_grad():
            a = vanilla_hash_loss(with_head, e, PAIR_LABELS)
            b = vanilla_hash_loss(without, e, PAIR_LABELS)
            expected = supcon_reference(
                torch.tanh(sign_project(without, e)).numpy(),
                PAIR_LABELS.tolist(),
            )
        assert float(a) == pytest.approx(float(b), rel=1e-12)
        assert float(b) == pytest.approx(expected, rel=1e-12)

    def test_soft_hash_requires_confidence_head(self):
        hasher = small_hasher(confidence=False)
        with pytest.raises(ValueError, match="confidence"):
            soft_hash(hasher, embeddings())

    def test_gradients_match_central_differences(self):
        hasher = small_hasher(seed=7)
        e = embeddings(seed=3)
        params = [hasher.sign_head.weight, hasher.confidence_head.weight]

        def loss_fn():
            soft = soft_hash(hasher, e)
            c_bin, c_sim = hash_regularizer(soft, PAIR_LABELS)
            return hasher_loss(soft, PAIR_LABELS) + c_bin + c_sim

        grad_check(loss_fn, params, max_coords=20)


class TestHasherConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            HasherConfig(code_length=0)
        with pytest.raises(ValueError):
            HasherConfig(input_dim=0)
        with pytest.raises(ValueError):
            HasherConfig(trunk_hidden=(4, 4))

    def test_defaults(self):
        cfg = HasherConfig()
        assert cfg.code_length == 12
        assert cfg.trunk_hidden == (512, 256, 128)
        assert cfg.confidence_head
