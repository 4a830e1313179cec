"""Encoder forward semantics, MLM mechanics, and checkpointing."""

import math

import pytest
import torch

from deauville.encoders import (
    STAGES,
    EncoderSpec,
    MlmConfig,
    TransformerEncoder,
    domain_adapt,
    encode,
    finite_difference_check,
    generic_pretrain,
    load_checkpoint,
    mask_tokens,
    masked_token_perplexity,
    pad_batch,
    save_checkpoint,
)
from deauville.encoders.mlm import IGNORE_INDEX
from deauville.errors import UnrecoverableStateError, ValidationError

VOCAB = 60
SPECIALS = (0, 1, 2, 3, 4)  # pad, unk, start, sep, mask
PAD, MASK = 0, 4


def tiny_model(seed=0, **kwargs):
    torch.manual_seed(seed)
    spec = EncoderSpec(
        vocab_size=VOCAB, n_layers=1, n_heads=2, hidden_size=16,
        ff_size=32, max_positions=64, dropout=0.0, **kwargs,
    )
    return TransformerEncoder(spec)


def sample_sequences(n=12, lo=8, hi=30, seed=1):
    g = torch.Generator().manual_seed(seed)
    out = []
    for _ in range(n):
        length = int(torch.randint(lo, hi, (1,), generator=g))
        body = torch.randint(5, VOCAB, (length,), generator=g).tolist()
        out.append([2] + body + [3])
    return out


# --- model -----------------------------------------------------------------


def test_spec_validation():
    with pytest.raises(ValidationError):
        EncoderSpec(vocab_size=100, hidden_size=30, n_heads=4)
    with pytest.raises(ValidationError):
        EncoderSpec(vocab_size=3)
    with pytest.raises(ValidationError):
        EncoderSpec(vocab_size=100, dropout=1.0)


def test_forward_shapes():
    model = tiny_model()
    ids = torch.randint(5, VOCAB, (3, 20))
    hidden = model(ids)
    assert hidden.shape == (3, 20, 16)
    assert model.pooled(hidden).shape == (3, 16)
    assert model.mlm_logits(hidden).shape == (3, 20, VOCAB)


def test_forward_rejects_out_of_range_ids():
    model = tiny_model()
    bad = torch.tensor([[1, 2, VOCAB]])
    with pytest.raises(ValidationError):
        model(bad)


def test_forward_rejects_overlong_sequences():
    model = tiny_model()
    with pytest.raises(ValidationError, match="max_positions"):
        model(torch.randint(5, VOCAB, (1, 65)))


def test_encode_single_sequence():
    model = tiny_model()
    states, pooled = encode(model, [2, 10, 11, 3])
    assert states.shape == (4, 16)
    assert pooled.shape == (16,)
    assert torch.allclose(pooled, states[0])


def test_padding_does_not_change_real_token_states():
    model = tiny_model().eval()
    seq = [2, 10, 11, 12, 3]
    ids, mask = pad_batch([seq, seq + [13, 14]], PAD)
    with torch.no_grad():
        hidden = model(ids, mask)
        alone = model(torch.tensor([seq]), torch.ones(1, 5, dtype=torch.bool))
    assert torch.allclose(hidden[0, :5], alone[0], atol=1e-5)


def test_gradients_match_finite_differences():
    model = tiny_model().double().eval()
    torch.manual_seed(2)
    ids = torch.randint(5, VOCAB, (2, 10))

    def loss_fn(m):
        hidden = m(ids)
        return m.mlm_logits(hidden).pow(2).mean()

    worst = finite_difference_check(model, loss_fn, n_params=10, seed=0)
    assert worst < 1e-4


# --- masking ----------------------------------------------------------------


def test_mask_counts_are_exact():
    seqs = sample_sequences(n=30, seed=3)
    ids, mask = pad_batch(seqs, PAD)
    g = torch.Generator().manual_seed(0)
    masked, labels = mask_tokens(ids, mask, SPECIALS, MASK, VOCAB, g, mask_rate=0.15)
    for row in range(ids.shape[0]):
        maskable = sum(1 for t in seqs[row] if t not in SPECIALS)
        expected = round(0.15 * maskable)
        assert int((labels[row] != IGNORE_INDEX).sum()) == expected


def test_masked_positions_use_action_split():
    # all-mask split: every selected position becomes [MASK]
    seqs = sample_sequences(n=10, seed=4)
    ids, mask = pad_batch(seqs, PAD)
    g = torch.Generator().manual_seed(0)
    masked, labels = mask_tokens(
        ids, mask, SPECIALS, MASK, VOCAB, g,
        mask_rate=0.3, mask_action_split=(1.0, 0.0, 0.0),
    )
    chosen = labels != IGNORE_INDEX
    assert torch.all(masked[chosen] == MASK)
    # labels hold the original ids at chosen positions
    assert torch.all(labels[chosen] == ids[chosen])


def test_specials_never_masked():
    seqs = sample_sequences(n=10, seed=5)
    ids, mask = pad_batch(seqs, PAD)
    g = torch.Generator().manual_seed(1)
    _, labels = mask_tokens(ids, mask, SPECIALS, MASK, VOCAB, g, mask_rate=0.9)
    special_positions = torch.zeros_like(ids, dtype=torch.bool)
    for s in SPECIALS:
        special_positions |= ids == s
    assert torch.all(labels[special_positions] == IGNORE_INDEX)


def test_sequence_without_maskable_tokens_rejected():
    ids, mask = pad_batch([[2, 3]], PAD)
    g = torch.Generator().manual_seed(0)
    with pytest.raises(ValidationError, match="no maskable"):
        mask_tokens(ids, mask, SPECIALS, MASK, VOCAB, g)


def test_mlm_config_validation():
    with pytest.raises(ValidationError):
        MlmConfig(mask_rate=0.0)
    with pytest.raises(ValidationError):
        MlmConfig(epochs=-1)
    with pytest.raises(ValidationError):
        MlmConfig(mask_action_split=(0.5, 0.2, 0.2))


# --- training ---------------------------------------------------------------


def test_zero_epochs_is_a_no_op():
    model = tiny_model()
    before = {k: v.clone() for k, v in model.state_dict().items()}
    history = generic_pretrain(
        model, sample_sequences(), PAD, SPECIALS, MASK, MlmConfig(epochs=0)
    )
    assert history == []
    after = model.state_dict()
    assert all(torch.equal(before[k], after[k]) for k in before)


def test_pretraining_reduces_perplexity():
    torch.manual_seed(0)
    model = tiny_model()
    seqs = sample_sequences(n=40, seed=7)
    before = masked_token_perplexity(model, seqs, PAD, SPECIALS, MASK, seed=0)
    config = MlmConfig(epochs=4, learning_rate=3e-3, batch_size=8, seed=0)
    history = generic_pretrain(model, seqs, PAD, SPECIALS, MASK, config)
    after = masked_token_perplexity(model, seqs, PAD, SPECIALS, MASK, seed=0)
    assert len(history) == 4
    assert after < before
    assert math.isfinite(after)


def test_training_is_deterministic():
    seqs = sample_sequences(n=20, seed=9)
    config = MlmConfig(epochs=2, learning_rate=1e-3, batch_size=8, seed=5)
    m1, m2 = tiny_model(seed=3), tiny_model(seed=3)
    h1 = domain_adapt(m1, seqs, PAD, SPECIALS, MASK, config)
    h2 = domain_adapt(m2, seqs, PAD, SPECIALS, MASK, config)
    assert h1 == h2
    s1, s2 = m1.state_dict(), m2.state_dict()
    assert all(torch.equal(s1[k], s2[k]) for k in s1)


# --- checkpoints --------------------------------------------------------------


def test_checkpoint_round_trip(tmp_path, tiny_vocab):
    model = tiny_model(vocab_size=len(tiny_vocab))
    save_checkpoint(tmp_path / "ck", model, tiny_vocab, "generic-pretrained",
                    parent_stage="random-init")
    loaded, vocab, meta = load_checkpoint(tmp_path / "ck")
    assert meta["stage"] == "generic-pretrained"
    assert len(vocab) == len(tiny_vocab)
    s1, s2 = model.state_dict(), loaded.state_dict()
    for k in s1:
        assert torch.allclose(s1[k], s2[k], atol=1e-7)


def test_stage_order_and_transitions(tmp_path, tiny_vocab):
    assert STAGES == ("random-init", "generic-pretrained", "domain-adapted", "fine-tuned")
    model = tiny_model(vocab_size=len(tiny_vocab))
    # skipping forward is allowed
    save_checkpoint(tmp_path / "skip", model, tiny_vocab, "domain-adapted",
                    parent_stage="random-init")
    # moving left is not
    with pytest.raises(ValidationError):
        save_checkpoint(tmp_path / "back", model, tiny_vocab, "generic-pretrained",
                        parent_stage="domain-adapted")
    # staying put is not a transition
    with pytest.raises(ValidationError):
        save_checkpoint(tmp_path / "same", model, tiny_vocab, "domain-adapted",
                        parent_stage="domain-adapted")


def test_checkpoint_detects_corruption(tmp_path, tiny_vocab):
    model = tiny_model(vocab_size=len(tiny_vocab))
    save_checkpoint(tmp_path / "ck", model, tiny_vocab, "generic-pretrained")
    weights = tmp_path / "ck" / "weights.bin"
    blob = bytearray(weights.read_bytes())
    blob[10] ^= 0xFF
    weights.write_bytes(bytes(blob))
    with pytest.raises(UnrecoverableStateError):
        load_checkpoint(tmp_path / "ck")


def test_checkpoint_stage_pin(tmp_path, tiny_vocab):
    model = tiny_model(vocab_size=len(tiny_vocab))
    save_checkpoint(tmp_path / "ck", model, tiny_vocab, "domain-adapted")
    with pytest.raises(UnrecoverableStateError):
        load_checkpoint(tmp_path / "ck", expect_stage="fine-tuned")
