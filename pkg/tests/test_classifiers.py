"""Heads, vision encoders, fusion, and the training loop."""

import math

import numpy as np
import pytest
import torch
import torch.nn as nn

from deauville.classifiers import (
    AUGMENTATIONS,
    ClassificationHead,
    HeadSpec,
    MultimodalClassifier,
    MultimodalDataset,
    TextClassifier,
    TextDataset,
    TrainConfig,
    VisionClassifier,
    VisionDataset,
    VisionSpec,
    augment_image,
    build_vision_encoder,
    predict_text,
    train_classifier,
)
from deauville.encoders import EncoderSpec, TransformerEncoder
from deauville.errors import TrainingDivergenceError, ValidationError

VOCAB = 60
PAD = 0


def text_encoder(seed=0):
    torch.manual_seed(seed)
    spec = EncoderSpec(vocab_size=VOCAB, n_layers=1, n_heads=2, hidden_size=16,
                       ff_size=32, max_positions=64, dropout=0.0)
    return TransformerEncoder(spec)


def toy_text_data(n=24, seed=0):
    g = torch.Generator().manual_seed(seed)
    seqs, labels = [], []
    for i in range(n):
        label = i % 5 + 1
        # class-correlated token so the model has something to learn
        body = [5 + label] * 6 + torch.randint(10, VOCAB, (4,), generator=g).tolist()
        seqs.append([2] + body + [3])
        labels.append(label)
    return seqs, labels


# --- heads -------------------------------------------------------------------


def test_head_requires_five_classes():
    with pytest.raises(ValidationError):
        HeadSpec(input_dim=16, n_classes=3)


def test_head_hidden_dims_default_to_input_dim():
    spec = HeadSpec(input_dim=32)
    assert spec.resolved_hidden_dims == (32, 32)
    spec = HeadSpec(input_dim=32, hidden_dims=(8, 4))
    assert spec.resolved_hidden_dims == (8, 4)


def test_head_forward_shape_and_dim_check():
    head = ClassificationHead(HeadSpec(input_dim=16))
    out = head(torch.zeros(7, 16))
    assert out.shape == (7, 5)
    with pytest.raises(ValidationError):
        head(torch.zeros(7, 9))


def test_head_has_no_dropout():
    head = ClassificationHead(HeadSpec(input_dim=8))
    assert not any(isinstance(m, nn.Dropout) for m in head.modules())


@pytest.mark.parametrize("activation", ["gelu", "relu", "tanh"])
def test_head_activations(activation):
    head = ClassificationHead(HeadSpec(input_dim=8, activation=activation))
    head(torch.zeros(1, 8))
    with pytest.raises(ValidationError):
        HeadSpec(input_dim=8, activation="swish")


# --- vision -------------------------------------------------------------------


def test_vision_spec_validation():
    with pytest.raises(ValidationError):
        VisionSpec(input_size=(12, 12))           # below minimum
    with pytest.raises(ValidationError):
        VisionSpec(input_size=(32, 64))           # not square
    with pytest.raises(ValidationError):
        VisionSpec(kind="patch-transformer", input_size=(30, 30), patch_size=8)
    with pytest.raises(ValidationError):
        VisionSpec(kind="resnet")


@pytest.mark.parametrize("kind", ["patch-transformer", "convolutional"])
def test_vision_encoders_run(kind):
    spec = VisionSpec(kind=kind, input_size=(32, 32), patch_size=8,
                      hidden_size=16, n_layers=1, n_heads=2, ff_size=32, dropout=0.0)
    torch.manual_seed(0)
    enc = build_vision_encoder(spec)
    out = enc(torch.rand(3, 32, 32))
    assert out.shape == (3, enc.d_out)


def test_pixel_normalization_maps_to_signed_range():
    spec = VisionSpec(kind="convolutional", input_size=(32, 32), hidden_size=16)
    torch.manual_seed(0)
    enc = build_vision_encoder(spec)
    bright = torch.ones(1, 32, 32)
    dark = torch.zeros(1, 32, 32)
    # normalize_pixels is a fixed affine map, so the two inputs stay distinct
    assert not torch.allclose(enc(bright), enc(dark))


def test_augment_image_contract():
    rng = np.random.default_rng(0)
    img = rng.random((32, 32))
    out = augment_image(img, np.random.default_rng(1))
    assert out.shape == img.shape
    assert out.min() >= 0.0 and out.max() <= 1.0
    with pytest.raises(ValidationError):
        augment_image(img, rng, augmentations=("sharpen",))
    assert set(AUGMENTATIONS) == {"hflip", "vflip", "rotate", "translate"}


def test_augmentations_are_deterministic_per_rng_state():
    img = np.random.default_rng(3).random((24, 24))
    a = augment_image(img, np.random.default_rng(7))
    b = augment_image(img, np.random.default_rng(7))
    assert np.array_equal(a, b)


# --- classifiers ---------------------------------------------------------------


def test_text_classifier_end_to_end_shapes():
    enc = text_encoder()
    model = TextClassifier(enc, ClassificationHead(HeadSpec(input_dim=16)))
    seqs, labels = toy_text_data(8)
    data = TextDataset(seqs, labels, PAD)
    inputs, targets = data.batch(range(8))
    logits = model(**inputs)
    assert logits.shape == (8, 5)


def test_fusion_dim_must_match_pathways():
    enc = text_encoder()
    vspec = VisionSpec(kind="convolutional", input_size=(32, 32), hidden_size=16)
    torch.manual_seed(0)
    venc = build_vision_encoder(vspec)
    good = ClassificationHead(HeadSpec(input_dim=16 + venc.d_out))
    model = MultimodalClassifier(enc, venc, good)
    assert model.fusion_input_dim == 16 + venc.d_out
    bad = ClassificationHead(HeadSpec(input_dim=16 + venc.d_out + 1))
    with pytest.raises(ValidationError):
        MultimodalClassifier(enc, venc, bad)


def test_multimodal_step_reaches_both_pathways():
    enc = text_encoder()
    vspec = VisionSpec(kind="convolutional", input_size=(32, 32), hidden_size=16)
    torch.manual_seed(1)
    venc = build_vision_encoder(vspec)
    model = MultimodalClassifier(
        enc, venc, ClassificationHead(HeadSpec(input_dim=16 + venc.d_out))
    )
    seqs, labels = toy_text_data(6)
    images = [np.random.default_rng(i).random((32, 32)) for i in range(6)]
    data = MultimodalDataset(seqs, images, labels, PAD)
    inputs, targets = data.batch(range(6))
    loss = torch.nn.functional.cross_entropy(model(**inputs), targets)
    loss.backward()
    text_norm = enc.token_emb.weight.grad.norm()
    vision_grads = [p.grad for p in venc.parameters() if p.grad is not None]
    assert float(text_norm) > 0
    assert any(float(g.norm()) > 0 for g in vision_grads)


# --- training loop ---------------------------------------------------------------


def test_train_config_validation():
    with pytest.raises(ValidationError, match="less than max_epochs"):
        TrainConfig(max_epochs=3, early_stop_patience=3)
    with pytest.raises(ValidationError):
        TrainConfig(augmentations=("blur",))
    with pytest.raises(ValidationError):
        TrainConfig(learning_rate=0.0)


def test_frozen_encoder_trains_head_only():
    enc = text_encoder()
    for p in enc.parameters():
        p.requires_grad_(False)
    head = ClassificationHead(HeadSpec(input_dim=16))
    model = TextClassifier(enc, head)
    seqs, labels = toy_text_data(20)
    data = TextDataset(seqs, labels, PAD)
    frozen_before = {k: v.clone() for k, v in enc.state_dict().items()}
    cfg = TrainConfig(max_epochs=2, early_stop_patience=1, batch_size=8, seed=0)
    train_classifier(model, data, data, cfg)
    after = enc.state_dict()
    assert all(torch.equal(frozen_before[k], after[k]) for k in frozen_before)


def test_fully_frozen_model_rejected():
    enc = text_encoder()
    head = ClassificationHead(HeadSpec(input_dim=16))
    model = TextClassifier(enc, head)
    for p in model.parameters():
        p.requires_grad_(False)
    seqs, labels = toy_text_data(8)
    data = TextDataset(seqs, labels, PAD)
    with pytest.raises(ValidationError, match="trainable"):
        train_classifier(model, data, data, TrainConfig(max_epochs=2, early_stop_patience=1))


class _ScriptedValModel(nn.Module):
    """Validation loss follows a prescribed trace, one train batch per epoch.

    The train input drives a real parameter update so best-epoch weight
    restoration is observable; the val forward returns logits engineered
    to hit the scripted cross-entropy exactly.
    """

    def __init__(self, val_losses):
        super().__init__()
        self.w = nn.Parameter(torch.zeros(5))
        self.val_losses = list(val_losses)
        self.epoch = -1  # bumped by each training-mode forward
        self.w_after_epoch = []

    def forward(self, x):
        if self.training:
            self.epoch += 1
            return (self.w * x).unsqueeze(0)
        self.w_after_epoch.append(self.w.detach().clone())
        target_loss = self.val_losses[min(self.epoch, len(self.val_losses) - 1)]
        # CE([a,0,0,0,0], class 0) = log(e^a + 4) - a  ->  a = log(4 / (e^L - 1))
        a = math.log(4.0 / (math.exp(target_loss) - 1.0))
        logits = torch.zeros(1, 5)
        logits[0, 0] = a
        return logits


class _OneBatch:
    def __init__(self):
        self.x = torch.ones(5)

    def __len__(self):
        return 1

    def batch(self, indices, augment_rng=None, augmentations=()):
        return {"x": self.x}, torch.tensor([0])


def test_early_stopping_returns_best_epoch_weights():
    trace = [0.9, 0.8, 0.82, 0.83, 0.84]
    model = _ScriptedValModel(trace)
    data = _OneBatch()
    cfg = TrainConfig(learning_rate=0.1, max_epochs=10, early_stop_patience=3,
                      batch_size=1, seed=0)
    result = train_classifier(model, data, data, cfg)
    # epochs 0..4 run, epoch 1 is best, patience exhausts after epoch 4
    assert len(result.history) == 5
    assert result.stopped_early
    assert result.best_epoch == 1
    assert result.best_val_loss == pytest.approx(0.8, abs=1e-6)
    assert [h.val_loss for h in result.history] == [
        pytest.approx(v, abs=1e-6) for v in trace
    ]
    # the restored weights are the ones recorded right after epoch 1
    assert torch.equal(model.w.detach(), model.w_after_epoch[1])


def test_divergence_raises():
    class ExplodingModel(nn.Module):
        def __init__(self):
            super().__init__()
            self.w = nn.Parameter(torch.tensor(1.0))

        def forward(self, x):
            return torch.full((1, 5), float("nan")) * self.w

    with pytest.raises(TrainingDivergenceError):
        train_classifier(
            ExplodingModel(), _OneBatch(), _OneBatch(),
            TrainConfig(max_epochs=2, early_stop_patience=1),
        )


def test_training_learns_separable_toy_data():
    enc = text_encoder(seed=2)
    model = TextClassifier(enc, ClassificationHead(HeadSpec(input_dim=16)))
    seqs, labels = toy_text_data(40, seed=2)
    data = TextDataset(seqs, labels, PAD)
    cfg = TrainConfig(learning_rate=3e-3, max_epochs=12, early_stop_patience=6,
                      batch_size=8, seed=1)
    train_classifier(model, data, data, cfg)
    preds, probs = predict_text(model, seqs, PAD)
    acc = sum(p == t for p, t in zip(preds, labels)) / len(labels)
    assert acc > 0.5
    assert probs.shape == (40, 5)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-5)
    assert all(1 <= p <= 5 for p in preds)
