"""Declarative experiment configuration.

A single YAML file drives the whole benchmark: corpus source, grammar,
normalization, vocabulary, encoder and classifier settings, and the
evaluation protocol.  Every randomized stage has an explicit seed; seeds
not set in the file are derived from the global seed and recorded in the
resolved form that the run manifest stores, so a manifest always pins the
exact values used.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
import yaml

from ..classifiers.training import TrainConfig
from ..classifiers.vision import VisionSpec
from ..corpus.records import CorpusSpec
from ..encoders.mlm import MlmConfig
from ..errors import ValidationError
from ..preprocess.normalize import NormalizationConfig

ARMS = ("text-generic", "text-da", "vision", "multimodal")

_TEXT_ARMS = ("text-generic", "text-da")
_IMAGE_ARMS = ("vision", "multimodal")


def derive_seed(master: int, *tags: int) -> int:
    """Stable sub-seed from the master seed and integer tags."""
    return int(np.random.SeedSequence((master,) + tags).generate_state(1)[0])


def _take(raw: Dict[str, Any], allowed, context: str) -> Dict[str, Any]:
    unknown = set(raw) - set(allowed)
    if unknown:
        raise ValidationError(f"{context}: unknown keys {sorted(unknown)}")
    return dict(raw)


def _tupled(value):
    return tuple(value) if isinstance(value, list) else value


@dataclass(frozen=True)
class CorpusSource:
    """Either a path to an existing corpus directory or generation settings."""

    path: Optional[str] = None
    n_exams: int = 2000
    seed: int = 11
    unlabeled_fraction: float = 0.2
    n_dictators: int = 44
    image_size: Tuple[int, int] = (64, 64)
    with_images: bool = True

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "CorpusSource":
        data = _take(raw, [f.name for f in fields(cls)], "corpus")
        if "image_size" in data:
            data["image_size"] = _tupled(data["image_size"])
        return cls(**data)

    def to_corpus_spec(self) -> CorpusSpec:
        return CorpusSpec(
            n_exams=self.n_exams,
            seed=self.seed,
            unlabeled_fraction=self.unlabeled_fraction,
            n_dictators=self.n_dictators,
            image_size=self.image_size,
            with_images=self.with_images,
        )


@dataclass(frozen=True)
class VocabSettings:
    size: int = 1500
    min_pair_frequency: int = 2
    generic_texts: int = 3000
    generic_seed: int = 17

    def __post_init__(self):
        if self.size < 50:
            raise ValidationError("vocab size must be at least 50")
        if self.generic_texts < 1:
            raise ValidationError("generic_texts must be positive")

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "VocabSettings":
        return cls(**_take(raw, [f.name for f in fields(cls)], "vocab"))


@dataclass(frozen=True)
class EncoderSettings:
    n_layers: int = 2
    n_heads: int = 4
    hidden_size: int = 64
    ff_size: int = 128
    max_positions: int = 512
    dropout: float = 0.1

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "EncoderSettings":
        return cls(**_take(raw, [f.name for f in fields(cls)], "encoder"))


@dataclass(frozen=True)
class AdaptSettings:
    """Domain-adaptation MLM settings plus the perplexity holdout slice."""

    mlm: MlmConfig = field(default_factory=MlmConfig)
    holdout_fraction: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.holdout_fraction < 0.5:
            raise ValidationError("holdout_fraction must lie in (0, 0.5)")

    @classmethod
    def from_dict(
        cls, raw: Dict[str, Any], default_seed: Optional[int] = None
    ) -> "AdaptSettings":
        data = _take(raw, ("mlm", "holdout_fraction"), "adapt")
        mlm_raw = data.pop("mlm", {})
        return cls(
            mlm=_mlm_config_from_dict(mlm_raw, "adapt.mlm", default_seed), **data
        )


@dataclass(frozen=True)
class ExpertSettings:
    n_cases: int = 50
    agreement_rate: float = 0.66
    seed: int = 9

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "ExpertSettings":
        return cls(**_take(raw, [f.name for f in fields(cls)], "evaluation.expert"))


@dataclass(frozen=True)
class EvalSettings:
    n_iterations: int = 7
    fractions: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    weighting: str = "linear"
    stratified: bool = False
    expert: ExpertSettings = field(default_factory=ExpertSettings)

    def __post_init__(self):
        if self.n_iterations < 2:
            raise ValidationError("n_iterations must be at least 2 (SD needs two folds)")
        if self.weighting not in ("linear", "quadratic"):
            raise ValidationError("weighting must be linear or quadratic")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ValidationError("fractions must sum to 1")

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "EvalSettings":
        data = _take(raw, [f.name for f in fields(cls)], "evaluation")
        if "fractions" in data:
            data["fractions"] = _tupled(data["fractions"])
        if "expert" in data:
            data["expert"] = ExpertSettings.from_dict(data["expert"])
        return cls(**data)


def _train_config_from_dict(raw: Dict[str, Any], context: str) -> TrainConfig:
    data = _take(raw, [f.name for f in fields(TrainConfig)], context)
    if "augmentations" in data:
        data["augmentations"] = _tupled(data["augmentations"])
    return TrainConfig(**data)


def _mlm_config_from_dict(
    raw: Dict[str, Any], context: str, default_seed: Optional[int] = None
) -> MlmConfig:
    data = _take(raw, [f.name for f in fields(MlmConfig)], context)
    if "mask_action_split" in data:
        data["mask_action_split"] = _tupled(data["mask_action_split"])
    if "seed" not in data and default_seed is not None:
        data["seed"] = default_seed
    return MlmConfig(**data)


def _vision_spec_from_dict(raw: Dict[str, Any]) -> VisionSpec:
    data = _take(raw, [f.name for f in fields(VisionSpec)], "vision")
    if "input_size" in data:
        data["input_size"] = _tupled(data["input_size"])
    return VisionSpec(**data)


def bundled_config_path(name: str) -> Path:
    """Path of a packaged config resource (desk_bench.yaml, grammar, ...)."""
    ref = resources.files("deauville") / "configs" / name
    path = Path(str(ref))
    if not path.exists():
        raise ValidationError(f"no bundled config named {name!r}")
    return path


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    workers: int = 1
    arms: Tuple[str, ...] = ARMS
    corpus: CorpusSource = field(default_factory=CorpusSource)
    grammar_path: Optional[str] = None
    normalization: NormalizationConfig = field(default_factory=NormalizationConfig)
    vocab: VocabSettings = field(default_factory=VocabSettings)
    input_limit: int = 160
    encoder: EncoderSettings = field(default_factory=EncoderSettings)
    pretrain: MlmConfig = field(default_factory=lambda: MlmConfig(epochs=2))
    adapt: AdaptSettings = field(default_factory=AdaptSettings)
    train_text: TrainConfig = field(default_factory=TrainConfig)
    train_vision: TrainConfig = field(default_factory=TrainConfig)
    train_multimodal: TrainConfig = field(default_factory=TrainConfig)
    vision: VisionSpec = field(default_factory=VisionSpec)
    evaluation: EvalSettings = field(default_factory=EvalSettings)

    def __post_init__(self):
        if self.workers < 1:
            raise ValidationError("workers must be at least 1")
        if not self.arms:
            raise ValidationError("at least one arm is required")
        unknown = set(self.arms) - set(ARMS)
        if unknown:
            raise ValidationError(f"unknown arms {sorted(unknown)}; known: {ARMS}")
        if len(set(self.arms)) != len(self.arms):
            raise ValidationError("arms must be unique")
        if self.input_limit < 8:
            raise ValidationError("input_limit must be at least 8")
        if self.encoder.max_positions < self.input_limit:
            raise ValidationError("encoder max_positions must cover input_limit")
        needs_images = set(self.arms) & set(_IMAGE_ARMS)
        if needs_images and self.corpus.path is None and not self.corpus.with_images:
            raise ValidationError(
                f"arms {sorted(needs_images)} need images; set corpus.with_images"
            )
        if "multimodal" in self.arms and "text-da" not in self.arms:
            # the fusion arm reuses the adapted text encoder
            raise ValidationError("multimodal arm requires text-da in arms")

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "ExperimentConfig":
        top = _take(
            raw,
            (
                "seed",
                "workers",
                "arms",
                "corpus",
                "grammar",
                "normalization",
                "vocab",
                "input_limit",
                "encoder",
                "pretrain",
                "adapt",
                "train",
                "vision",
                "evaluation",
            ),
            "config",
        )
        kwargs: Dict[str, Any] = {}
        for key in ("seed", "workers", "input_limit"):
            if key in top:
                kwargs[key] = top[key]
        master = int(kwargs.get("seed", 0))
        if "arms" in top:
            kwargs["arms"] = tuple(top["arms"])
        if "corpus" in top:
            kwargs["corpus"] = CorpusSource.from_dict(top["corpus"])
        if "grammar" in top:
            kwargs["grammar_path"] = top["grammar"]
        if "normalization" in top:
            norm = _take(
                top["normalization"],
                [f.name for f in fields(NormalizationConfig)],
                "normalization",
            )
            if "synonym_map" in norm:
                norm["synonym_map"] = tuple(tuple(pair) for pair in norm["synonym_map"])
            kwargs["normalization"] = NormalizationConfig(**norm)
        if "vocab" in top:
            kwargs["vocab"] = VocabSettings.from_dict(top["vocab"])
        if "encoder" in top:
            kwargs["encoder"] = EncoderSettings.from_dict(top["encoder"])
        kwargs["pretrain"] = _mlm_config_from_dict(
            top.get("pretrain", {"epochs": 2}), "pretrain", derive_seed(master, 2)
        )
        kwargs["adapt"] = AdaptSettings.from_dict(
            top.get("adapt", {}), derive_seed(master, 3)
        )
        if "train" in top:
            train = _take(top["train"], ("text", "vision", "multimodal"), "train")
            for kind, attr in (
                ("text", "train_text"),
                ("vision", "train_vision"),
                ("multimodal", "train_multimodal"),
            ):
                if kind in train:
                    kwargs[attr] = _train_config_from_dict(train[kind], f"train.{kind}")
        if "vision" in top:
            kwargs["vision"] = _vision_spec_from_dict(top["vision"])
        if "evaluation" in top:
            kwargs["evaluation"] = EvalSettings.from_dict(top["evaluation"])
        return cls(**kwargs)

    @classmethod
    def from_yaml(cls, path: Path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ValidationError(f"config file not found: {path}")
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ValidationError(f"{path}: config must be a mapping")
        return cls.from_dict(raw)

    def resolved(self) -> Dict[str, Any]:
        """JSON-ready dict of every effective setting, for the manifest."""
        out = {
            "seed": self.seed,
            "workers": self.workers,
            "arms": list(self.arms),
            "corpus": asdict(self.corpus),
            "grammar": self.grammar_path,
            "normalization": asdict(self.normalization),
            "vocab": asdict(self.vocab),
            "input_limit": self.input_limit,
            "encoder": asdict(self.encoder),
            "pretrain": asdict(self.pretrain),
            "adapt": asdict(self.adapt),
            "train": {
                "text": asdict(self.train_text),
                "vision": asdict(self.train_vision),
                "multimodal": asdict(self.train_multimodal),
            },
            "vision": asdict(self.vision),
            "evaluation": asdict(self.evaluation),
        }
        return json.loads(json.dumps(out))

    def config_hash(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def resolve_grammar_path(self) -> Path:
        if self.grammar_path is None:
            return bundled_config_path("default_grammar.txt")
        return Path(self.grammar_path)

    def validate_paths(self) -> None:
        """Check referenced files before any compute."""
        grammar = self.resolve_grammar_path()
        if not grammar.exists():
            raise ValidationError(f"grammar file not found: {grammar}")
        if self.corpus.path is not None:
            corpus_dir = Path(self.corpus.path)
            if not (corpus_dir / "manifest.json").exists():
                raise ValidationError(f"corpus manifest not found under {corpus_dir}")

    def train_config_for(self, arm: str) -> TrainConfig:
        if arm in _TEXT_ARMS:
            return self.train_text
        if arm == "vision":
            return self.train_vision
        if arm == "multimodal":
            return self.train_multimodal
        raise ValidationError(f"unknown arm {arm!r}")


def config_from_mapping_or_yaml(source) -> ExperimentConfig:
    if isinstance(source, ExperimentConfig):
        return source
    if isinstance(source, dict):
        return ExperimentConfig.from_dict(source)
    return ExperimentConfig.from_yaml(Path(source))
