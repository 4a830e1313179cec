from .heads import ClassificationHead, HeadSpec
from .vision import (
    AUGMENTATIONS,
    ConvEncoder,
    PatchTransformer,
    VisionSpec,
    augment_image,
    build_vision_encoder,
)
from .models import (
    MultimodalClassifier,
    TextClassifier,
    VisionClassifier,
    predict_multimodal,
    predict_text,
    predict_vision,
)
from .training import (
    EpochStats,
    MultimodalDataset,
    TextDataset,
    TrainConfig,
    TrainResult,
    VisionDataset,
    train_classifier,
)

__all__ = [
    "HeadSpec",
    "ClassificationHead",
    "VisionSpec",
    "PatchTransformer",
    "ConvEncoder",
    "build_vision_encoder",
    "AUGMENTATIONS",
    "augment_image",
    "TextClassifier",
    "VisionClassifier",
    "MultimodalClassifier",
    "predict_text",
    "predict_vision",
    "predict_multimodal",
    "TrainConfig",
    "TrainResult",
    "EpochStats",
    "TextDataset",
    "VisionDataset",
    "MultimodalDataset",
    "train_classifier",
]
