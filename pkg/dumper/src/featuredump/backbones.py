"""The supported backbone family: scaled variants, native resolutions, and
weight resolution."""

from __future__ import annotations

import torch
from torchvision import models

from .dump_errors import SetupError

# variant -> (constructor, pretrained weights enum, native input resolution)
FAMILY = {
    "efficientnet-b0": (models.efficientnet_b0, "EfficientNet_B0_Weights", 224),
    "efficientnet-b1": (models.efficientnet_b1, "EfficientNet_B1_Weights", 240),
    "efficientnet-b2": (models.efficientnet_b2, "EfficientNet_B2_Weights", 260),
    "efficientnet-b3": (models.efficientnet_b3, "EfficientNet_B3_Weights", 300),
    "efficientnet-b4": (models.efficientnet_b4, "EfficientNet_B4_Weights", 380),
    "efficientnet-b5": (models.efficientnet_b5, "EfficientNet_B5_Weights", 456),
    "efficientnet-b6": (models.efficientnet_b6, "EfficientNet_B6_Weights", 528),
    "efficientnet-b7": (models.efficientnet_b7, "EfficientNet_B7_Weights", 600),
}

# channel-wise statistics the pretrained weights were trained with
NORM_MEAN = (0.485, 0.456, 0.406)
NORM_STD = (0.229, 0.224, 0.225)


def build(name: str, weights: str, seed: int = 0) -> tuple[torch.nn.Module, int]:
    """Construct the frozen feature extractor.

    weights: "imagenet" loads the pretrained checkpoint (raises SetupError
    when it cannot be obtained), "random" builds a seeded random-weight
    backbone for offline and integration use.
    Returns (feature module in eval mode, native resolution).
    """
    if name not in FAMILY:
        raise SetupError(f"unknown backbone {name!r}; choose one of {sorted(FAMILY)}")
    ctor, weights_enum_name, resolution = FAMILY[name]
    if weights == "imagenet":
        enum = getattr(models, weights_enum_name)
        try:
            net = ctor(weights=enum.IMAGENET1K_V1)
        except Exception as exc:  # download/cache failure
            raise SetupError(f"pretrained weights for {name} unavailable: {exc}") from exc
    elif weights == "random":
        torch.manual_seed(seed)
        net = ctor(weights=None)
    else:
        raise SetupError(f"weights must be 'imagenet' or 'random', got {weights!r}")
    features = net.features
    features.eval()
    for p in features.parameters():
        p.requires_grad_(False)
    return features, resolution


def last_conv_channels(features: torch.nn.Module) -> int:
    """Channel count of the last convolutional stage, inspected at dump time."""
    out = None
    for m in features.modules():
        if isinstance(m, torch.nn.Conv2d):
            out = m.out_channels
    if out is None:
        raise SetupError("backbone has no convolutional layers")
    return out
