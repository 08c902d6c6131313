"""featuredump: run a frozen pretrained backbone over an image folder and
write last-convolutional-layer features as FMX or CSV for the classifier
engine to consume."""

from .dump import DumpConfig, DumpSummary, SetupError, dump_features

__version__ = "0.1.0"

__all__ = ["DumpConfig", "DumpSummary", "SetupError", "dump_features"]
