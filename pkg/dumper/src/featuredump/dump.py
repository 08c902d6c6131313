"""Dump frozen-backbone features for every image in a folder.

Images in class subdirectories get integer labels from the sorted
subdirectory names; images directly in the folder make an unlabeled dump.
Files that cannot be decoded are skipped with a warning and recorded in the
summary. Runs are deterministic: eval mode, no augmentation, fixed resize to
the backbone's native resolution, stable (sorted) image order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torchvision.transforms import functional as TF

from . import backbones, writers
from .dump_errors import SetupError

log = logging.getLogger("featuredump")

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".webp"}
FORMATS = ("fmx", "csv")
_BATCH = 8


@dataclass(frozen=True)
class DumpConfig:
    backbone: str
    images: Path
    out: Path
    fmt: str = "fmx"
    pooled: bool = True
    weights: str = "imagenet"  # or "random" (seeded, for offline use)
    seed: int = 0

    def __post_init__(self):
        if self.fmt not in FORMATS:
            raise SetupError(f"format must be one of {FORMATS}")


@dataclass
class DumpSummary:
    count: int
    dims: int
    out: str
    backbone: str
    fmt: str
    pooled: bool
    labeled: bool
    height: int
    width: int
    channels: int
    skipped: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "dims": self.dims,
            "out": self.out,
            "backbone": self.backbone,
            "format": self.fmt,
            "pooled": self.pooled,
            "labeled": self.labeled,
            "height": self.height,
            "width": self.width,
            "channels": self.channels,
            "skipped": self.skipped,
        }


def _collect(folder: Path) -> tuple[list[tuple[Path, int | None]], bool]:
    if not folder.is_dir():
        raise SetupError(f"{folder}: not a directory")
    top = sorted(
        p for p in folder.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )
    if top:
        return [(p, None) for p in top], False
    classes = sorted(p.name for p in folder.iterdir() if p.is_dir())
    entries: list[tuple[Path, int | None]] = []
    for label, cls in enumerate(classes):
        for p in sorted((folder / cls).iterdir()):
            if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES:
                entries.append((p, label))
    if not entries:
        raise SetupError(f"{folder}: no images found")
    return entries, True


def _load_image(path: Path, resolution: int) -> torch.Tensor:
    with Image.open(path) as img:
        img = img.convert("RGB")
        t = TF.pil_to_tensor(img).to(torch.float32) / 255.0
    t = TF.resize(t, [resolution, resolution], antialias=True)
    return TF.normalize(t, backbones.NORM_MEAN, backbones.NORM_STD)


def dump_features(cfg: DumpConfig) -> DumpSummary:
    """Run the frozen backbone over the folder and write one feature row per
    decodable image. Returns the summary (count, dims, output path, skips)."""
    features, resolution = backbones.build(cfg.backbone, cfg.weights, cfg.seed)
    entries, labeled = _collect(Path(cfg.images))

    kept: list[tuple[Path, int | None]] = []
    tensors: list[torch.Tensor] = []
    skipped: list[str] = []
    for path, label in entries:
        try:
            tensors.append(_load_image(path, resolution))
        except Exception as exc:
            log.warning("skipping %s: %s", path, exc)
            skipped.append(str(path.relative_to(cfg.images)))
            continue
        kept.append((path, label))
    if not kept:
        raise SetupError(f"{cfg.images}: no decodable images")

    blocks = []
    spatial = None
    with torch.no_grad():
        for start in range(0, len(tensors), _BATCH):
            batch = torch.stack(tensors[start : start + _BATCH])
            maps = features(batch)  # (n, channels, height, width)
            spatial = (maps.shape[2], maps.shape[3], maps.shape[1])
            if cfg.pooled:
                blocks.append(maps.mean(dim=(2, 3)).to(torch.float64).numpy())
            else:
                # sample-major (height, width, channels) layout, flattened
                blocks.append(
                    maps.permute(0, 2, 3, 1).reshape(maps.shape[0], -1)
                    .to(torch.float64).numpy()
                )
    x = np.vstack(blocks)
    height, width, channels = spatial
    if cfg.pooled:
        height = width = 1

    labels = np.array([label for _, label in kept], dtype=np.int64) if labeled else None
    ids = [str(p.relative_to(cfg.images)) for p, _ in kept]
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if cfg.fmt == "fmx":
        writers.write_fmx(out, x, labels)
    else:
        writers.write_csv(out, x, labels, ids)

    return DumpSummary(
        count=x.shape[0],
        dims=x.shape[1],
        out=str(out),
        backbone=cfg.backbone,
        fmt=cfg.fmt,
        pooled=cfg.pooled,
        labeled=labeled,
        height=height,
        width=width,
        channels=channels,
        skipped=skipped,
    )
