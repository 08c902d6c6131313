"""Front-ends that sit between extracted features and the classifier.

Two paths exist: feed feature matrices straight in, or route them through a
connection layer that batch-normalizes random projections and applies a
bounded gaussian radial activation. A swish reference extractor and a global
average pool cover desk-scale feature preparation; real backbone features
arrive through the file loaders. The compound-scaling calculator evaluates
the coupled depth/width/resolution rule used by the scaled backbone family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels, rng
from .errors import DimensionError, StateError
from .linalg import as_matrix

RBF_PEAK = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class FeatureTensor:
    """Spatial feature maps, sample-major (samples, height, width, channels).

    height = width = 1 is allowed and means the features are already pooled.
    """

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 4:
            raise DimensionError(f"feature tensor must be 4-D, got shape {self.data.shape}")
        if not np.isfinite(self.data).all():
            raise ValueError("feature tensor contains non-finite entries")

    @property
    def samples(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def channels(self) -> int:
        return self.data.shape[3]

    @classmethod
    def from_matrix(cls, m, height: int, width: int, channels: int) -> "FeatureTensor":
        """Reshape a (samples x height*width*channels) matrix back into maps."""
        m = as_matrix(m, "features")
        if m.shape[1] != height * width * channels:
            raise DimensionError(
                f"matrix has {m.shape[1]} columns, expected {height * width * channels}"
            )
        return cls(data=m.reshape(m.shape[0], height, width, channels))


def swish_extract(x, w_e, b_e) -> np.ndarray:
    """Reference extractor: swish(X W + b) with swish(t) = t * sigmoid(t)."""
    x = as_matrix(x, "x")
    w_e = as_matrix(w_e, "w_e")
    if x.shape[1] != w_e.shape[0]:
        raise DimensionError(f"input has {x.shape[1]} columns, weights expect {w_e.shape[0]}")
    return kernels.bias_act(x @ w_e, np.asarray(b_e, dtype=np.float64), 1.0, "swish")


def global_average_pool(t: FeatureTensor) -> np.ndarray:
    """Mean over the spatial grid: (samples x channels)."""
    if t.height == 0 or t.width == 0:
        raise DimensionError("cannot pool over an empty spatial grid")
    return t.data.mean(axis=(1, 2))


@dataclass(frozen=True)
class ConnectionLayer:
    """Random linear map + batch-norm statistics + bounded radial activation.

    The projection weights are random and never trained; only the classifier
    behind this layer is solved. Fitting stores the per-unit mean and
    population variance of the pre-activations.
    """

    w_r: np.ndarray  # channels x units
    b_r: np.ndarray  # 1 x units
    bn_eps: float = 1e-5
    rbf_kind: str = "gaussian"  # or "laplace"
    bn_mean: np.ndarray | None = None
    bn_var: np.ndarray | None = None
    fitted: bool = False

    def __post_init__(self):
        if self.rbf_kind not in kernels.RBF_CODES:
            raise ValueError(f"radial kind must be one of {tuple(kernels.RBF_CODES)}")
        if self.bn_eps <= 0:
            raise ValueError("bn_eps must be positive")
        if self.fitted and (self.bn_mean is None or self.bn_var is None):
            raise StateError("fitted layer must carry batch statistics")
        if self.bn_var is not None and (self.bn_var < 0).any():
            raise ValueError("variances must be nonnegative")

    @property
    def units(self) -> int:
        return self.w_r.shape[1]

    @classmethod
    def random(
        cls, channels: int, units: int, seed: int, rbf_kind: str = "gaussian"
    ) -> "ConnectionLayer":
        g = rng.stream_rng(seed, rng.CONNECTION, 0)
        return cls(
            w_r=g.uniform(-1.0, 1.0, (channels, units)),
            b_r=g.uniform(-1.0, 1.0, (1, units)),
            rbf_kind=rbf_kind,
        )


def connection_fit(m, layer: ConnectionLayer) -> ConnectionLayer:
    """Store batch statistics of the pre-activations M W + b on the layer."""
    m = as_matrix(m, "m")
    if m.shape[1] != layer.w_r.shape[0]:
        raise DimensionError(f"input has {m.shape[1]} columns, layer expects {layer.w_r.shape[0]}")
    if m.shape[0] < 2:
        raise ValueError("need at least 2 rows to estimate batch statistics")
    p = m @ layer.w_r + layer.b_r
    return replace(
        layer,
        bn_mean=p.mean(axis=0),
        bn_var=p.var(axis=0),
        fitted=True,
    )


def connection_forward(m, layer: ConnectionLayer) -> np.ndarray:
    """Normalize the pre-activations with the stored statistics and apply the
    bounded radial activation; outputs lie in (0, 1/sqrt(2*pi)]."""
    if not layer.fitted:
        raise StateError("connection layer must be fitted before forward")
    m = as_matrix(m, "m")
    if m.shape[1] != layer.w_r.shape[0]:
        raise DimensionError(f"input has {m.shape[1]} columns, layer expects {layer.w_r.shape[0]}")
    p = m @ layer.w_r
    return kernels.bn_rbf(p, layer.b_r, layer.bn_mean, layer.bn_var, layer.bn_eps, layer.rbf_kind)


@dataclass(frozen=True)
class ScalingConfig:
    """Base multipliers for depth/width/resolution and the scaling exponent."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    lam: float = 0.0

    def __post_init__(self):
        if self.alpha < 1 or self.beta < 1 or self.gamma < 1:
            raise ValueError("alpha, beta, gamma must each be at least 1")
        if self.lam < 0:
            raise ValueError("scaling exponent must be nonnegative")


@dataclass(frozen=True)
class ScalingResult:
    depth: float
    width: float
    resolution: float
    flops_multiplier: float
    constraint_residual: float


def compound_scaling(cfg: ScalingConfig) -> ScalingResult:
    """Evaluate the coupled scaling rule.

    depth = alpha^lam, width = beta^lam, resolution = gamma^lam; compute cost
    scales as depth * width^2 * resolution^2, and the base multipliers are
    meant to satisfy alpha * beta^2 * gamma^2 = 2 (the residual reports how
    far the config is from that)."""
    d = cfg.alpha**cfg.lam
    w = cfg.beta**cfg.lam
    r = cfg.gamma**cfg.lam
    return ScalingResult(
        depth=d,
        width=w,
        resolution=r,
        flops_multiplier=d * w * w * r * r,
        constraint_residual=cfg.alpha * cfg.beta**2 * cfg.gamma**2 - 2.0,
    )
