"""Build, solve, and incrementally grow the wide random-feature classifier.

The design matrix concatenates feature nodes (random affine windows of the
input) and enhancement nodes (random nonlinear expansions of the feature
layer); output weights come from a closed-form ridge solve. Growth appends
node columns and reuses the cached pseudoinverse through the block update in
`linalg`, so no full refactorization ever happens.

Weights are uniform on [-1, 1], drawn from per-window / per-group streams
(see `rng`), which makes grown and batch-built models share weights exactly.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels, linalg, rng
from .errors import DimensionError, StateError
from .linalg import PinvState, as_matrix

FEATURE_ACTIVATIONS = ("linear", "tanh", "sigmoid")
ENHANCEMENT_ACTIVATIONS = ("tanh", "sigmoid", "relu")

# Training inputs are z-scored per column; columns this close to constant
# keep their raw scale.
_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class HyperParams:
    """Full training configuration.

    n1 feature windows of n2 nodes each, n3 enhancement nodes, ridge
    coefficient lam, activation choices, the scale applied to enhancement
    pre-activations, and the RNG seed.
    """

    n1: int = 10
    n2: int = 10
    n3: int = 200
    lam: float = 1e-8
    feature_activation: str = "linear"
    enhancement_activation: str = "tanh"
    shrink: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1 or self.n3 < 1:
            raise ValueError("n1, n2, n3 must all be at least 1")
        if self.lam < 0:
            raise ValueError("ridge coefficient must be nonnegative")
        if self.shrink <= 0:
            raise ValueError("shrink must be positive")
        if self.feature_activation not in FEATURE_ACTIVATIONS:
            raise ValueError(f"feature activation must be one of {FEATURE_ACTIVATIONS}")
        if self.enhancement_activation not in ENHANCEMENT_ACTIVATIONS:
            raise ValueError(f"enhancement activation must be one of {ENHANCEMENT_ACTIVATIONS}")


@dataclass(frozen=True)
class FeatureWindow:
    w: np.ndarray  # input_dim x width
    b: np.ndarray  # 1 x width

    @property
    def width(self) -> int:
        return self.w.shape[1]


@dataclass(frozen=True)
class FeatureBank:
    """Random affine windows, one stream per window index."""

    windows: tuple[FeatureWindow, ...]

    @staticmethod
    def draw_window(seed: int, index: int, input_dim: int, width: int) -> FeatureWindow:
        g = rng.stream_rng(seed, rng.FEATURE, index)
        return FeatureWindow(
            w=g.uniform(-1.0, 1.0, (input_dim, width)),
            b=g.uniform(-1.0, 1.0, (1, width)),
        )

    @property
    def node_count(self) -> int:
        return sum(w.width for w in self.windows)


@dataclass(frozen=True)
class EnhancementGroup:
    w: np.ndarray  # input_width x size
    b: np.ndarray  # 1 x size

    @property
    def input_width(self) -> int:
        return self.w.shape[0]

    @property
    def size(self) -> int:
        return self.w.shape[1]


@dataclass(frozen=True)
class EnhancementBank:
    """Random nonlinear expansions; each group reads the feature nodes that
    existed when it was created (the leading input_width columns)."""

    groups: tuple[EnhancementGroup, ...]

    @staticmethod
    def draw_group(seed: int, index: int, input_width: int, size: int) -> EnhancementGroup:
        g = rng.stream_rng(seed, rng.ENHANCEMENT, index)
        return EnhancementGroup(
            w=g.uniform(-1.0, 1.0, (input_width, size)),
            b=g.uniform(-1.0, 1.0, (1, size)),
        )

    @property
    def node_count(self) -> int:
        return sum(g.size for g in self.groups)


@dataclass(frozen=True)
class LayoutBlock:
    """One contiguous block of design-matrix columns, in append order."""

    kind: str  # "feature" | "enhancement"
    start: int  # first window/group index
    count: int  # number of windows/groups


@dataclass(frozen=True)
class BlsModel:
    hyper: HyperParams
    input_dim: int
    classes: int
    scaler_mean: np.ndarray
    scaler_std: np.ndarray
    features: FeatureBank
    enhancements: EnhancementBank
    layout: tuple[LayoutBlock, ...]
    w_out: np.ndarray
    pinv_state: PinvState | None = None
    train_hash: bytes | None = None

    @property
    def grow_capable(self) -> bool:
        return self.pinv_state is not None

    @property
    def feature_nodes(self) -> int:
        return self.features.node_count

    @property
    def enhancement_nodes(self) -> int:
        return self.enhancements.node_count

    @property
    def columns(self) -> int:
        return self.feature_nodes + self.enhancement_nodes


def _check_one_hot(y, classes: int | None = None) -> np.ndarray:
    y = as_matrix(y, "labels")
    ok = np.isin(y, (0.0, 1.0)).all() and (y.sum(axis=1) == 1.0).all()
    if not ok:
        raise ValueError("labels must be one-hot rows (0/1 entries summing to 1)")
    if classes is not None and y.shape[1] != classes:
        raise DimensionError(f"labels have {y.shape[1]} classes, model expects {classes}")
    return y


def _data_hash(x: np.ndarray, y: np.ndarray) -> bytes:
    h = hashlib.sha256()
    h.update(repr((x.shape, y.shape)).encode())
    h.update(np.ascontiguousarray(x).tobytes())
    h.update(np.ascontiguousarray(y).tobytes())
    return h.digest()


def _standardize(model: BlsModel, x: np.ndarray) -> np.ndarray:
    return (x - model.scaler_mean) / model.scaler_std


def generate_feature_nodes(x, bank: FeatureBank, act: str) -> np.ndarray:
    """Feature layer Z: per-window act(X W + b), windows concatenated in index order."""
    x = as_matrix(x, "x")
    if act not in FEATURE_ACTIVATIONS:
        raise ValueError(f"feature activation must be one of {FEATURE_ACTIVATIONS}")
    blocks = []
    for win in bank.windows:
        if win.w.shape[0] != x.shape[1]:
            raise DimensionError(
                f"input has {x.shape[1]} columns, window expects {win.w.shape[0]}"
            )
        blocks.append(kernels.bias_act(x @ win.w, win.b, 1.0, act))
    return np.hstack(blocks)


def generate_enhancement_nodes(z, bank: EnhancementBank, act: str, shrink: float) -> np.ndarray:
    """Enhancement layer H: per-group act(shrink * (Z W + b)), groups concatenated.

    Each group consumes the leading input_width columns of Z, which is the
    feature layer as it existed when the group was drawn.
    """
    z = as_matrix(z, "z")
    if act not in ENHANCEMENT_ACTIVATIONS:
        raise ValueError(f"enhancement activation must be one of {ENHANCEMENT_ACTIVATIONS}")
    blocks = []
    for grp in bank.groups:
        if grp.input_width > z.shape[1]:
            raise DimensionError(
                f"feature layer has {z.shape[1]} columns, group expects {grp.input_width}"
            )
        blocks.append(kernels.bias_act(z[:, : grp.input_width] @ grp.w, grp.b, shrink, act))
    return np.hstack(blocks)


def _window_offsets(bank: FeatureBank) -> list[int]:
    offsets = [0]
    for win in bank.windows:
        offsets.append(offsets[-1] + win.width)
    return offsets


def design_matrix(model: BlsModel, x) -> np.ndarray:
    """Assemble the design matrix for raw inputs x, columns in layout order."""
    x = as_matrix(x, "x")
    if x.shape[1] != model.input_dim:
        raise DimensionError(f"input has {x.shape[1]} columns, model expects {model.input_dim}")
    xs = _standardize(model, x)
    z = generate_feature_nodes(xs, model.features, model.hyper.feature_activation)
    h = generate_enhancement_nodes(
        z, model.enhancements, model.hyper.enhancement_activation, model.hyper.shrink
    )
    offsets = _window_offsets(model.features)
    group_offsets = [0]
    for grp in model.enhancements.groups:
        group_offsets.append(group_offsets[-1] + grp.size)
    blocks = []
    for blk in model.layout:
        if blk.kind == "feature":
            blocks.append(z[:, offsets[blk.start] : offsets[blk.start + blk.count]])
        else:
            blocks.append(h[:, group_offsets[blk.start] : group_offsets[blk.start + blk.count]])
    return np.hstack(blocks)


def train(x, labels, hyper: HyperParams, grow_capable: bool = False) -> BlsModel:
    """Fit the model in closed form.

    Draws both banks from the seeded streams, solves the ridge system for the
    output weights, and (when grow_capable) caches the design matrix and its
    pseudoinverse so later growth can use the incremental update.
    """
    x = as_matrix(x, "x")
    y = _check_one_hot(labels)
    if x.shape[0] != y.shape[0]:
        raise DimensionError(f"x has {x.shape[0]} rows but labels have {y.shape[0]}")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 training samples")
    if y.shape[1] < 2 or len(np.unique(np.argmax(y, axis=1))) < 2:
        raise ValueError("need at least 2 classes present in the labels")

    mean = x.mean(axis=0, keepdims=True)
    std = x.std(axis=0, keepdims=True)
    std = np.where(std < _STD_FLOOR, 1.0, std)
    xs = (x - mean) / std

    features = FeatureBank(
        windows=tuple(
            FeatureBank.draw_window(hyper.seed, i, x.shape[1], hyper.n2)
            for i in range(hyper.n1)
        )
    )
    z = generate_feature_nodes(xs, features, hyper.feature_activation)
    enhancements = EnhancementBank(
        groups=(EnhancementBank.draw_group(hyper.seed, 0, z.shape[1], hyper.n3),)
    )
    h = generate_enhancement_nodes(z, enhancements, hyper.enhancement_activation, hyper.shrink)
    a = np.hstack([z, h])
    layout = (LayoutBlock("feature", 0, hyper.n1), LayoutBlock("enhancement", 0, 1))

    if grow_capable:
        state = PinvState.from_matrix(a)
        w_out = state.a_pinv @ y if hyper.lam == 0.0 else linalg.ridge_solve(a, y, hyper.lam)
        train_hash = _data_hash(x, y)
    else:
        state = None
        w_out = linalg.ridge_solve(a, y, hyper.lam)
        train_hash = None

    return BlsModel(
        hyper=hyper,
        input_dim=x.shape[1],
        classes=y.shape[1],
        scaler_mean=mean,
        scaler_std=std,
        features=features,
        enhancements=enhancements,
        layout=layout,
        w_out=w_out,
        pinv_state=state,
        train_hash=train_hash,
    )


def predict_scores(model: BlsModel, x) -> np.ndarray:
    """Raw class scores, rows x classes."""
    return design_matrix(model, x) @ model.w_out


def predict_labels(model: BlsModel, x) -> np.ndarray:
    """Per-row argmax of the scores; ties go to the lowest class index."""
    return np.argmax(predict_scores(model, x), axis=1)


def grow(model: BlsModel, add_n1: int, add_n3: int, x, labels) -> BlsModel:
    """Append add_n1 feature nodes and add_n3 enhancement nodes.

    The feature nodes form one new window, the enhancement nodes one new
    group wired to the enlarged feature layer. Requires the original training
    data (verified by content hash); the cached pseudoinverse is updated by
    the block formula, never refactorized.
    """
    if not model.grow_capable:
        raise StateError("model was trained without grow_capable; cannot grow")
    if add_n1 < 0 or add_n3 < 0:
        raise ValueError("node counts to add must be nonnegative")
    x = as_matrix(x, "x")
    y = _check_one_hot(labels, model.classes)
    if _data_hash(x, y) != model.train_hash:
        raise ValueError("training data does not match the data this model was fitted on")
    if add_n1 == 0 and add_n3 == 0:
        return model

    xs = _standardize(model, x)
    state = model.pinv_state
    new_w = model.w_out

    # Feature columns of the cached design matrix, in window order.
    offsets = _window_offsets(model.features)
    col = 0
    z_parts = []
    for blk in model.layout:
        if blk.kind == "feature":
            width = offsets[blk.start + blk.count] - offsets[blk.start]
            z_parts.append(state.a[:, col : col + width])
            col += width
        else:
            col += sum(
                g.size for g in model.enhancements.groups[blk.start : blk.start + blk.count]
            )
    z_old = z_parts[0] if len(z_parts) == 1 else np.hstack(z_parts)

    features = model.features
    enhancements = model.enhancements
    layout = list(model.layout)

    # The feature and enhancement blocks are appended one after the other.
    # Feature nodes are often close to linear combinations of existing ones
    # while enhancement nodes never are; appending them together would mix a
    # near-zero residual block with a full-rank one, which the branch test
    # cannot split. Chained appends give the same pseudoinverse.
    if add_n1 > 0:
        win = FeatureBank.draw_window(
            model.hyper.seed, len(features.windows), model.input_dim, add_n1
        )
        z_new = kernels.bias_act(xs @ win.w, win.b, 1.0, model.hyper.feature_activation)
        features = FeatureBank(windows=features.windows + (win,))
        layout.append(LayoutBlock("feature", len(features.windows) - 1, 1))
        state, new_w = linalg.append_and_update(state, z_new, new_w, y)
        z_full = np.hstack([z_old, z_new])
    else:
        z_full = z_old

    if add_n3 > 0:
        grp = EnhancementBank.draw_group(
            model.hyper.seed, len(enhancements.groups), z_full.shape[1], add_n3
        )
        h_new = kernels.bias_act(
            z_full @ grp.w, grp.b, model.hyper.shrink, model.hyper.enhancement_activation
        )
        enhancements = EnhancementBank(groups=enhancements.groups + (grp,))
        layout.append(LayoutBlock("enhancement", len(enhancements.groups) - 1, 1))
        state, new_w = linalg.append_and_update(state, h_new, new_w, y)

    new_state = state

    return replace(
        model,
        features=features,
        enhancements=enhancements,
        layout=tuple(layout),
        w_out=new_w,
        pinv_state=new_state,
    )


@dataclass(frozen=True)
class GrowthRecord:
    step: int
    feature_nodes: int
    enhancement_nodes: int
    columns: int
    train_accuracy: float
    seconds: float
    note: str = ""


def _train_accuracy(model: BlsModel, y: np.ndarray) -> float:
    scores = model.pinv_state.a @ model.w_out
    return float(np.mean(np.argmax(scores, axis=1) == np.argmax(y, axis=1)))


def train_until(
    x,
    labels,
    hyper: HyperParams,
    target_accuracy: float,
    step: tuple[int, int],
    max_steps: int,
) -> tuple[BlsModel, list[GrowthRecord]]:
    """Train, then grow by `step` nodes at a time until the training accuracy
    target is met or max_steps growth steps have run.

    Returns the final model and one record per state reached (the initial
    model is record 0). The last record is annotated when the target was not
    reached.
    """
    if not 0.0 < target_accuracy <= 1.0:
        raise ValueError("target accuracy must be in (0, 1]")
    if max_steps < 0:
        raise ValueError("max_steps must be nonnegative")
    add_n1, add_n3 = step

    t0 = time.perf_counter()
    model = train(x, labels, hyper, grow_capable=True)
    y = _check_one_hot(labels)
    acc = _train_accuracy(model, y)
    log = [
        GrowthRecord(
            step=0,
            feature_nodes=model.feature_nodes,
            enhancement_nodes=model.enhancement_nodes,
            columns=model.columns,
            train_accuracy=acc,
            seconds=time.perf_counter() - t0,
        )
    ]
    while acc < target_accuracy and len(log) <= max_steps:
        t0 = time.perf_counter()
        model = grow(model, add_n1, add_n3, x, labels)
        acc = _train_accuracy(model, y)
        log.append(
            GrowthRecord(
                step=len(log),
                feature_nodes=model.feature_nodes,
                enhancement_nodes=model.enhancement_nodes,
                columns=model.columns,
                train_accuracy=acc,
                seconds=time.perf_counter() - t0,
            )
        )
    if acc < target_accuracy:
        log[-1] = replace(log[-1], note="threshold not reached")
    return model, log
