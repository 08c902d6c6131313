"""Versioned binary serialization for trained models.

See docs/model-format.md for the byte-level layout. Everything is
little-endian; matrices are u32 rows, u32 cols, then rows*cols float64 values
in row-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .bls_core import (
    ENHANCEMENT_ACTIVATIONS,
    FEATURE_ACTIVATIONS,
    BlsModel,
    EnhancementBank,
    EnhancementGroup,
    FeatureBank,
    FeatureWindow,
    HyperParams,
    LayoutBlock,
)
from .errors import ParseError
from .frontend import ConnectionLayer
from .kernels import RBF_CODES
from .linalg import PinvState

MAGIC = b"BLSM"
VERSION = 1

_FLAG_PINV = 1
_FLAG_CONNECTION = 2
_FLAG_HASH = 4

_RBF_NAMES = {code: name for name, code in RBF_CODES.items()}


class _Writer:
    def __init__(self):
        self.parts: list[bytes] = []

    def raw(self, b: bytes):
        self.parts.append(b)

    def pack(self, fmt: str, *vals):
        self.parts.append(struct.pack("<" + fmt, *vals))

    def matrix(self, m: np.ndarray):
        m = np.ascontiguousarray(m, dtype="<f8")
        self.pack("II", m.shape[0], m.shape[1])
        self.raw(m.tobytes())

    def bytes(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.off = 0

    def raw(self, n: int) -> bytes:
        if self.off + n > len(self.blob):
            raise ParseError("model file truncated")
        out = self.blob[self.off : self.off + n]
        self.off += n
        return out

    def unpack(self, fmt: str):
        fmt = "<" + fmt
        return struct.unpack(fmt, self.raw(struct.calcsize(fmt)))

    def matrix(self) -> np.ndarray:
        rows, cols = self.unpack("II")
        data = np.frombuffer(self.raw(rows * cols * 8), dtype="<f8")
        # copy: frombuffer views are read-only, the model owns its arrays
        return data.reshape(rows, cols).copy()


def model_to_bytes(model: BlsModel, connection: ConnectionLayer | None = None) -> bytes:
    w = _Writer()
    flags = 0
    if model.pinv_state is not None:
        flags |= _FLAG_PINV
    if connection is not None:
        flags |= _FLAG_CONNECTION
    if model.train_hash is not None:
        flags |= _FLAG_HASH
    w.raw(MAGIC)
    w.pack("HB", VERSION, flags)
    w.pack("II", model.input_dim, model.classes)
    h = model.hyper
    w.pack("III", h.n1, h.n2, h.n3)
    w.pack("ddq", h.lam, h.shrink, h.seed)
    w.pack(
        "BB",
        FEATURE_ACTIVATIONS.index(h.feature_activation),
        ENHANCEMENT_ACTIVATIONS.index(h.enhancement_activation),
    )
    w.matrix(model.scaler_mean)
    w.matrix(model.scaler_std)
    w.pack("I", len(model.features.windows))
    for win in model.features.windows:
        w.matrix(win.w)
        w.matrix(win.b)
    w.pack("I", len(model.enhancements.groups))
    for grp in model.enhancements.groups:
        w.matrix(grp.w)
        w.matrix(grp.b)
    w.pack("I", len(model.layout))
    for blk in model.layout:
        w.pack("BII", 0 if blk.kind == "feature" else 1, blk.start, blk.count)
    w.matrix(model.w_out)
    if flags & _FLAG_HASH:
        w.raw(model.train_hash)
    if flags & _FLAG_PINV:
        w.matrix(model.pinv_state.a)
        w.matrix(model.pinv_state.a_pinv)
    if flags & _FLAG_CONNECTION:
        w.matrix(connection.w_r)
        w.matrix(connection.b_r)
        w.matrix(connection.bn_mean.reshape(1, -1))
        w.matrix(connection.bn_var.reshape(1, -1))
        w.pack("dBB", connection.bn_eps, RBF_CODES[connection.rbf_kind], 1 if connection.fitted else 0)
    return w.bytes()


def model_from_bytes(blob: bytes) -> tuple[BlsModel, ConnectionLayer | None]:
    r = _Reader(blob)
    if r.raw(4) != MAGIC:
        raise ParseError("not a model file (bad magic)")
    version, flags = r.unpack("HB")
    if version != VERSION:
        raise ParseError(f"unsupported model format version {version}")
    input_dim, classes = r.unpack("II")
    n1, n2, n3 = r.unpack("III")
    lam, shrink, seed = r.unpack("ddq")
    f_act, e_act = r.unpack("BB")
    hyper = HyperParams(
        n1=n1,
        n2=n2,
        n3=n3,
        lam=lam,
        feature_activation=FEATURE_ACTIVATIONS[f_act],
        enhancement_activation=ENHANCEMENT_ACTIVATIONS[e_act],
        shrink=shrink,
        seed=seed,
    )
    scaler_mean = r.matrix()
    scaler_std = r.matrix()
    (n_windows,) = r.unpack("I")
    windows = tuple(FeatureWindow(w=r.matrix(), b=r.matrix()) for _ in range(n_windows))
    (n_groups,) = r.unpack("I")
    groups = tuple(EnhancementGroup(w=r.matrix(), b=r.matrix()) for _ in range(n_groups))
    (n_blocks,) = r.unpack("I")
    layout = []
    for _ in range(n_blocks):
        kind, start, count = r.unpack("BII")
        layout.append(LayoutBlock("feature" if kind == 0 else "enhancement", start, count))
    w_out = r.matrix()
    train_hash = r.raw(32) if flags & _FLAG_HASH else None
    pinv_state = None
    if flags & _FLAG_PINV:
        a = r.matrix()
        a_pinv = r.matrix()
        pinv_state = PinvState(a=a, a_pinv=a_pinv)
    connection = None
    if flags & _FLAG_CONNECTION:
        w_r = r.matrix()
        b_r = r.matrix()
        bn_mean = r.matrix().reshape(-1)
        bn_var = r.matrix().reshape(-1)
        eps, kind, fitted = r.unpack("dBB")
        connection = ConnectionLayer(
            w_r=w_r,
            b_r=b_r,
            bn_eps=eps,
            rbf_kind=_RBF_NAMES[kind],
            bn_mean=bn_mean,
            bn_var=bn_var,
            fitted=bool(fitted),
        )
    if r.off != len(blob):
        raise ParseError("trailing bytes after model payload")
    model = BlsModel(
        hyper=hyper,
        input_dim=input_dim,
        classes=classes,
        scaler_mean=scaler_mean,
        scaler_std=scaler_std,
        features=FeatureBank(windows=windows),
        enhancements=EnhancementBank(groups=groups),
        layout=tuple(layout),
        w_out=w_out,
        pinv_state=pinv_state,
        train_hash=train_hash,
    )
    return model, connection


def save_model(path, model: BlsModel, connection: ConnectionLayer | None = None) -> None:
    Path(path).write_bytes(model_to_bytes(model, connection))


def load_model(path) -> tuple[BlsModel, ConnectionLayer | None]:
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"{path}: no such file")
    return model_from_bytes(path.read_bytes())
