"""Elementwise hot-path kernels: a compiled core plus a numpy implementation,
dispatched per operation by what is actually faster.

numpy's SIMD-vectorized tanh/exp beat a scalar compiled loop, so the linear,
tanh, relu, and radial passes stay with numpy. The sigmoid family (sigmoid,
swish) needs a numerically stable two-branch form that costs numpy several
masked passes; there the compiled single-pass kernel wins about 2x, so those
route to the extension when it is built. Set BROADLEARN_PURE to force the
numpy implementation everywhere. Run benchmarks/bench_kernels.py for the
comparison on your machine.
"""

import os

import numpy as np

from . import _fallback

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_PURE = bool(os.environ.get("BROADLEARN_PURE"))

ACT_CODES = {"linear": 0, "tanh": 1, "sigmoid": 2, "relu": 3, "swish": 4}
RBF_CODES = {"gaussian": 0, "laplace": 1}

# measured on the bench suite: scalar fused loops only beat numpy where the
# stable formulation forces numpy into multiple masked passes
_COMPILED_ACTS = frozenset(("sigmoid", "swish"))


def backend() -> str:
    """'mixed' when the compiled extension accelerates the sigmoid family,
    'numpy' otherwise."""
    return "numpy" if (_core is None or _PURE) else "mixed"


def bias_act(p: np.ndarray, bias: np.ndarray, scale: float, act: str) -> np.ndarray:
    """p <- act(scale * (p + bias)) in place; returns p. bias is a length-cols row."""
    code = ACT_CODES[act]
    impl = _core if (_core is not None and not _PURE and act in _COMPILED_ACTS) else _fallback
    impl.bias_act(p, np.ascontiguousarray(bias).reshape(-1), float(scale), code)
    return p


def bn_rbf(
    p: np.ndarray,
    bias: np.ndarray,
    mean: np.ndarray,
    var: np.ndarray,
    eps: float,
    kind: str = "gaussian",
) -> np.ndarray:
    """Normalize (p + bias) per unit and apply the bounded radial activation, in place."""
    _fallback.bn_rbf(
        p,
        np.ascontiguousarray(bias).reshape(-1),
        np.ascontiguousarray(mean).reshape(-1),
        np.ascontiguousarray(var).reshape(-1),
        float(eps),
        RBF_CODES[kind],
    )
    return p
