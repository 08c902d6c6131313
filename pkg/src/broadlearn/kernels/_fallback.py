"""Pure-numpy implementations of the elementwise hot-path kernels.

Same call signatures as the compiled core; used when the extension is not
built or when BROADLEARN_PURE is set.
"""

import numpy as np

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _sigmoid_inplace(p: np.ndarray) -> None:
    # exp(-|x|) form: stable for large arguments, vectorized passes only
    neg = p < 0.0
    np.abs(p, out=p)
    np.negative(p, out=p)
    np.exp(p, out=p)
    denom = p + 1.0
    np.divide(np.where(neg, p, 1.0), denom, out=p)


def bias_act(p: np.ndarray, bias: np.ndarray, scale: float, act: int) -> None:
    """In place: p <- act(scale * (p + bias)), bias broadcast over rows."""
    p += bias
    if scale != 1.0:
        p *= scale
    if act == 0:  # linear
        return
    if act == 1:  # tanh
        np.tanh(p, out=p)
    elif act == 2:  # sigmoid
        _sigmoid_inplace(p)
    elif act == 3:  # relu
        np.maximum(p, 0.0, out=p)
    elif act == 4:  # swish
        s = p.copy()
        _sigmoid_inplace(s)
        p *= s
    else:
        raise ValueError(f"unknown activation code {act}")


def bn_rbf(
    p: np.ndarray,
    bias: np.ndarray,
    mean: np.ndarray,
    var: np.ndarray,
    eps: float,
    kind: int,
) -> None:
    """In place: normalize (p + bias) with the stored batch statistics, then
    apply the bounded radial activation (0 = gaussian bump, 1 = laplace bump)."""
    p += bias
    p -= mean
    p /= np.sqrt(var + eps)
    if kind == 0:
        p *= p
        p *= -0.5
    elif kind == 1:
        np.abs(p, out=p)
        p *= -1.0
    else:
        raise ValueError(f"unknown radial kind {kind}")
    np.exp(p, out=p)
    p *= _INV_SQRT_2PI
