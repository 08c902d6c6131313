"""Dense matrix operations: SVD pseudoinverse, ridge solves, and the block
column-append pseudoinverse update that makes model growth cheap.

Everything works on 2-D float64 numpy arrays. All functions are pure; the
only module state is the optional SVD watch used by tests to prove that the
append path never factorizes the full augmented matrix.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

# Relative threshold deciding that the residual block C is numerically zero,
# i.e. the appended columns lie in the span of the existing ones.
C_ZERO_RTOL = 1e-10

# When the smallest singular value of the residual block falls below this
# (relative to the appended block), the projection is repeated once before
# inverting: near-deficient residuals amplify the O(eps) span(A) contamination
# a single projection pass leaves behind.
C_REFINE_RTOL = 1e-4

# Singular values below PINV_RTOL * max(rows, cols) * sigma_max are treated as zero.
PINV_RTOL = 1e-12

_svd_watch: list[tuple[int, int]] | None = None


@contextmanager
def watch_svd():
    """Record the shape of every SVD factorization run inside the block.

    Used by tests to assert that incremental growth only factorizes the small
    new-column block, never the full design matrix.
    """
    global _svd_watch
    outer = _svd_watch
    _svd_watch = []
    try:
        yield _svd_watch
    finally:
        _svd_watch = outer


def _svd(a: np.ndarray):
    if _svd_watch is not None:
        _svd_watch.append(a.shape)
    return np.linalg.svd(a, full_matrices=False)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return `a` as a finite 2-D float64 array."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise DimensionError(f"{name} must be a nonempty 2-D array, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return a


def pinv(a) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD with a relative rank cutoff."""
    a = as_matrix(a)
    u, s, vt = _svd(a)
    cutoff = PINV_RTOL * max(a.shape) * s[0]
    inv_s = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return (vt.T * inv_s) @ u.T


def ridge_solve(a, y, lam: float) -> np.ndarray:
    """Return W minimizing ||AW - Y||^2 + lam ||W||^2.

    Solved through the normal equations (primal when cols <= rows, dual
    otherwise); lam = 0 falls back to the pseudoinverse solution.
    """
    a = as_matrix(a, "a")
    y = as_matrix(y, "y")
    if a.shape[0] != y.shape[0]:
        raise DimensionError(f"a has {a.shape[0]} rows but y has {y.shape[0]}")
    if lam < 0:
        raise ValueError("ridge coefficient must be nonnegative")
    if lam == 0.0:
        return pinv(a) @ y
    m, n = a.shape
    if n <= m:
        g = a.T @ a
        g[np.diag_indices(n)] += lam
        return np.linalg.solve(g, a.T @ y)
    g = a @ a.T
    g[np.diag_indices(m)] += lam
    return a.T @ np.linalg.solve(g, y)


@dataclass(frozen=True)
class PinvState:
    """A design matrix together with its pseudoinverse, kept for cheap growth."""

    a: np.ndarray
    a_pinv: np.ndarray

    def __post_init__(self):
        if self.a_pinv.shape != (self.a.shape[1], self.a.shape[0]):
            raise DimensionError(
                f"pseudoinverse shape {self.a_pinv.shape} does not match matrix {self.a.shape}"
            )

    @classmethod
    def from_matrix(cls, a) -> "PinvState":
        a = as_matrix(a)
        return cls(a=a, a_pinv=pinv(a))


def _append_blocks(state: PinvState, new_cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The D and B^T blocks of the column-append update.

    D projects the new columns onto the existing ones; C is what remains.
    When C is numerically nonzero its pseudoinverse gives B^T directly,
    otherwise the new columns are linear combinations of the old and the
    minimum-norm completion (I + D^T D)^-1 D^T A^+ is used.

    A near rank-deficient C gets one reorthogonalization pass: a single
    projection leaves O(eps * ||N||) of span(A) inside C, which the
    pseudoinverse then amplifies by 1/sigma_min(C). Well-conditioned residuals
    skip the extra pass, keeping growth cheap.
    """
    d = state.a_pinv @ new_cols
    c = new_cols - state.a @ d
    scale = max(1.0, float(np.linalg.norm(new_cols)))

    def completion_bt():
        k = d.shape[1]
        g = d.T @ d
        g[np.diag_indices(k)] += 1.0
        return np.linalg.solve(g, d.T @ state.a_pinv)

    def residual_bt(c):
        # C+ = R+ Q^T: QR collapses the tall block before the SVD
        q, r = np.linalg.qr(c, mode="reduced")
        u, s, vt = _svd(r)
        cutoff = PINV_RTOL * max(c.shape) * s[0]
        inv_s = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
        return ((vt.T * inv_s) @ u.T) @ q.T, float(s[-1])

    if np.linalg.norm(c) <= C_ZERO_RTOL * scale:
        return d, completion_bt()
    bt, smin = residual_bt(c)
    if smin < C_REFINE_RTOL * scale:
        d2 = state.a_pinv @ c
        c = c - state.a @ d2
        d = d + d2
        if np.linalg.norm(c) <= C_ZERO_RTOL * scale:
            return d, completion_bt()
        bt, _ = residual_bt(c)
    return d, bt


def _check_append(state: PinvState, new_cols) -> np.ndarray:
    new_cols = as_matrix(new_cols, "new_cols")
    if new_cols.shape[0] != state.a.shape[0]:
        raise DimensionError(
            f"new columns have {new_cols.shape[0]} rows, design matrix has {state.a.shape[0]}"
        )
    return new_cols


def _stacked_pinv(state: PinvState, d: np.ndarray, bt: np.ndarray) -> np.ndarray:
    # [A+ - D B^T; B^T] assembled in place to avoid two full-size temporaries
    n_old, rows = state.a_pinv.shape
    out = np.empty((n_old + bt.shape[0], rows))
    np.matmul(d, bt, out=out[:n_old])
    np.subtract(state.a_pinv, out[:n_old], out=out[:n_old])
    out[n_old:] = bt
    return out


def pinv_append_columns(state: PinvState, new_cols) -> PinvState:
    """State for [A | new_cols] without refactorizing A.

    The updated pseudoinverse stacks A^+ - D B^T above B^T; cost is a few
    products of the existing pseudoinverse with the new block plus one
    factorization of the rows x k residual block.
    """
    new_cols = _check_append(state, new_cols)
    d, bt = _append_blocks(state, new_cols)
    return PinvState(
        a=np.hstack([state.a, new_cols]),
        a_pinv=_stacked_pinv(state, d, bt),
    )


def update_output_weights(w_old, state: PinvState, new_cols, y) -> np.ndarray:
    """Least-squares weights after the column append, from the old weights.

    Returns [W_old - D B^T Y; B^T Y] with D, B^T recomputed exactly as in
    pinv_append_columns. Equals the batch re-solve of the augmented system
    when W_old was the minimum-norm solution for A.
    """
    w_old = as_matrix(w_old, "w_old")
    y = as_matrix(y, "y")
    new_cols = _check_append(state, new_cols)
    if w_old.shape[0] != state.a.shape[1]:
        raise DimensionError(
            f"w_old has {w_old.shape[0]} rows, design matrix has {state.a.shape[1]} columns"
        )
    if y.shape[0] != state.a.shape[0]:
        raise DimensionError(f"y has {y.shape[0]} rows, design matrix has {state.a.shape[0]}")
    d, bt = _append_blocks(state, new_cols)
    bty = bt @ y
    return np.vstack([w_old - d @ bty, bty])


def append_and_update(
    state: PinvState, new_cols, w_old, y
) -> tuple[PinvState, np.ndarray]:
    """pinv_append_columns and update_output_weights in one pass.

    Computes the D/B^T blocks once; this is the path model growth takes.
    """
    new_cols = _check_append(state, new_cols)
    w_old = as_matrix(w_old, "w_old")
    y = as_matrix(y, "y")
    d, bt = _append_blocks(state, new_cols)
    new_state = PinvState(
        a=np.hstack([state.a, new_cols]),
        a_pinv=_stacked_pinv(state, d, bt),
    )
    bty = bt @ y
    new_w = np.vstack([w_old - d @ bty, bty])
    return new_state, new_w
