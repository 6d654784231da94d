"""Dense order-3 tensors, order-6 linear operators, and their Einstein-product algebra.

An order-3 tensor over a grid of extents ``(m, n, p)`` is stored as a C-ordered
``numpy.ndarray`` of shape ``(m, n, p)`` with float64 entries.  An order-6
operator acting on such tensors is stored only through its flattened square
matrix: entry ``(i, j, k, i', j', k')`` of the operator sits at
``flat[row, col]`` with

    row = ((i - 1) * n + (j - 1)) * p + (k - 1)        (1-based math indices)

and the same formula for ``col`` over ``(i', j', k')``.  This is exactly the
row-major (C-order) raveling of the ``(m, n, p)`` array, so the 3-mode Einstein
product reduces to a plain matrix-vector product::

    vec(op * x) = flat @ vec(x),      vec(x) = x.ravel(order="C")

All public operations treat their inputs as immutable and are safe to call
concurrently on shared arrays.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Shape3(NamedTuple):
    """Extents of the three tensor modes; all must be >= 1."""

    m: int
    n: int
    p: int

    @property
    def total(self) -> int:
        return self.m * self.n * self.p


def as_shape(shape) -> Shape3:
    """Coerce a 3-sequence of positive integers to :class:`Shape3`."""
    s = Shape3(*(int(v) for v in shape))
    if min(s) < 1:
        raise ValueError(f"tensor extents must be positive, got {tuple(s)}")
    return s


def as_tensor3(data, shape=None) -> np.ndarray:
    """Validate and return an order-3 float64 tensor (contiguous, finite)."""
    x = np.ascontiguousarray(data, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"expected an order-3 tensor, got ndim={x.ndim}")
    if shape is not None and tuple(x.shape) != tuple(shape):
        raise ValueError(f"tensor shape {x.shape} does not match required {tuple(shape)}")
    if not np.isfinite(x).all():
        raise ValueError("tensor contains non-finite entries")
    return x


def _require_same_shape(a_shape, b_shape, what: str) -> None:
    if tuple(a_shape) != tuple(b_shape):
        raise ValueError(f"{what}: shape {tuple(a_shape)} does not match shape {tuple(b_shape)}")


class Operator6:
    """Order-6 linear operator on order-3 tensors, stored as its flattened matrix.

    Parameters
    ----------
    flat : (t, t) ndarray
        Flattened operator matrix, ``t = m * n * p``, under the module-level
        flattening convention.
    shape : 3-sequence
        Extents ``(m, n, p)`` of the tensors the operator acts on.
    """

    def __init__(self, flat, shape):
        self.shape = as_shape(shape)
        flat = np.ascontiguousarray(flat, dtype=np.float64)
        t = self.shape.total
        if flat.shape != (t, t):
            raise ValueError(f"flat matrix shape {flat.shape} does not match {t}x{t} "
                             f"required by tensor shape {tuple(self.shape)}")
        self.flat = flat

    @classmethod
    def identity(cls, shape) -> "Operator6":
        shape = as_shape(shape)
        return cls(np.eye(shape.total), shape)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return einstein_apply(self, x)

    def apply_transpose(self, x: np.ndarray) -> np.ndarray:
        return einstein_apply_transpose(self, x)

    def transpose(self) -> "Operator6":
        return Operator6(self.flat.T.copy(), self.shape)


def einstein_apply(op: Operator6, x: np.ndarray) -> np.ndarray:
    """3-mode Einstein product ``op * x``: contraction of the operator's three
    trailing modes against ``x``.  Equals ``flat @ vec(x)`` reshaped."""
    _require_same_shape(op.shape, x.shape, "einstein_apply")
    y = op.flat @ np.ravel(x)
    if not np.isfinite(y).all():
        raise FloatingPointError("einstein_apply produced non-finite entries")
    return y.reshape(tuple(op.shape))


def einstein_apply_transpose(op: Operator6, x: np.ndarray) -> np.ndarray:
    """Apply the operator transpose: ``vec(result) = flat.T @ vec(x)``."""
    _require_same_shape(op.shape, x.shape, "einstein_apply_transpose")
    y = op.flat.T @ np.ravel(x)
    if not np.isfinite(y).all():
        raise FloatingPointError("einstein_apply_transpose produced non-finite entries")
    return y.reshape(tuple(op.shape))


def inner(x: np.ndarray, y: np.ndarray) -> float:
    """Entrywise inner product <x, y> = sum_ijk x_ijk * y_ijk (the trace form
    tr(x^T * y) of the tensor inner product)."""
    _require_same_shape(x.shape, y.shape, "inner")
    return float(np.dot(np.ravel(x), np.ravel(y)))


def fro_norm(x: np.ndarray) -> float:
    """Frobenius norm sqrt(<x, x>)."""
    return float(np.linalg.norm(np.ravel(x)))


class SliceStack:
    """Ordered stack of equally-shaped order-3 tensors: the 4-mode Krylov basis.

    Slices are the frontal slices of the underlying 4-mode array; the stack is
    immutable after construction.
    """

    def __init__(self, slices):
        slices = [np.asarray(s, dtype=np.float64) for s in slices]
        if not slices:
            raise ValueError("SliceStack requires at least one slice")
        shape = slices[0].shape
        for s in slices[1:]:
            _require_same_shape(shape, s.shape, "SliceStack")
        self.slices = tuple(slices)
        self.shape = as_shape(shape)

    def __len__(self) -> int:
        return len(self.slices)

    def __getitem__(self, i) -> np.ndarray:
        return self.slices[i]

    def __iter__(self):
        return iter(self.slices)

    def truncate(self, count: int) -> "SliceStack":
        return SliceStack(self.slices[:count])

    def gram(self) -> np.ndarray:
        """Matrix of pairwise inner products; identity for an orthonormal stack."""
        flat = np.stack([np.ravel(s) for s in self.slices])
        return flat @ flat.T


def mode4_matmul(stack: SliceStack, w) -> SliceStack:
    """4-mode product of the stack with a matrix.

    ``result[r] = sum_s w[r, s] * stack[s]``; ``w`` has one column per input
    slice and one row per output slice.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[1] != len(stack):
        raise ValueError(f"mode4_matmul: matrix shape {w.shape} does not match "
                         f"stack of {len(stack)} slices")
    arr = np.stack(stack.slices, axis=-1)
    out = np.tensordot(arr, w, axes=([3], [1]))
    return SliceStack([out[..., r] for r in range(w.shape[0])])


def mode4_vecmul(stack: SliceStack, y) -> np.ndarray:
    """4-mode vector product: the linear combination ``sum_s y[s] * stack[s]``."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != len(stack):
        raise ValueError(f"mode4_vecmul: vector length {y.shape} does not match "
                         f"stack of {len(stack)} slices")
    arr = np.stack(stack.slices, axis=-1)
    return np.tensordot(arr, y, axes=([3], [0]))
