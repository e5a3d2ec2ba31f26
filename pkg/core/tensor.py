"""Dense 3-order tensors (parts x features x persons) and their mode algebra.

Storage follows the mode-1-fastest convention: element (i, j, k) of a tensor with
dims (m1, m2, m3) lives at flat index ``i + j*m1 + k*m1*m2``. Unfoldings order
their columns with the lower remaining mode varying fastest. Both conventions are
exactly numpy's Fortran ordering, which is what every function here relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from core.errors import InvalidModeError, ShapeMismatchError

Matrix = NDArray[np.float64]
Vector = NDArray[np.float64]
ModeIndex = Literal[1, 2, 3]
Dims = tuple[int, int, int]


def _check_mode(mode: int, *, allowed: tuple[int, ...] = (1, 2, 3)) -> int:
    if mode not in allowed:
        raise InvalidModeError(f"mode must be one of {allowed}, got {mode!r}")
    return int(mode)


@dataclass(frozen=True)
class Tensor3:
    """Immutable dense 3-order tensor backed by a read-only float64 array."""

    data: NDArray[np.float64]

    def __post_init__(self) -> None:
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim != 3:
            raise ShapeMismatchError(f"Tensor3 needs a 3-d array, got {arr.ndim}-d")
        if min(arr.shape) < 1:
            raise ShapeMismatchError(f"Tensor3 dims must all be >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Tensor3 elements must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_flat(cls, dims: Dims, flat: ArrayLike) -> Tensor3:
        values = np.asarray(flat, dtype=np.float64).ravel()
        expected = int(np.prod(dims))
        if values.size != expected:
            raise ShapeMismatchError(f"flat data has {values.size} elements, dims {dims} need {expected}")
        return cls(values.reshape(dims, order="F"))

    @property
    def dims(self) -> Dims:
        m1, m2, m3 = self.data.shape
        return (m1, m2, m3)

    def flat(self) -> Vector:
        """Canonical flat layout (mode-1 fastest)."""
        return self.data.ravel(order="F")

    def __getitem__(self, index: tuple[int, int, int]) -> float:
        return float(self.data[index])


def unfold(t: Tensor3, mode: ModeIndex) -> Matrix:
    """Mode-n unfolding: an m_n x (product of the other dims) matrix."""
    axis = _check_mode(mode) - 1
    moved = np.moveaxis(t.data, axis, 0)
    return np.reshape(moved, (t.dims[axis], -1), order="F")


def fold(m: ArrayLike, mode: ModeIndex, dims: Dims) -> Tensor3:
    """Inverse of `unfold`."""
    axis = _check_mode(mode) - 1
    mat = np.asarray(m, dtype=np.float64)
    rest = [d for n, d in enumerate(dims) if n != axis]
    if mat.ndim != 2 or mat.shape != (dims[axis], rest[0] * rest[1]):
        raise ShapeMismatchError(
            f"cannot fold a {mat.shape} matrix along mode {mode} into dims {tuple(dims)}"
        )
    moved = np.reshape(mat, (dims[axis], rest[0], rest[1]), order="F")
    return Tensor3(np.moveaxis(moved, 0, axis))


def mode_product(t: Tensor3, u: ArrayLike, mode: ModeIndex) -> Tensor3:
    """Project mode 1 or 2 of `t` with `u` (m_mode x l): unfold(result) = u.T @ unfold(t)."""
    axis = _check_mode(mode, allowed=(1, 2)) - 1
    proj = np.asarray(u, dtype=np.float64)
    if proj.ndim != 2 or proj.shape[0] != t.dims[axis] or proj.shape[1] < 1:
        raise ShapeMismatchError(
            f"mode-{mode} projection must be {t.dims[axis]} x l, got {proj.shape}"
        )
    dims = list(t.dims)
    dims[axis] = proj.shape[1]
    return fold(proj.T @ unfold(t, mode), mode, (dims[0], dims[1], dims[2]))


def person_slice(t: Tensor3, k: int) -> Matrix:
    """The m1 x m2 matrix of person `k` (rows are parts, columns are features)."""
    if not 0 <= k < t.dims[2]:
        raise IndexError(f"person index {k} out of range for {t.dims[2]} persons")
    return np.array(t.data[:, :, k])


def vectorize(m: ArrayLike) -> Vector:
    """Column-major flattening."""
    return np.asarray(m, dtype=np.float64).ravel(order="F")
