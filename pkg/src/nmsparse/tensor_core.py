"""Matrix and mask representations, block tiling and magnitude utilities.

Matrices are plain 2-D ``float64`` numpy arrays and masks are 2-D ``bool``
arrays (``True`` = kept, ``False`` = pruned).  The ``check_*`` helpers below
are the single validation gate every public entry point goes through.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .exceptions import DimensionError, NMSparseError, ShapeMismatch

__all__ = [
    "NmConfig",
    "BlockView",
    "check_matrix",
    "check_mask",
    "check_divisible",
    "iter_row_blocks",
    "iter_square_blocks",
    "masked_l1",
    "pruned_l1",
    "magnitude_order",
    "row_block_view",
    "square_tile_view",
]


@dataclass(frozen=True)
class NmConfig:
    """``n`` zeros required in every run of ``m`` contiguous elements."""

    n: int
    m: int

    def __post_init__(self):
        if isinstance(self.n, bool) or isinstance(self.m, bool):
            raise NMSparseError("n and m must be integers")
        if int(self.n) != self.n or int(self.m) != self.m:
            raise NMSparseError(f"n and m must be integers, got {self.n}:{self.m}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m", int(self.m))
        if not 1 <= self.n < self.m:
            raise NMSparseError(f"need 1 <= n < m, got {self.n}:{self.m}")

    @classmethod
    def parse(cls, text: str) -> "NmConfig":
        """Parse ``"2:4"`` style notation."""
        try:
            n, m = (int(part) for part in text.split(":"))
        except ValueError:
            raise NMSparseError(f"expected 'N:M', got {text!r}") from None
        return cls(n, m)

    @property
    def kept(self) -> int:
        return self.m - self.n

    def __str__(self):
        return f"{self.n}:{self.m}"


class BlockView(NamedTuple):
    row: int
    col: int
    kind: str  # "row-run" (1 x m) or "square" (m x m)
    size: int

    @property
    def slices(self) -> tuple[slice, slice]:
        if self.kind == "row-run":
            return slice(self.row, self.row + 1), slice(self.col, self.col + self.size)
        return slice(self.row, self.row + self.size), slice(self.col, self.col + self.size)


def check_matrix(mat, name: str = "matrix") -> np.ndarray:
    """Return ``mat`` as a finite, C-contiguous 2-D float64 array."""
    arr = np.asarray(mat)
    if arr.dtype == object or arr.dtype.kind not in "biuf":
        raise NMSparseError(f"{name} must be real-valued, got dtype {arr.dtype}")
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise NMSparseError(f"{name} contains NaN or Inf")
    return arr


def check_mask(mask, shape: tuple[int, int] | None = None, name: str = "mask") -> np.ndarray:
    """Return ``mask`` as a 2-D bool array, optionally checking congruence."""
    arr = np.asarray(mask)
    if arr.dtype != bool:
        if arr.dtype.kind not in "biuf" or not np.isin(arr, (0, 1)).all():
            raise NMSparseError(f"{name} must contain only 0 and 1")
        arr = arr.astype(bool)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise ShapeMismatch(f"{name} has shape {arr.shape}, expected {tuple(shape)}")
    return np.ascontiguousarray(arr)


def check_divisible(shape: tuple[int, int], m: int, square: bool = False) -> None:
    rows, cols = shape
    if cols % m:
        raise DimensionError(f"{cols} columns are not divisible by block size {m}")
    if square and rows % m:
        raise DimensionError(f"{rows} rows are not divisible by block size {m}")


def iter_row_blocks(mat, cfg: NmConfig) -> Iterator[BlockView]:
    """Yield the 1 x M runs of ``mat`` in row-major order."""
    arr = np.asarray(mat)
    check_divisible(arr.shape, cfg.m)
    rows, cols = arr.shape
    for i in range(rows):
        for j in range(0, cols, cfg.m):
            yield BlockView(i, j, "row-run", cfg.m)


def iter_square_blocks(mat, cfg: NmConfig) -> Iterator[BlockView]:
    """Yield the non-overlapping M x M tiles of ``mat`` in row-major order."""
    arr = np.asarray(mat)
    check_divisible(arr.shape, cfg.m, square=True)
    rows, cols = arr.shape
    for i in range(0, rows, cfg.m):
        for j in range(0, cols, cfg.m):
            yield BlockView(i, j, "square", cfg.m)


def row_block_view(arr: np.ndarray, m: int) -> np.ndarray:
    """Reshape ``(r, c)`` into ``(r, c // m, m)`` without copying."""
    rows, cols = arr.shape
    return arr.reshape(rows, cols // m, m)


def square_tile_view(arr: np.ndarray, m: int) -> np.ndarray:
    """Return a ``(tiles, m, m)`` copy of the M x M tiles in row-major tile order."""
    rows, cols = arr.shape
    return (
        arr.reshape(rows // m, m, cols // m, m)
        .transpose(0, 2, 1, 3)
        .reshape(-1, m, m)
        .copy()
    )


def untile(tiles: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Inverse of :func:`square_tile_view`."""
    rows, cols = shape
    m = tiles.shape[-1]
    return (
        tiles.reshape(rows // m, cols // m, m, m)
        .transpose(0, 2, 1, 3)
        .reshape(rows, cols)
    )


def magnitude_order(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Indices that sort ``|values|`` ascending; ties resolve to the lower index."""
    return np.argsort(np.abs(values), axis=axis, kind="stable")


def _exact_sum(values: np.ndarray) -> float:
    return math.fsum(values.ravel().tolist())


def masked_l1(mat, mask) -> float:
    """Sum of ``|W_ij|`` over kept positions, correctly rounded."""
    arr = check_matrix(mat)
    bits = check_mask(mask, arr.shape)
    return _exact_sum(np.abs(arr[bits]))


def pruned_l1(mat, mask) -> float:
    """Sum of ``|W_ij|`` over pruned positions."""
    arr = check_matrix(mat)
    bits = check_mask(mask, arr.shape)
    return _exact_sum(np.abs(arr[~bits]))
