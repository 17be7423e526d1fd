"""Magnitude masks (unstructured, N:M, sequential N:M) and N:M enforcement."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .exceptions import NMSparseError
from .tensor_core import (
    NmConfig,
    check_divisible,
    check_mask,
    check_matrix,
    magnitude_order,
    row_block_view,
)

__all__ = [
    "unstructured_mask",
    "structured_mask",
    "sequential_mask",
    "count_violations",
    "enforce_structured",
]


def unstructured_mask(mat, sparsity: float) -> np.ndarray:
    """Prune the ``floor(sparsity * size)`` smallest magnitudes of the whole matrix.

    A single global threshold is used. Among equal magnitudes the lowest
    row-major index is pruned first.
    """
    arr = check_matrix(mat)
    if not 0 <= sparsity < 1:
        raise NMSparseError(f"sparsity must be in [0, 1), got {sparsity}")
    # decimal reading of the fraction so that 0.29 * 100 gives 29, not 28
    count = math.floor(Fraction(str(float(sparsity))) * arr.size)
    flat = np.ones(arr.size, dtype=bool)
    flat[magnitude_order(arr.ravel())[:count]] = False
    return flat.reshape(arr.shape)


def structured_mask(mat, cfg: NmConfig) -> np.ndarray:
    """Prune exactly the ``n`` smallest magnitudes in every 1 x M run."""
    arr = check_matrix(mat)
    check_divisible(arr.shape, cfg.m)
    blocks = row_block_view(arr, cfg.m)
    order = magnitude_order(blocks, axis=-1)
    keep = np.ones(blocks.shape, dtype=bool)
    np.put_along_axis(keep, order[..., : cfg.n], False, axis=-1)
    return keep.reshape(arr.shape)


def sequential_mask(mat, cfg: NmConfig) -> np.ndarray:
    """Prune, in every 1 x M run, the cheapest window of ``n`` adjacent elements.

    Window cost is the summed magnitude; the leftmost window wins ties.
    """
    arr = check_matrix(mat)
    check_divisible(arr.shape, cfg.m)
    mags = np.abs(row_block_view(arr, cfg.m))
    windows = cfg.m - cfg.n + 1
    # explicit left-to-right sums: equal windows must compare equal bit-for-bit
    cost = mags[..., 0:windows].copy()
    for k in range(1, cfg.n):
        cost += mags[..., k : k + windows]
    start = np.argmin(cost, axis=-1)
    pos = np.arange(cfg.m)
    pruned = (pos >= start[..., None]) & (pos < start[..., None] + cfg.n)
    return (~pruned).reshape(arr.shape)


def count_violations(mask, cfg: NmConfig) -> tuple[int, int]:
    """Return ``(violating_blocks, flipped_weights)`` for the 1 x M runs of ``mask``.

    A run violates the pattern when it holds fewer than ``n`` zeros; it
    needs ``n - zeros`` kept weights flipped to repair it.
    """
    bits = check_mask(mask)
    check_divisible(bits.shape, cfg.m)
    zeros = cfg.m - row_block_view(bits, cfg.m).sum(axis=-1)
    deficit = np.maximum(cfg.n - zeros, 0)
    return int(np.count_nonzero(deficit)), int(deficit.sum())


def enforce_structured(mat, mask, cfg: NmConfig) -> np.ndarray:
    """Force ``mask`` into N:M form by pruning the lowest-magnitude kept weights.

    Positions already pruned in ``mask`` rank below every kept weight, so a
    run only loses kept weights when it has fewer than ``n`` zeros. Nothing
    is ever un-pruned.
    """
    arr = check_matrix(mat)
    bits = check_mask(mask, arr.shape)
    check_divisible(arr.shape, cfg.m)
    mags = np.abs(row_block_view(arr, cfg.m))
    kept = row_block_view(bits, cfg.m)
    # sort key (kept, |w|, index): pruned entries first, then by magnitude
    order = np.lexsort((mags, kept), axis=-1)
    select = np.ones(mags.shape, dtype=bool)
    np.put_along_axis(select, order[..., : cfg.n], False, axis=-1)
    return (select & kept).reshape(arr.shape)
