"""Greedy 2-approximation for N:M transposable masks.

Coefficient edges of the tile's bipartite row/column graph are scanned from
light to heavy. An edge is pruned while either of its endpoints still has
fewer than ``n`` pruned edges, and the scan stops as soon as every row and
column has reached ``n``. The pruned weight is less than twice the optimum.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionError
from .flow import MAX_BLOCK, _map_tiles
from .tensor_core import (
    NmConfig,
    check_divisible,
    check_mask,
    check_matrix,
    magnitude_order,
    square_tile_view,
    untile,
)

__all__ = [
    "greedy_prune_set",
    "repair_surplus",
    "greedy_transposable_mask",
    "tightness_instance",
]


def _check_block(block, cfg: NmConfig) -> np.ndarray:
    arr = check_matrix(block, "block")
    if arr.shape != (cfg.m, cfg.m):
        raise DimensionError(f"block must be {cfg.m}x{cfg.m}, got {arr.shape}")
    return arr


def greedy_prune_set(block, cfg: NmConfig) -> np.ndarray:
    """Boolean (m, m) array of the entries pruned by the greedy scan."""
    arr = _check_block(block, cfg)
    m, n = cfg.m, cfg.n
    row_deg = [0] * m
    col_deg = [0] * m
    uncovered = 2 * m
    pruned = np.zeros(m * m, dtype=bool)
    for flat in magnitude_order(arr.ravel()).tolist():
        i, j = divmod(flat, m)
        if row_deg[i] < n or col_deg[j] < n:
            pruned[flat] = True
            row_deg[i] += 1
            col_deg[j] += 1
            uncovered -= (row_deg[i] == n) + (col_deg[j] == n)
            if uncovered == 0:
                break
    return pruned.reshape(m, m)


def repair_surplus(block, pruned, cfg: NmConfig) -> np.ndarray:
    """Un-prune surplus entries, heaviest first, while feasibility allows.

    An entry is restored only when its row and its column both keep more
    than ``n`` pruned entries. Restoring never raises a count, so one
    descending pass reaches the same fixed point as repeated sweeps.
    """
    arr = _check_block(block, cfg)
    out = check_mask(pruned, arr.shape, "pruned").copy()
    row_cnt = out.sum(axis=1)
    col_cnt = out.sum(axis=0)
    m, n = cfg.m, cfg.n
    for flat in magnitude_order(arr.ravel())[::-1].tolist():
        i, j = divmod(flat, m)
        if out[i, j] and row_cnt[i] > n and col_cnt[j] > n:
            out[i, j] = False
            row_cnt[i] -= 1
            col_cnt[j] -= 1
    return out


def greedy_transposable_mask(mat, cfg: NmConfig, repair: bool = True, jobs: int = 1) -> np.ndarray:
    """Tile-wise greedy transposable mask (``True`` = kept).

    Every row and column of every tile holds at least ``n`` zeros.
    """
    arr = check_matrix(mat)
    check_divisible(arr.shape, cfg.m, square=True)
    if cfg.m > MAX_BLOCK:
        raise DimensionError(f"block size {cfg.m} exceeds the supported maximum {MAX_BLOCK}")

    def solve(tile):
        p = greedy_prune_set(tile, cfg)
        return repair_surplus(tile, p, cfg) if repair else p

    pruned = _map_tiles(solve, list(square_tile_view(arr, cfg.m)), jobs)
    return ~untile(np.stack(pruned), arr.shape)


def tightness_instance(m: int) -> np.ndarray:
    """Block on which the greedy scan with ``n = 1`` prunes ``2m - 1`` unit weights.

    Unit weights sit on the diagonal and the superdiagonal; every other entry
    is ``10 * m``. In row-major order the unit entries form a staircase
    ``(0,0), (0,1), (1,1), (1,2), ...`` where each step covers exactly one new
    row or column, so greedy takes all of them, while the optimum prunes only
    the diagonal (weight ``m``).
    """
    if m < 2:
        raise ValueError(f"tightness instance needs m >= 2, got {m}")
    block = np.full((m, m), 10.0 * m)
    idx = np.arange(m)
    block[idx, idx] = 1.0
    block[idx[:-1], idx[:-1] + 1] = 1.0
    return block
