"""Brute-force ground truth for small transposable instances."""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations

import numpy as np

from .exceptions import NMSparseError, TooLargeError
from .greedy import _check_block
from .tensor_core import NmConfig

__all__ = ["exhaustive_transposable_optimum", "exact_transposable_count"]

MAX_EXHAUSTIVE_BLOCK = 4
MAX_COUNT_BLOCK = 6


def exhaustive_transposable_optimum(block, cfg: NmConfig, count: bool = False):
    """Best transposable tile mask by enumerating every row-wise prune choice.

    Returns ``(mask, kept_l1)``; with ``count=True`` also the number of masks
    attaining the optimum. Partial assignments that put more than ``n``
    prunes in a column are cut immediately. The first optimum in
    lexicographic row-choice order is returned.
    """
    if cfg.m > MAX_EXHAUSTIVE_BLOCK:
        raise TooLargeError(f"exhaustive search supports m <= {MAX_EXHAUSTIVE_BLOCK}, got {cfg.m}")
    arr = _check_block(block, cfg)
    mags = np.abs(arr).tolist()
    m, n = cfg.m, cfg.n
    choices = list(combinations(range(m), n))
    col_cnt = [0] * m
    picked: list[tuple[int, ...]] = []
    best_val = -math.inf
    best_pick: list[tuple[int, ...]] = []
    n_best = 0

    def descend(row):
        nonlocal best_val, best_pick, n_best
        if row == m:
            kept = math.fsum(
                mags[i][j] for i, prune in enumerate(picked) for j in range(m) if j not in prune
            )
            if kept > best_val:
                best_val, best_pick, n_best = kept, list(picked), 1
            elif kept == best_val:
                n_best += 1
            return
        rows_left = m - row - 1
        for choice in choices:
            if any(col_cnt[j] >= n for j in choice):
                continue
            for j in choice:
                col_cnt[j] += 1
            # every column must still be able to reach exactly n
            if all(n - c <= rows_left for c in col_cnt):
                picked.append(choice)
                descend(row + 1)
                picked.pop()
            for j in choice:
                col_cnt[j] -= 1

    descend(0)
    mask = np.ones((m, m), dtype=bool)
    for i, prune in enumerate(best_pick):
        mask[i, list(prune)] = False
    if count:
        return mask, best_val, n_best
    return mask, best_val


def exact_transposable_count(m: int, n: int) -> int:
    """Number of m x m binary matrices with exactly ``n`` zeros in every row and column."""
    if not 0 <= n <= m:
        raise NMSparseError(f"need 0 <= n <= m, got {n}:{m}")
    if m > MAX_COUNT_BLOCK:
        raise TooLargeError(f"exact counting supports m <= {MAX_COUNT_BLOCK}, got {m}")

    @lru_cache(maxsize=None)
    def ways(rows_left: int, remaining: tuple[int, ...]) -> int:
        # remaining[j] = zeros still owed by column j; order is irrelevant
        if rows_left == 0:
            return int(not any(remaining))
        total = 0
        for cols in combinations(range(m), n):
            if any(remaining[j] == 0 for j in cols):
                continue
            nxt = list(remaining)
            for j in cols:
                nxt[j] -= 1
            if max(nxt) > rows_left - 1:
                continue
            total += ways(rows_left - 1, tuple(sorted(nxt)))
        return total

    return ways(m, tuple([n] * m))
