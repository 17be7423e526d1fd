"""Runtime and approximation-quality comparison of the transposable solvers."""

from __future__ import annotations

import statistics
import time

import numpy as np

from .flow import optimal_prune_set
from .greedy import greedy_prune_set, repair_surplus
from .oracle import MAX_EXHAUSTIVE_BLOCK, exhaustive_transposable_optimum
from .tensor_core import NmConfig


def _summary(values):
    return {
        "min": min(values),
        "mean": statistics.fmean(values),
        "median": statistics.median(values),
        "max": max(values),
    }


def _timed(func, *args):
    start = time.perf_counter()
    out = func(*args)
    return out, time.perf_counter() - start


def run_bench(m: int, n: int | None = None, trials: int = 100, seed: int = 0, oracle: bool = False):
    """Solve ``trials`` seeded Gaussian tiles with the flow and greedy solvers.

    Returns ``(report, timings)``. ``report`` is deterministic for a given
    seed: approximation ratios of pruned weight, raw and after repair.
    ``timings`` holds wall-clock medians in seconds and varies run to run.
    """
    cfg = NmConfig(m // 2 if n is None else n, m)
    rng = np.random.default_rng(seed)
    blocks = rng.standard_normal((trials, m, m))
    # first call compiles the flow kernel; keep it out of the timings
    optimal_prune_set(blocks[0], cfg)

    ratios, repaired, t_flow, t_greedy, t_oracle = [], [], [], [], []
    for block in blocks:
        mags = np.abs(block)
        opt, dt = _timed(optimal_prune_set, block, cfg)
        t_flow.append(dt)
        greedy, dt = _timed(greedy_prune_set, block, cfg)
        t_greedy.append(dt)
        if oracle and m <= MAX_EXHAUSTIVE_BLOCK:
            _, dt = _timed(exhaustive_transposable_optimum, block, cfg)
            t_oracle.append(dt)
        best = mags[opt].sum()
        ratios.append(float(mags[greedy].sum() / best))
        repaired.append(float(mags[repair_surplus(block, greedy, cfg)].sum() / best))

    report = {
        "m": m,
        "n": cfg.n,
        "trials": trials,
        "seed": seed,
        "ratio": _summary(ratios),
        "ratio_repaired": _summary(repaired),
    }
    timings = {
        "flow_median_s": statistics.median(t_flow),
        "greedy_median_s": statistics.median(t_greedy),
    }
    if t_oracle:
        timings["oracle_median_s"] = statistics.median(t_oracle)
    return report, timings
