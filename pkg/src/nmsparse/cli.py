"""Command line interface: ``nmsparse <command> ...``.

Exit codes: 0 on success, 2 on usage errors, 1 on data errors.
"""

from __future__ import annotations

import functools
import json
import statistics

import click
import numpy as np

from . import analytics
from .bench import run_bench
from .calibrate import adaprune, convert_mask, count_flips, normal_equation_residual, output_mse
from .estimators import MASK_KINDS, build_mask
from .exceptions import NMSparseError
from .flow import optimal_prune_set
from .greedy import greedy_prune_set, repair_surplus
from .io import load_tensor, save_tensor
from .masks import count_violations
from .oracle import exhaustive_transposable_optimum
from .tensor_core import NmConfig, check_mask, check_matrix, masked_l1, pruned_l1, square_tile_view

SCHEMA = 1


def data_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (NMSparseError, OSError) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def emit(report: dict, fmt: str) -> None:
    report = {"schema": SCHEMA, **report}
    if fmt == "json":
        click.echo(json.dumps(report, indent=2, sort_keys=True))
        return
    for key, value in report.items():
        if isinstance(value, dict):
            value = ", ".join(f"{k}={v}" for k, v in value.items())
        click.echo(f"{key}: {value}")


def _stats(values):
    if not values:
        return None
    return {
        "min": min(values),
        "mean": statistics.fmean(values),
        "median": statistics.median(values),
        "max": max(values),
    }


def _violations(mask, cfg):
    if mask.shape[1] % cfg.m:
        return None
    blocks, flips = count_violations(mask, cfg)
    return {"blocks": blocks, "flips": flips}


report_option = click.option(
    "--report", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True
)


@click.group()
def main():
    """N:M sparsity masks: construction, analysis and calibration."""


@main.command()
@click.option("--kind", type=click.Choice(MASK_KINDS), default="nm", show_default=True)
@click.option("--n", type=int, default=2, show_default=True)
@click.option("--m", type=int, default=4, show_default=True)
@click.option("--sparsity", type=float, help="Global sparsity for --kind unstructured (default n/m).")
@click.option("--repair/--no-repair", default=True, show_default=True,
              help="Un-prune surplus entries of greedy transposable masks.")
@click.option("--compare-optimal", is_flag=True,
              help="For transposable-greedy, report per-tile pruned weight relative to the optimum.")
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--in", "src", type=click.Path(dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False))
@report_option
@data_errors
def mask(kind, n, m, sparsity, repair, compare_optimal, jobs, src, out, fmt):
    """Build a pruning mask for a weight matrix."""
    W = check_matrix(load_tensor(src), "input")
    cfg = NmConfig(n, m)
    bits = build_mask(W, kind, n, m, sparsity, repair, jobs)
    if out:
        save_tensor(out, bits)
    report = {
        "command": "mask",
        "kind": kind,
        "n": n,
        "m": m,
        "shape": list(W.shape),
        "kept": int(bits.sum()),
        "kept_l1": masked_l1(W, bits),
        "pruned_l1": pruned_l1(W, bits),
        "violations": _violations(bits, cfg),
    }
    if kind.startswith("transposable"):
        report["transpose_violations"] = _violations(bits.T, cfg)
        mags = np.abs(W)
        tiles = square_tile_view(mags, m)
        kept_tiles = square_tile_view(bits, m)
        totals = tiles.sum(axis=(1, 2))
        kept = np.where(kept_tiles, tiles, 0.0).sum(axis=(1, 2))
        report["tile_kept_fraction"] = _stats(
            [float(k / t) if t > 0 else 1.0 for k, t in zip(kept, totals)]
        )
        if kind == "transposable-greedy" and compare_optimal:
            ratios = []
            for tile, kt in zip(square_tile_view(W, m), kept_tiles):
                best = np.abs(tile)[optimal_prune_set(tile, cfg)].sum()
                got = np.abs(tile)[~kt].sum()
                ratios.append(float(got / best) if best > 0 else 1.0)
            report["tile_pruned_ratio_to_optimal"] = _stats(ratios)
    emit(report, fmt)


@main.command()
@click.option("--t", "size", type=int, default=64, show_default=True, help="Tensor element count.")
@click.option("--n", type=int)
@click.option("--m", type=int)
@click.option("--structure", type=click.Choice(analytics.STRUCTURES + ("all",)), default="all",
              show_default=True)
@click.option("--configs", default="1:2,2:4,4:8", show_default=True,
              help="Comma-separated N:M list for the table (used when --n/--m are absent).")
@report_option
@data_errors
def diversity(size, n, m, structure, configs, fmt):
    """Mask diversity: exact counts with a truncated 2-significant-figure form."""
    if (n is None) != (m is None):
        raise click.UsageError("--n and --m must be given together")
    cfgs = [NmConfig(n, m)] if n is not None else [NmConfig.parse(c) for c in configs.split(",")]
    structures = analytics.STRUCTURES if structure == "all" else (structure,)
    table = {
        s: {str(cfg): analytics.mask_diversity(size, cfg, s) for cfg in cfgs} for s in structures
    }
    if fmt == "json":
        emit({
            "command": "diversity",
            "t": size,
            "values": {
                s: {c: {"exact": str(v), "approx": analytics.format_scientific(v)}
                    for c, v in row.items()}
                for s, row in table.items()
            },
        }, fmt)
        return
    if len(structures) == 1 and len(cfgs) == 1:
        value = table[structures[0]][str(cfgs[0])]
        click.echo(f"{value} (≈{analytics.format_scientific(value)})")
        return
    header = ["N:M"] + [str(c) for c in cfgs]
    rows = [[s.capitalize()] + [analytics.format_scientific(table[s][str(c)]) for c in cfgs]
            for s in structures]
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    for r in [header] + rows:
        click.echo("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())


@main.command()
@click.option("--mask", "mask_path", type=click.Path(dir_okay=False), required=True)
@click.option("--n", type=int, required=True)
@click.option("--m", type=int, required=True)
@click.option("--transpose", is_flag=True, help="Check the transposed mask.")
@report_option
@data_errors
def violation(mask_path, n, m, transpose, fmt):
    """Count N:M pattern violations of a mask."""
    bits = check_mask(load_tensor(mask_path))
    if transpose:
        bits = np.ascontiguousarray(bits.T)
    cfg = NmConfig(n, m)
    blocks, flips = count_violations(bits, cfg)
    rho = 1.0 - float(bits.mean())
    n_blocks = bits.size // m
    predicted = analytics.violation_probability(rho, n, m)
    emit({
        "command": "violation",
        "n": n,
        "m": m,
        "transpose": transpose,
        "blocks": n_blocks,
        "violating_blocks": blocks,
        "flips": flips,
        "density_pruned": rho,
        "predicted_violation_probability": predicted,
        "predicted_violating_blocks": predicted * n_blocks,
    }, fmt)


@main.command("select-n")
@click.option("--rho", type=click.FloatRange(0, 1), required=True)
@click.option("--m", type=click.IntRange(min=1), required=True)
@click.option("--budget", type=float, required=True)
@report_option
@data_errors
def select_n(rho, m, budget, fmt):
    """Largest N whose violation probability stays within the budget."""
    n = analytics.select_n_for_budget(rho, m, budget)
    emit({
        "command": "select-n",
        "rho": rho,
        "m": m,
        "budget": budget,
        "n": n,
        "violation_probability": analytics.violation_probability(rho, n, m),
    }, fmt)


@main.command()
@click.option("--in", "src", type=click.Path(dir_okay=False), required=True)
@click.option("--mask", "mask_path", type=click.Path(dir_okay=False),
              help="Source mask; defaults to the nonzero pattern of the input.")
@click.option("--target", required=True, help="Target structure as N:M.")
@click.option("--transposable", is_flag=True)
@click.option("--method", type=click.Choice(["optimal", "greedy"]), default="optimal",
              show_default=True)
@click.option("--bias-fix", is_flag=True)
@click.option("--absorb", type=click.Choice(["sum", "mean"]), default="sum", show_default=True)
@click.option("--adaprune", "refit", is_flag=True)
@click.option("--calib", type=click.Path(dir_okay=False))
@click.option("--lambda", "ridge", type=float, default=1e-6, show_default=True)
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@click.option("--out-mask", type=click.Path(dir_okay=False))
@report_option
@data_errors
def convert(src, mask_path, target, transposable, method, bias_fix, absorb, refit, calib, ridge,
            jobs, out, out_mask, fmt):
    """Convert a pruned matrix to another N:M structure."""
    if refit and not calib:
        raise click.UsageError("--adaprune requires --calib")
    W = check_matrix(load_tensor(src), "input")
    source = check_mask(load_tensor(mask_path), W.shape) if mask_path else W != 0
    cfg = NmConfig.parse(target)
    X = check_matrix(load_tensor(calib), "calib") if calib else None
    new_mask, weights = convert_mask(
        W, source, cfg, transposable=transposable, method=method, bias_fix=bias_fix,
        calib=X if refit else None, ridge=ridge, absorb_mode=absorb, jobs=jobs,
    )
    if out:
        save_tensor(out, weights)
    if out_mask:
        save_tensor(out_mask, new_mask)
    report = {
        "command": "convert",
        "target": str(cfg),
        "transposable": transposable,
        "flips": count_flips(source, new_mask),
        "predicted_flips": count_violations(source, cfg)[1],
        "kept": int(new_mask.sum()),
        "kept_l1": masked_l1(W, new_mask & source),
        "pruned_l1": pruned_l1(W, new_mask & source),
        "violations": _violations(new_mask, cfg),
    }
    if transposable:
        report["transpose_violations"] = _violations(new_mask.T, cfg)
    if X is not None:
        reference = np.where(source, W, 0.0)
        report["output_mse"] = output_mse(reference, weights, X)
        report["output_mse_masked"] = output_mse(reference, np.where(new_mask, reference, 0.0), X)
    emit(report, fmt)


@main.command("adaprune")
@click.option("--w", "w_path", type=click.Path(dir_okay=False), required=True)
@click.option("--mask", "mask_path", type=click.Path(dir_okay=False), required=True)
@click.option("--calib", type=click.Path(dir_okay=False), required=True,
              help="Activations X of shape (in_features, samples).")
@click.option("--lambda", "ridge", type=click.FloatRange(min=0), default=1e-6, show_default=True,
              help="Relative ridge strength; 0 disables regularization.")
@click.option("--out", type=click.Path(dir_okay=False))
@report_option
@data_errors
def adaprune_cmd(w_path, mask_path, calib, ridge, out, fmt):
    """Least-squares refit of the kept weights on a calibration set."""
    W = check_matrix(load_tensor(w_path), "W")
    bits = check_mask(load_tensor(mask_path), W.shape)
    X = check_matrix(load_tensor(calib), "calib")
    fitted = adaprune(W, bits, X, ridge=ridge)
    if out:
        save_tensor(out, fitted)
    emit({
        "command": "adaprune",
        "lambda": ridge,
        "output_mse_masked": output_mse(W, np.where(bits, W, 0.0), X),
        "output_mse": output_mse(W, fitted, X),
        "normal_equation_residual": normal_equation_residual(W, fitted, bits, X),
    }, fmt)


@main.command()
@click.option("--in", "src", type=click.Path(dir_okay=False), required=True)
@click.option("--n", type=int, required=True)
@click.option("--m", type=int, required=True)
@click.option("--out", type=click.Path(dir_okay=False))
@report_option
@data_errors
def oracle(src, n, m, out, fmt):
    """Exhaustive optimum for one small block, next to the flow and greedy answers."""
    block = check_matrix(load_tensor(src), "block")
    cfg = NmConfig(n, m)
    best_mask, kept, n_opt = exhaustive_transposable_optimum(block, cfg, count=True)
    if out:
        save_tensor(out, best_mask)
    mags = np.abs(block)
    greedy = greedy_prune_set(block, cfg)
    emit({
        "command": "oracle",
        "n": n,
        "m": m,
        "kept_l1": kept,
        "pruned_l1": pruned_l1(block, best_mask),
        "optimal_masks": n_opt,
        "flow_kept_l1": masked_l1(block, ~optimal_prune_set(block, cfg)),
        "greedy_pruned_l1": float(mags[greedy].sum()),
        "greedy_repaired_pruned_l1": float(mags[repair_surplus(block, greedy, cfg)].sum()),
    }, fmt)


@main.command()
@click.option("--m", "ms", default="8", show_default=True, help="Comma-separated block sizes.")
@click.option("--n", type=int, help="Zeros per block (default m/2).")
@click.option("--trials", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--oracle", "with_oracle", is_flag=True, help="Also time exhaustive search (m <= 4).")
@click.option("--out", type=click.Path(dir_okay=False),
              help="Write the deterministic part of the report (no timings) as JSON.")
@report_option
@data_errors
def bench(ms, n, trials, seed, with_oracle, out, fmt):
    """Median runtimes of flow vs greedy and the approximation-ratio distribution."""
    try:
        sizes = [int(s) for s in ms.split(",")]
    except ValueError:
        raise click.UsageError(f"--m expects comma-separated integers, got {ms!r}") from None
    results, timings = [], []
    for m in sizes:
        rep, tim = run_bench(m, n, trials, seed, oracle=with_oracle)
        results.append(rep)
        timings.append(tim)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"schema": SCHEMA, "results": results}, indent=2, sort_keys=True))
            fh.write("\n")
    emit({
        "command": "bench",
        "results": [{**r, "timing": t} for r, t in zip(results, timings)],
    }, fmt)


if __name__ == "__main__":
    main()
