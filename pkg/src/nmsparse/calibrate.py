"""Weight correction after pruning: bias absorption and least-squares refit."""

from __future__ import annotations

import numpy as np

from .exceptions import InvalidMask, NMSparseError, ShapeMismatch, SingularSystem
from .flow import optimal_transposable_mask
from .greedy import greedy_transposable_mask
from .masks import count_violations, enforce_structured
from .tensor_core import NmConfig, check_divisible, check_mask, check_matrix, row_block_view

__all__ = [
    "mean_absorb",
    "adaprune",
    "solve_masked_lstsq",
    "output_mse",
    "normal_equation_residual",
    "convert_mask",
    "count_flips",
    "synthetic_calibration",
]


def mean_absorb(mat, mask, cfg: NmConfig, mode: str = "sum") -> np.ndarray:
    """Fold the pruned weights of each 1 x M run back into its survivors.

    ``mode="sum"`` adds ``pruned_sum / survivors`` to each survivor, which
    keeps every run's total unchanged. ``mode="mean"`` adds the mean of the
    pruned values instead. A run with no survivors stays all zero, so its
    total is the one sum that cannot be preserved.
    """
    arr = check_matrix(mat)
    bits = check_mask(mask, arr.shape)
    check_divisible(arr.shape, cfg.m)
    if mode not in ("sum", "mean"):
        raise NMSparseError(f"mode must be 'sum' or 'mean', got {mode!r}")
    if count_violations(bits, cfg) != (0, 0):
        raise InvalidMask(f"mask is not {cfg} sparse")
    blocks = row_block_view(arr, cfg.m)
    kept = row_block_view(bits, cfg.m)
    survivors = kept.sum(axis=-1)
    pruned_sum = np.where(kept, 0.0, blocks).sum(axis=-1)
    share = survivors if mode == "sum" else cfg.m - survivors
    shift = np.divide(pruned_sum, share, out=np.zeros_like(pruned_sum), where=survivors > 0)
    out = np.where(kept, blocks + shift[..., None], 0.0)
    return out.reshape(arr.shape)


def _check_layer(W, mask, X):
    W = check_matrix(W, "W")
    bits = check_mask(mask, W.shape)
    X = check_matrix(X, "X")
    if X.shape[0] != W.shape[1]:
        raise ShapeMismatch(f"X has {X.shape[0]} rows but W has {W.shape[1]} input columns")
    return W, bits, X


def solve_masked_lstsq(gram, rhs, bits, ridge: float = 1e-6) -> np.ndarray:
    """Per-row ridge solve restricted to each row's kept columns.

    ``gram`` is ``X X^T`` (in x in), ``rhs`` is ``X Y^T`` (in x out) and
    ``bits`` the (out x in) support. Row ``r`` solves
    ``(G_KK + lam I) w = rhs[K, r]`` with ``lam = ridge * trace(G_KK) / |K|``.
    """
    if ridge < 0:
        raise NMSparseError(f"ridge must be non-negative, got {ridge}")
    out = np.zeros(bits.shape)
    for r in range(bits.shape[0]):
        keep = np.flatnonzero(bits[r])
        if keep.size == 0:
            continue
        A = gram[np.ix_(keep, keep)]
        if ridge > 0:
            A = A + (ridge * np.trace(A) / keep.size) * np.eye(keep.size)
        try:
            w = np.linalg.solve(A, rhs[keep, r])
        except np.linalg.LinAlgError:
            raise SingularSystem(f"normal equations for row {r} are singular") from None
        if not np.all(np.isfinite(w)):
            raise SingularSystem(f"normal equations for row {r} are singular")
        out[r, keep] = w
    return out


def adaprune(W, mask, X, ridge: float = 1e-6) -> np.ndarray:
    """Refit the kept weights of every output row to reproduce ``W @ X``.

    Each row is an independent ridge least-squares problem over its kept
    columns (see :func:`solve_masked_lstsq`). Rows whose refit would fit
    worse than plain masking keep the masked weights. ``ridge=0`` solves the
    exact normal equations and raises :class:`SingularSystem` when they are
    singular.
    """
    W, bits, X = _check_layer(W, mask, X)
    gram = X @ X.T
    out = solve_masked_lstsq(gram, gram @ W.T, bits, ridge)
    masked = np.where(bits, W, 0.0)
    reference = W @ X
    worse = _row_sq_err(reference, out @ X) > _row_sq_err(reference, masked @ X)
    out[worse] = masked[worse]
    return out


def _row_sq_err(a, b):
    return np.square(a - b).sum(axis=1)


def output_mse(W_ref, W_new, X) -> float:
    """Mean squared difference between ``W_ref @ X`` and ``W_new @ X``."""
    W_ref = check_matrix(W_ref, "W_ref")
    W_new = check_matrix(W_new, "W_new")
    X = check_matrix(X, "X")
    return float(np.mean(np.square(W_ref @ X - W_new @ X)))


def normal_equation_residual(W, W_fit, mask, X) -> float:
    """Largest per-row ``||X_K r|| / (||X_K|| ||r||)`` over rows with a nonzero residual.

    ``r`` is the row's output residual ``W_r X - W_fit_r X``. For an exact
    least-squares fit the residual is orthogonal to the kept design rows and
    this is at rounding level.
    """
    W, bits, X = _check_layer(W, mask, X)
    resid = W @ X - check_matrix(W_fit, "W_fit") @ X
    worst = 0.0
    for r in range(W.shape[0]):
        keep = np.flatnonzero(bits[r])
        rn = np.linalg.norm(resid[r])
        if keep.size == 0 or rn == 0:
            continue
        XK = X[keep]
        worst = max(worst, np.linalg.norm(XK @ resid[r]) / (np.linalg.norm(XK) * rn))
    return float(worst)


def count_flips(source_mask, target_mask) -> int:
    """Number of positions kept by ``source_mask`` and pruned by ``target_mask``."""
    src = check_mask(source_mask)
    dst = check_mask(target_mask, src.shape)
    return int(np.count_nonzero(src & ~dst))


def convert_mask(
    W,
    source_mask,
    target: NmConfig,
    transposable: bool = False,
    method: str = "optimal",
    bias_fix: bool = False,
    calib=None,
    ridge: float = 1e-6,
    absorb_mode: str = "sum",
    jobs: int = 1,
):
    """Move a pruned layer onto the ``target`` structure.

    Entries pruned by ``source_mask`` count as zeros. The new mask never
    un-prunes a source-pruned weight. Weights are then optionally corrected
    by :func:`mean_absorb` and/or :func:`adaprune` (when ``calib`` is given).
    Returns ``(mask, weights)``.
    """
    W = check_matrix(W, "W")
    src = check_mask(source_mask, W.shape, "source_mask")
    sparse_w = np.where(src, W, 0.0)
    if transposable:
        if method == "optimal":
            mask = optimal_transposable_mask(sparse_w, target, jobs=jobs)
        elif method == "greedy":
            mask = greedy_transposable_mask(sparse_w, target, repair=True, jobs=jobs)
        else:
            raise NMSparseError(f"method must be 'optimal' or 'greedy', got {method!r}")
        mask &= src
    else:
        mask = enforce_structured(sparse_w, src, target)
    weights = np.where(mask, sparse_w, 0.0)
    if bias_fix:
        weights = mean_absorb(sparse_w, mask, target, mode=absorb_mode)
    if calib is not None:
        weights = adaprune(sparse_w, mask, calib, ridge=ridge)
    return mask, weights


def synthetic_calibration(in_features: int, samples: int, seed: int = 0, mean: float = 1.0):
    """Gaussian activations ``(in_features, samples)`` with a positive mean.

    Post-activation inputs are not centred; with zero-mean inputs the pruned
    weights' sum has no systematic effect on the output and mean absorption
    cannot help.
    """
    rng = np.random.default_rng(seed)
    return rng.normal(mean, 1.0, size=(in_features, samples))
