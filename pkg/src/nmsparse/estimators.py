"""scikit-learn compatible wrappers.

``NMPruner`` learns a mask from a weight matrix and applies it;
``AdaPruneRegressor`` is a support-constrained linear regression whose
``coef_`` is the refitted weight matrix of a pruned linear layer.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .calibrate import solve_masked_lstsq
from .exceptions import NMSparseError, ShapeMismatch
from .flow import optimal_transposable_mask
from .greedy import greedy_transposable_mask
from .masks import sequential_mask, structured_mask, unstructured_mask
from .tensor_core import NmConfig, check_mask, check_matrix, masked_l1, pruned_l1

__all__ = ["MASK_KINDS", "build_mask", "NMPruner", "AdaPruneRegressor"]

MASK_KINDS = ("unstructured", "nm", "sequential", "transposable-opt", "transposable-greedy")


def build_mask(W, kind: str, n: int = 2, m: int = 4, sparsity: float | None = None,
               repair: bool = True, jobs: int = 1) -> np.ndarray:
    """Dispatch to the mask builder named by ``kind``.

    ``unstructured`` uses ``sparsity`` when given, otherwise ``n / m``.
    """
    if kind == "unstructured":
        return unstructured_mask(W, n / m if sparsity is None else sparsity)
    cfg = NmConfig(n, m)
    if kind == "nm":
        return structured_mask(W, cfg)
    if kind == "sequential":
        return sequential_mask(W, cfg)
    if kind == "transposable-opt":
        return optimal_transposable_mask(W, cfg, jobs=jobs)
    if kind == "transposable-greedy":
        return greedy_transposable_mask(W, cfg, repair=repair, jobs=jobs)
    raise NMSparseError(f"unknown mask kind {kind!r}; expected one of {MASK_KINDS}")


class NMPruner(TransformerMixin, BaseEstimator):
    """Magnitude pruner for a single weight matrix.

    ``fit(W)`` computes ``mask_``; ``transform(W)`` zeroes the pruned entries
    of a matrix with the same shape.

    Parameters
    ----------
    kind : {"unstructured", "nm", "sequential", "transposable-opt", "transposable-greedy"}
    n, m : int
        Zeros per block and block length.
    sparsity : float or None
        Global sparsity for ``kind="unstructured"``; defaults to ``n / m``.
    repair : bool
        Un-prune surplus entries of greedy transposable masks.
    jobs : int
        Worker threads for the per-tile transposable solvers.
    """

    def __init__(self, kind="nm", n=2, m=4, sparsity=None, repair=True, jobs=1):
        self.kind = kind
        self.n = n
        self.m = m
        self.sparsity = sparsity
        self.repair = repair
        self.jobs = jobs

    def fit(self, W, y=None):
        W = check_matrix(W, "W")
        self.mask_ = build_mask(W, self.kind, self.n, self.m, self.sparsity, self.repair, self.jobs)
        self.kept_l1_ = masked_l1(W, self.mask_)
        self.pruned_l1_ = pruned_l1(W, self.mask_)
        return self

    def transform(self, W):
        check_is_fitted(self, "mask_")
        W = check_matrix(W, "W")
        if W.shape != self.mask_.shape:
            raise ShapeMismatch(f"W has shape {W.shape}, mask was fitted on {self.mask_.shape}")
        return np.where(self.mask_, W, 0.0)


class AdaPruneRegressor(RegressorMixin, BaseEstimator):
    """Linear regression ``y ~ X @ coef_.T`` with ``coef_`` restricted to ``mask``.

    With samples as rows, ``X`` is the transposed calibration activations and
    ``y = X @ W.T`` the dense layer's outputs; ``coef_`` is then the
    refitted pruned layer.

    Parameters
    ----------
    mask : array-like of shape (n_targets, n_features)
        Support of ``coef_``; ``True`` = kept.
    ridge : float
        Relative ridge strength; ``0`` disables regularization.
    """

    def __init__(self, mask=None, ridge=1e-6):
        self.mask = mask
        self.ridge = ridge

    def fit(self, X, y):
        X, y = validate_data(self, X, y, multi_output=True, y_numeric=True, dtype=np.float64)
        Y = y.reshape(len(y), -1)
        bits = check_mask(self.mask, (Y.shape[1], X.shape[1]))
        coef = solve_masked_lstsq(X.T @ X, X.T @ Y, bits, self.ridge)
        self.coef_ = coef if y.ndim > 1 else coef[0]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False, dtype=np.float64)
        return X @ self.coef_.T
