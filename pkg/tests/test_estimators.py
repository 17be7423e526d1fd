import numpy as np
import pytest
from sklearn.base import clone
from sklearn.model_selection import cross_val_score

from nmsparse.calibrate import adaprune
from nmsparse.estimators import AdaPruneRegressor, NMPruner, build_mask
from nmsparse.exceptions import NMSparseError, ShapeMismatch
from nmsparse.masks import count_violations, structured_mask
from nmsparse.tensor_core import NmConfig


def test_pruner_params_and_clone():
    est = NMPruner(kind="transposable-greedy", n=4, m=8, repair=False)
    params = est.get_params()
    assert params["kind"] == "transposable-greedy" and params["repair"] is False
    twin = clone(est)
    assert twin.get_params() == params
    assert not hasattr(twin, "mask_")


@pytest.mark.parametrize("kind", ["nm", "sequential", "transposable-opt", "transposable-greedy"])
def test_pruner_transform(rng, kind):
    W = rng.standard_normal((16, 16))
    est = NMPruner(kind=kind, n=2, m=4).fit(W)
    out = est.transform(W)
    assert np.array_equal(out != 0, est.mask_)
    assert count_violations(est.mask_, NmConfig(2, 4)) == (0, 0)
    assert est.kept_l1_ + est.pruned_l1_ == pytest.approx(np.abs(W).sum())
    with pytest.raises(ShapeMismatch):
        est.transform(np.ones((4, 4)))


def test_unstructured_default_sparsity(rng):
    W = rng.standard_normal((8, 8))
    assert NMPruner(kind="unstructured", n=1, m=4).fit(W).mask_.sum() == 48
    with pytest.raises(NMSparseError):
        build_mask(W, "diagonal")


def test_regressor_matches_adaprune(rng):
    W = rng.standard_normal((6, 12))
    X = rng.standard_normal((12, 200))
    mask = structured_mask(W, NmConfig(2, 4))
    reg = AdaPruneRegressor(mask=mask, ridge=0).fit(X.T, X.T @ W.T)
    np.testing.assert_allclose(reg.coef_, adaprune(W, mask, X, ridge=0), atol=1e-10)
    assert reg.n_features_in_ == 12
    assert reg.predict(X.T).shape == (200, 6)


def test_regressor_in_sklearn_workflow(rng):
    X = rng.standard_normal((120, 8))
    w = rng.standard_normal(8)
    y = X @ w
    mask = np.abs(w) >= np.sort(np.abs(w))[4]
    scores = cross_val_score(AdaPruneRegressor(mask=mask[None, :]), X, y, cv=3)
    assert scores.shape == (3,) and np.all(scores < 1)
    with pytest.raises(ShapeMismatch):
        AdaPruneRegressor(mask=np.ones((1, 3), bool)).fit(X, y)
