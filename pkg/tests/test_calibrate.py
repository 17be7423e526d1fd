import numpy as np
import pytest

from nmsparse.calibrate import (
    adaprune,
    convert_mask,
    count_flips,
    mean_absorb,
    normal_equation_residual,
    output_mse,
    synthetic_calibration,
)
from nmsparse.exceptions import InvalidMask, ShapeMismatch, SingularSystem
from nmsparse.flow import optimal_transposable_mask
from nmsparse.masks import count_violations, structured_mask, unstructured_mask
from nmsparse.tensor_core import NmConfig

C24 = NmConfig(2, 4)


def test_mean_absorb_examples():
    W = np.array([[4.0, 3.0, 0.2, -0.2]])
    mask = np.array([[True, True, False, False]])
    assert mean_absorb(W, mask, C24).tolist() == [[4.0, 3.0, 0.0, 0.0]]
    W = np.array([[4.0, 2.0, 1.0, 1.0]])
    assert mean_absorb(W, mask, C24).tolist() == [[5.0, 3.0, 0.0, 0.0]]


def test_mean_absorb_mean_mode():
    W = np.array([[4.0, 2.0, 1.0, 3.0, 0.0, 0.0, 2.0, 6.0]])
    mask = np.array([[True, False, False, False] * 2])
    out = mean_absorb(W, mask, NmConfig(2, 4), mode="mean")
    assert out.tolist() == [[4.0 + 2.0, 0, 0, 0, 0.0 + 8.0 / 3, 0, 0, 0]]


def test_mean_absorb_preserves_block_sums(rng):
    cfg = NmConfig(4, 8)
    W = rng.standard_normal((32, 64))
    out = mean_absorb(W, structured_mask(W, cfg), cfg)
    before = W.reshape(32, 8, 8).sum(axis=-1)
    after = out.reshape(32, 8, 8).sum(axis=-1)
    np.testing.assert_allclose(after, before, rtol=1e-12, atol=1e-12)


def test_mean_absorb_rejects_invalid_mask():
    with pytest.raises(InvalidMask):
        mean_absorb(np.ones((1, 4)), np.ones((1, 4), bool), C24)


def test_mean_absorb_empty_block_stays_zero():
    W = np.array([[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]])
    mask = np.array([[False] * 4 + [True, True, False, False]])
    assert mean_absorb(W, mask, C24).tolist() == [[0, 0, 0, 0, 12.5, 13.5, 0, 0]]


def test_adaprune_orthonormal_design_is_truncation(rng):
    W = rng.standard_normal((6, 8))
    mask = structured_mask(W, C24)
    X = np.linalg.qr(rng.standard_normal((8, 8)))[0].T  # orthonormal rows
    np.testing.assert_allclose(adaprune(W, mask, X, ridge=0), np.where(mask, W, 0), atol=1e-12)


def test_adaprune_duplicate_rows_hand_solution():
    x = np.array([1.0, 2.0, -1.0, 0.5])
    X = np.vstack([x, x])
    out = adaprune([[1.0, 1.0]], [[True, False]], X, ridge=0)
    assert out[0, 0] == pytest.approx(2.0, rel=1e-12)
    assert out[0, 1] == 0


def test_adaprune_support_and_objective(rng):
    W = rng.standard_normal((16, 32))
    X = synthetic_calibration(32, 64, seed=3)
    mask = structured_mask(W, C24)
    fitted = adaprune(W, mask, X)
    assert not fitted[~mask].any()
    assert output_mse(W, fitted, X) <= output_mse(W, np.where(mask, W, 0), X)


def test_adaprune_residual_orthogonal(rng):
    W = rng.standard_normal((8, 32))
    X = rng.standard_normal((32, 100))
    mask = structured_mask(W, C24)
    fitted = adaprune(W, mask, X, ridge=0)
    assert normal_equation_residual(W, fitted, mask, X) < 1e-8


def test_adaprune_errors():
    W = np.ones((2, 4))
    mask = np.ones((2, 4), bool)
    with pytest.raises(ShapeMismatch):
        adaprune(W, mask, np.ones((3, 5)))
    with pytest.raises(SingularSystem):
        adaprune(W, mask, np.ones((4, 10)), ridge=0)
    # ridge makes the same rank-one design solvable
    assert np.isfinite(adaprune(W, mask, np.ones((4, 10)))).all()


def test_convert_idempotent(rng):
    W = rng.standard_normal((8, 16))
    src = structured_mask(W, C24)
    mask, weights = convert_mask(W, src, C24)
    assert np.array_equal(mask, src)
    assert np.array_equal(weights, np.where(src, W, 0))


def test_convert_unstructured_to_48_flips(rng):
    cfg = NmConfig(4, 8)
    W = rng.standard_normal((32, 64))
    src = unstructured_mask(W, 0.5)
    mask, _ = convert_mask(W, src, cfg)
    assert count_flips(src, mask) == count_violations(src, cfg)[1]
    assert count_violations(mask, cfg) == (0, 0)


def test_convert_transposable_48_to_24(rng):
    W = rng.standard_normal((16, 16))
    src = optimal_transposable_mask(W, NmConfig(4, 8))
    mask, weights = convert_mask(W, src, C24, bias_fix=True)
    assert count_violations(mask, C24) == (0, 0)
    assert count_flips(src, mask) == count_violations(src, C24)[1]
    assert not (mask & ~src).any()
    assert not weights[~mask].any()


def test_convert_to_transposable(rng):
    cfg = NmConfig(2, 4)
    W = rng.standard_normal((16, 16))
    src = unstructured_mask(W, 0.6)
    for method in ("optimal", "greedy"):
        mask, _ = convert_mask(W, src, cfg, transposable=True, method=method)
        assert count_violations(mask, cfg) == (0, 0)
        assert count_violations(mask.T, cfg) == (0, 0)
        assert not (mask & ~src).any()


def test_convert_with_calibration_orders_errors(rng):
    cfg = NmConfig(2, 4)
    W = rng.standard_normal((16, 32))
    src = unstructured_mask(W, 0.5)
    X = synthetic_calibration(32, 256, seed=1)
    ref = np.where(src, W, 0)
    _, raw = convert_mask(W, src, cfg)
    _, fixed = convert_mask(W, src, cfg, bias_fix=True)
    _, refit = convert_mask(W, src, cfg, calib=X)
    e_raw, e_fix, e_fit = (output_mse(ref, w, X) for w in (raw, fixed, refit))
    assert e_fit < e_fix < e_raw
