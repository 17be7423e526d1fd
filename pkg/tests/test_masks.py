import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nmsparse.analytics import violation_probability
from nmsparse.exceptions import DimensionError
from nmsparse.masks import (
    count_violations,
    enforce_structured,
    sequential_mask,
    structured_mask,
    unstructured_mask,
)
from nmsparse.tensor_core import NmConfig, masked_l1

from oracles import per_block_sort_mask

C24 = NmConfig(2, 4)


def pruned_positions(mask):
    return sorted(np.flatnonzero(~mask.ravel()).tolist())


def test_unstructured_examples():
    assert pruned_positions(unstructured_mask([[1.0, 2.0], [3.0, 4.0]], 0.5)) == [0, 1]
    assert unstructured_mask(np.arange(6.0).reshape(2, 3), 0).all()
    assert pruned_positions(unstructured_mask(np.full((2, 2), 5.0), 0.5)) == [0, 1]


def test_unstructured_count_uses_decimal_fraction():
    W = np.arange(1.0, 101.0).reshape(10, 10)
    assert (~unstructured_mask(W, 0.29)).sum() == 29


def test_unstructured_rejects_full_sparsity():
    with pytest.raises(ValueError):
        unstructured_mask(np.ones((2, 2)), 1.0)


def test_structured_examples():
    mask = structured_mask([[0.2, 4.0, 3.0, -0.2]], C24)
    assert mask.tolist() == [[False, True, True, False]]
    assert pruned_positions(structured_mask([[1.0, 1.0, 1.0, 1.0]], C24)) == [0, 1]
    with pytest.raises(DimensionError):
        structured_mask(np.ones((2, 6)), C24)


def test_structured_matches_per_block_sort(rng):
    for _ in range(20):
        W = rng.standard_normal((8, 8))
        W[rng.random(W.shape) < 0.2] = 0.5  # force ties
        assert np.array_equal(structured_mask(W, NmConfig(4, 8)), per_block_sort_mask(W, 4, 8))


def test_sequential_examples():
    assert pruned_positions(sequential_mask([[9.0, 0.1, 0.1, 9.0]], C24)) == [1, 2]
    assert pruned_positions(sequential_mask([[1.0, 1.0, 1.0, 1.0]], C24)) == [0, 1]
    assert pruned_positions(sequential_mask([[0.1, 9.0, 0.1, 9.0]], C24)) == [0, 1]


def test_count_violations_examples():
    assert count_violations(structured_mask(np.arange(16.0).reshape(2, 8), C24), C24) == (0, 0)
    assert count_violations(np.ones((1, 4), bool), C24) == (1, 2)
    assert count_violations([[1, 0, 1, 1, 0, 0, 0, 1]], C24) == (1, 1)


def test_bernoulli_violation_rate_matches_closed_form(rng):
    rho = 0.5
    mask = rng.random((2000, 400)) >= rho  # pruned with probability rho
    blocks, _ = count_violations(mask, C24)
    total = mask.size // 4
    p = violation_probability(rho, 2, 4)
    se = np.sqrt(p * (1 - p) / total)
    assert abs(blocks / total - p) < 4 * se


def test_enforce_examples(rng):
    W = rng.standard_normal((4, 8))
    valid = structured_mask(W, C24)
    assert np.array_equal(enforce_structured(W, valid, C24), valid)
    assert np.array_equal(enforce_structured(W, np.ones(W.shape, bool), C24), structured_mask(W, C24))


def test_enforce_flip_count_matches_prediction(rng):
    cfg = NmConfig(4, 8)
    W = rng.standard_normal((64, 256))
    src = unstructured_mask(W, 0.86)
    _, predicted = count_violations(src, cfg)
    out = enforce_structured(W, src, cfg)
    assert count_violations(out, cfg) == (0, 0)
    assert int((src & ~out).sum()) == predicted


def test_enforce_prefers_pruned_over_kept_zero():
    W = np.array([[0.0, 0.0, 5.0, 6.0]])
    src = np.array([[True, False, True, True]])
    out = enforce_structured(W, src, NmConfig(1, 4))
    assert np.array_equal(out, src)


matrices = arrays(
    np.float64,
    st.tuples(st.integers(1, 4), st.sampled_from([4, 8])),
    elements=st.floats(-100, 100, allow_nan=False).map(lambda x: round(x, 1)),
)


@settings(max_examples=150, deadline=None)
@given(matrices, st.sampled_from([(1, 4), (2, 4), (3, 4)]))
def test_structured_invariants(W, nm):
    cfg = NmConfig(*nm)
    mask = structured_mask(W, cfg)
    zeros = (~mask).reshape(W.shape[0], -1, 4).sum(axis=-1)
    assert (zeros == cfg.n).all()
    assert count_violations(mask, cfg) == (0, 0)
    assert masked_l1(W, mask) >= masked_l1(W, sequential_mask(W, cfg))
    assert np.array_equal(mask, structured_mask(W.copy(), cfg))


@settings(max_examples=150, deadline=None)
@given(matrices, st.data())
def test_enforce_never_unprunes(W, data):
    src = data.draw(arrays(bool, W.shape))
    out = enforce_structured(W, src, C24)
    assert not (out & ~src).any()
    assert count_violations(out, C24) == (0, 0)
    assert int((src & ~out).sum()) == count_violations(src, C24)[1]
