import io

import numpy as np
import pytest

from nmsparse.exceptions import FormatError, ShapeError
from nmsparse.io import decode_npy, encode_npy, load_tensor, save_tensor
from nmsparse.masks import structured_mask
from nmsparse.tensor_core import NmConfig


def test_mask_round_trip(tmp_path, rng):
    mask = structured_mask(rng.standard_normal((8, 16)), NmConfig(4, 8))
    path = tmp_path / "mask.npy"
    save_tensor(path, mask)
    back = load_tensor(path)
    assert back.dtype == bool
    assert np.array_equal(back, mask)


def test_matrix_round_trip_bit_exact(tmp_path, rng):
    W = rng.standard_normal((5, 7)) * 10.0 ** rng.integers(-300, 300, (5, 7))
    for name in ("w.npy", "w.csv"):
        save_tensor(tmp_path / name, W)
        back = load_tensor(tmp_path / name)
        assert back.tobytes() == W.tobytes()


def test_header_layout(rng):
    data = encode_npy(rng.standard_normal((3, 4)))
    assert data[:8] == b"\x93NUMPY\x01\x00"
    hlen = int.from_bytes(data[8:10], "little")
    assert (10 + hlen) % 64 == 0
    assert data[10 + hlen - 1 : 10 + hlen] == b"\n"
    assert b"'descr': '<f8'" in data[10 : 10 + hlen]
    assert b"'descr': '|u1'" in encode_npy(np.eye(2, dtype=bool))


def test_numpy_interop(rng):
    W = rng.standard_normal((4, 3))
    np.testing.assert_array_equal(np.load(io.BytesIO(encode_npy(W))), W)
    buf = io.BytesIO()
    np.save(buf, W)
    np.testing.assert_array_equal(decode_npy(buf.getvalue()), W)
    buf = io.BytesIO()
    np.save(buf, np.eye(3, dtype=bool))
    assert decode_npy(buf.getvalue()).dtype == bool


def test_csv_load(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1,2\n3,4")
    assert load_tensor(path).tolist() == [[1.0, 2.0], [3.0, 4.0]]


def test_fortran_order_rejected():
    buf = io.BytesIO()
    np.save(buf, np.asfortranarray(np.arange(6.0).reshape(2, 3)))
    with pytest.raises(FormatError) as err:
        decode_npy(buf.getvalue())
    assert err.value.offset == 10


@pytest.mark.parametrize("arr", [np.zeros(3), np.zeros((2, 2, 2))])
def test_non_2d_rejected(arr):
    buf = io.BytesIO()
    np.save(buf, arr)
    with pytest.raises(ShapeError):
        decode_npy(buf.getvalue())
    with pytest.raises(ShapeError):
        encode_npy(arr)


def test_corrupt_files():
    good = encode_npy(np.ones((2, 2)))
    start = 10 + int.from_bytes(good[8:10], "little")
    with pytest.raises(FormatError) as err:
        decode_npy(b"NOTNPY" + good[6:])
    assert err.value.offset == 0
    with pytest.raises(FormatError) as err:
        decode_npy(good[:-3])
    assert err.value.offset == start
    with pytest.raises(FormatError):
        decode_npy(good[:6] + b"\x02\x00" + good[8:])
    buf = io.BytesIO()
    np.save(buf, np.ones((2, 2), dtype=np.float32))
    with pytest.raises(FormatError):
        decode_npy(buf.getvalue())


def test_nonfinite_rejected_with_offset():
    data = encode_npy(np.array([[1.0, np.nan]]))
    start = 10 + int.from_bytes(data[8:10], "little")
    with pytest.raises(FormatError) as err:
        decode_npy(data)
    assert err.value.offset == start + 8


def test_csv_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2\n3\n")
    with pytest.raises(FormatError) as err:
        load_tensor(path)
    assert err.value.offset == 4
    path.write_text("1,x\n")
    with pytest.raises(FormatError):
        load_tensor(path)
    with pytest.raises(FormatError):
        save_tensor(tmp_path / "w.txt", np.ones((2, 2)))
