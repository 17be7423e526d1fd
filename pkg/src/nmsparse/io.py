"""Tensor files: NPY v1.0 (``<f8`` matrices, ``|u1`` masks) and plain CSV.

The format is chosen by file extension. NPY headers are space-padded so
the payload starts on a 64-byte boundary; files load with ``numpy.load``
and read back here bit-exactly.
"""

from __future__ import annotations

import ast
import os
import struct

import numpy as np

from .exceptions import FormatError, ShapeError

__all__ = ["load_tensor", "save_tensor", "encode_npy", "decode_npy"]

MAGIC = b"\x93NUMPY"
PREAMBLE = len(MAGIC) + 2 + 2  # magic, version, header length
ALIGN = 64
_DTYPES = {"<f8": np.dtype("<f8"), "|u1": np.dtype("u1"), "|b1": np.dtype("?")}


def encode_npy(arr: np.ndarray) -> bytes:
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise ShapeError(f"only 2-D tensors are supported, got shape {arr.shape}")
    if arr.dtype == bool or arr.dtype.kind == "u":
        if arr.dtype.kind == "u" and arr.size and arr.max() > 1:
            raise FormatError("unsigned byte tensors must be 0/1 masks")
        arr, descr = arr.astype("u1"), "|u1"
    else:
        arr, descr = arr.astype("<f8"), "<f8"
    header = f"{{'descr': '{descr}', 'fortran_order': False, 'shape': {tuple(arr.shape)}, }}"
    pad = -(PREAMBLE + len(header) + 1) % ALIGN
    header_bytes = (header + " " * pad + "\n").encode("latin1")
    return (
        MAGIC
        + bytes([1, 0])
        + struct.pack("<H", len(header_bytes))
        + header_bytes
        + np.ascontiguousarray(arr).tobytes()
    )


def decode_npy(data: bytes) -> np.ndarray:
    """Parse an NPY v1.0 payload; masks come back as ``bool``, matrices as ``float64``."""
    if len(data) < PREAMBLE or data[: len(MAGIC)] != MAGIC:
        raise FormatError("missing NPY magic string", offset=0)
    if data[6:8] != bytes([1, 0]):
        raise FormatError(f"unsupported NPY version {data[6]}.{data[7]}", offset=6)
    (hlen,) = struct.unpack("<H", data[8:10])
    if len(data) < PREAMBLE + hlen:
        raise FormatError("header runs past end of file", offset=8)
    raw = data[PREAMBLE : PREAMBLE + hlen]
    try:
        header = ast.literal_eval(raw.decode("latin1"))
    except (ValueError, SyntaxError):
        raise FormatError("header is not a valid literal", offset=PREAMBLE) from None
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise FormatError("header must hold exactly descr, fortran_order and shape", offset=PREAMBLE)
    if header["descr"] not in _DTYPES:
        raise FormatError(f"unsupported dtype {header['descr']!r}", offset=PREAMBLE)
    if header["fortran_order"] is not False:
        raise FormatError("Fortran-ordered arrays are not supported", offset=PREAMBLE)
    shape = header["shape"]
    if not isinstance(shape, tuple) or not all(isinstance(d, int) and d >= 0 for d in shape):
        raise FormatError(f"invalid shape {shape!r}", offset=PREAMBLE)
    if len(shape) != 2:
        raise ShapeError(f"only 2-D tensors are supported, got shape {shape}", offset=PREAMBLE)
    dtype = _DTYPES[header["descr"]]
    start = PREAMBLE + hlen
    expected = shape[0] * shape[1] * dtype.itemsize
    if len(data) - start != expected:
        raise FormatError(
            f"payload holds {len(data) - start} bytes, expected {expected}", offset=start
        )
    arr = np.frombuffer(data, dtype=dtype, offset=start).reshape(shape).copy()
    if dtype.kind == "f":
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            raise FormatError("matrix contains NaN or Inf", offset=start + int(bad[0]) * 8)
        return arr.astype(np.float64)
    if dtype.kind == "u":
        bad = np.flatnonzero(arr > 1)
        if bad.size:
            raise FormatError("mask bytes must be 0 or 1", offset=start + int(bad[0]))
    return arr.astype(bool)


def _read_csv(text: str) -> np.ndarray:
    rows = []
    offset = 0
    for line in text.splitlines(keepends=True):
        body = line.strip()
        if body:
            try:
                values = [float(tok) for tok in body.split(",")]
            except ValueError:
                raise FormatError("non-numeric CSV field", offset=offset) from None
            if rows and len(values) != len(rows[0]):
                raise FormatError(
                    f"row has {len(values)} fields, expected {len(rows[0])}", offset=offset
                )
            if not all(np.isfinite(values)):
                raise FormatError("matrix contains NaN or Inf", offset=offset)
            rows.append(values)
        offset += len(line.encode("utf-8"))
    if not rows:
        raise FormatError("CSV file is empty", offset=0)
    return np.array(rows, dtype=np.float64)


def _write_csv(arr: np.ndarray) -> str:
    if arr.ndim != 2:
        raise ShapeError(f"only 2-D tensors are supported, got shape {arr.shape}")
    if arr.dtype == bool or arr.dtype.kind in "iu":
        lines = [",".join(str(int(v)) for v in row) for row in arr.tolist()]
    else:
        lines = [",".join(repr(float(v)) for v in row) for row in arr.tolist()]
    return "\n".join(lines) + "\n"


def _format_of(path) -> str:
    ext = os.path.splitext(os.fspath(path))[1].lower()
    if ext not in (".npy", ".csv"):
        raise FormatError(f"cannot infer tensor format from extension {ext!r}")
    return ext


def load_tensor(path) -> np.ndarray:
    if _format_of(path) == ".npy":
        with open(path, "rb") as fh:
            return decode_npy(fh.read())
    with open(path, encoding="utf-8") as fh:
        return _read_csv(fh.read())


def save_tensor(path, arr) -> None:
    arr = np.asarray(arr)
    if _format_of(path) == ".npy":
        payload = encode_npy(arr)
        with open(path, "wb") as fh:
            fh.write(payload)
    else:
        text = _write_csv(arr)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
