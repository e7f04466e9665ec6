"""Binary dataset/operator files and heatmap export.

Dataset files (``FMP1``), little-endian::

    magic "FMP1" | version u32 = 1 | K, I, J, C, Q u32
    labels K x u32
    values K*C*J*I float32   (sample, then channel, then column-major pixel)

Operator files (``POOL``), little-endian::

    magic "POOL" | version u32 = 1 | M, N, num_eigvecs, norm (1=l1, 2=l2) u32
    alpha, scale, ridge, epsilon f64 | C u32
    means C x f64 | variances C x f64
    rows num_eigvecs*M*N f64  (eigen-index, then location, then pixel)
    I, J u32                  (input grid; optional trailer)

When the trailer is absent the input grid is taken as square.
"""

from __future__ import annotations

import io as _io
import math
import struct
from pathlib import Path

import numpy as np

from .exceptions import MalformedFileError, OutOfRangeError
from .fmap import ChannelStats, LabeledDataset, SpatialShape, unflatten
from .locality import LocalityConfig
from .pooling import FitConfig, PoolingOperator, row_norms

DATASET_MAGIC = b"FMP1"
OPERATOR_MAGIC = b"POOL"
VERSION = 1
NORM_FLAGS = {"l1": 1, "l2": 2}
NORM_TOL = 1e-9


class _Reader:
    def __init__(self, buf: bytes, what: str):
        self.buf = buf
        self.pos = 0
        self.what = what

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise MalformedFileError(f"{self.what}: truncated at byte {self.pos}")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self, count: int = 1):
        vals = struct.unpack(f"<{count}I", self.take(4 * count))
        return vals if count > 1 else vals[0]

    def f64(self, count: int = 1):
        vals = struct.unpack(f"<{count}d", self.take(8 * count))
        return vals if count > 1 else vals[0]

    def array(self, dtype: str, count: int) -> np.ndarray:
        size = np.dtype(dtype).itemsize * count
        return np.frombuffer(self.take(size), dtype=dtype).copy()

    def remaining(self) -> int:
        return len(self.buf) - self.pos


def _header(reader: _Reader, magic: bytes):
    got = reader.take(4)
    if got != magic:
        raise MalformedFileError(f"{reader.what}: bad magic {got!r}, expected {magic!r}")
    version = reader.u32()
    if version != VERSION:
        raise MalformedFileError(f"{reader.what}: unsupported version {version}")


def dataset_to_bytes(data: LabeledDataset) -> bytes:
    k, n, c = data.values.shape
    head = DATASET_MAGIC + struct.pack(
        "<6I", VERSION, k, data.shape.rows, data.shape.cols, c, data.num_classes
    )
    labels = data.labels.astype("<u4").tobytes()
    values = data.values.transpose(0, 2, 1).astype("<f4").tobytes()
    return head + labels + values


def dataset_from_bytes(buf: bytes) -> LabeledDataset:
    reader = _Reader(buf, "dataset file")
    _header(reader, DATASET_MAGIC)
    k, i, j, c, q = reader.u32(5)
    if min(k, i, j, c, q) < 1:
        raise MalformedFileError(f"dataset file: non-positive size in K,I,J,C,Q = {k},{i},{j},{c},{q}")
    expected = 4 * k + 4 * k * c * i * j
    if reader.remaining() != expected:
        raise MalformedFileError(
            f"dataset file: payload is {reader.remaining()} bytes, header declares {expected}"
        )
    labels = reader.array("<u4", k).astype(np.int64)
    if labels.min() < 1 or labels.max() > q:
        raise MalformedFileError(f"dataset file: labels outside 1..{q}")
    values = reader.array("<f4", k * c * i * j).reshape(k, c, i * j).transpose(0, 2, 1)
    try:
        return LabeledDataset(SpatialShape(i, j), values.astype(np.float64), labels, q)
    except ValueError as exc:
        raise MalformedFileError(f"dataset file: {exc}")


def write_dataset(path, data: LabeledDataset):
    Path(path).write_bytes(dataset_to_bytes(data))


def read_dataset(path) -> LabeledDataset:
    return dataset_from_bytes(Path(path).read_bytes())


def operator_to_bytes(op: PoolingOperator) -> bytes:
    cfg = op.config
    stats = op.channel_stats
    out = _io.BytesIO()
    out.write(OPERATOR_MAGIC)
    out.write(struct.pack("<5I", VERSION, op.n_outputs, op.n_inputs, op.num_eigvecs, NORM_FLAGS[cfg.norm]))
    ridge = 0.0 if cfg.ridge is None else cfg.ridge
    out.write(struct.pack("<4d", cfg.alpha, cfg.scale, ridge, cfg.epsilon))
    out.write(struct.pack("<I", stats.channels))
    out.write(stats.means.astype("<f8").tobytes())
    out.write(stats.variances.astype("<f8").tobytes())
    out.write(op.rows.astype("<f8").tobytes())
    out.write(struct.pack("<2I", op.input_shape.rows, op.input_shape.cols))
    return out.getvalue()


def operator_from_bytes(buf: bytes) -> PoolingOperator:
    reader = _Reader(buf, "operator file")
    _header(reader, OPERATOR_MAGIC)
    m, n, r, norm_flag = reader.u32(4)
    alpha, scale, ridge, epsilon = reader.f64(4)
    c = reader.u32()
    norms = {v: k for k, v in NORM_FLAGS.items()}
    if norm_flag not in norms:
        raise MalformedFileError(f"operator file: unknown norm flag {norm_flag}")
    if r not in (1, 2) or min(m, n, c) < 1:
        raise MalformedFileError(f"operator file: bad sizes M={m} N={n} eigvecs={r} C={c}")
    means = reader.array("<f8", c)
    variances = reader.array("<f8", c)
    rows = reader.array("<f8", r * m * n).reshape(r, m, n)

    trailer = reader.remaining()
    if trailer == 8:
        i, j = reader.u32(2)
    elif trailer == 0:
        side = math.isqrt(n)
        if side * side != n:
            raise MalformedFileError("operator file: no grid trailer and N is not a square")
        i = j = side
    else:
        raise MalformedFileError(f"operator file: {trailer} unexpected trailing bytes")

    norm = norms[norm_flag]
    deviation = np.max(np.abs(row_norms(rows, norm) - 1.0))
    if deviation > NORM_TOL:
        raise MalformedFileError(f"operator file: rows deviate from unit {norm} norm by {deviation:.3g}")
    try:
        input_shape = SpatialShape(i, j)
        locality = LocalityConfig.from_scale(input_shape, scale)
        if locality.n_inputs != n or locality.n_outputs != m:
            raise MalformedFileError("operator file: grid and scale disagree with M, N")
        cfg = FitConfig(
            alpha=alpha, scale=scale, norm=norm, num_eigvecs=r,
            ridge=ridge if ridge > 0 else None, epsilon=epsilon,
        )
        stats = ChannelStats(means, variances)
    except ValueError as exc:
        raise MalformedFileError(f"operator file: {exc}")
    return PoolingOperator(rows, input_shape, locality.output_shape, stats, cfg)


def write_operator(path, op: PoolingOperator):
    Path(path).write_bytes(operator_to_bytes(op))


def read_operator(path) -> PoolingOperator:
    return operator_from_bytes(Path(path).read_bytes())


def _heatmap_row(op: PoolingOperator, location: int, eigvec: int) -> np.ndarray:
    if not 1 <= location <= op.n_outputs:
        raise OutOfRangeError(f"location {location} outside 1..{op.n_outputs}")
    if not 1 <= eigvec <= op.num_eigvecs:
        raise OutOfRangeError(f"eigvec {eigvec} outside 1..{op.num_eigvecs}")
    return unflatten(op.row(location, eigvec), op.input_shape)


def heatmap_csv(op: PoolingOperator, location: int, eigvec: int = 1) -> str:
    """``I`` lines of ``J`` comma-separated weights."""
    grid = _heatmap_row(op, location, eigvec)
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in grid)


def heatmap_pgm(op: PoolingOperator, location: int, eigvec: int = 1) -> bytes:
    """Binary P5 image mapping ``[-max|w|, max|w|]`` onto ``[1, 255]`` around 128."""
    grid = _heatmap_row(op, location, eigvec)
    return pgm_bytes(grid)


def pgm_bytes(grid: np.ndarray) -> bytes:
    max_abs = np.max(np.abs(grid))
    if max_abs > 0:
        pixels = np.rint(128 + 127 * grid / max_abs)
    else:
        pixels = np.full(grid.shape, 128.0)
    pixels = np.clip(pixels, 0, 255).astype(np.uint8)
    head = f"P5\n{grid.shape[1]} {grid.shape[0]}\n255\n".encode("ascii")
    return head + pixels.tobytes()


def write_heatmap(path, op: PoolingOperator, location: int, eigvec: int = 1, fmt: str = "csv"):
    if fmt == "csv":
        Path(path).write_text(heatmap_csv(op, location, eigvec))
    elif fmt == "pgm":
        Path(path).write_bytes(heatmap_pgm(op, location, eigvec))
    else:
        raise ValueError(f"unknown heatmap format {fmt!r}")
