"""Pixel coordinates and the diagonal locality penalty for each output location."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import OutOfRangeError, ShapeMismatchError
from .fmap import SpatialShape

_SCALE_TOL = 1e-9


@dataclass(frozen=True)
class LocalityConfig:
    """Input grid, output grid and the isotropic scale ``s = I/I' = J/J'``."""

    input_shape: SpatialShape
    output_shape: SpatialShape
    scale: float

    def __post_init__(self):
        s = float(self.scale)
        if not s > 0:
            raise ShapeMismatchError(f"scale must be positive, got {self.scale}")
        i, j = self.input_shape
        i2, j2 = self.output_shape
        if abs(i - s * i2) > _SCALE_TOL * i or abs(j - s * j2) > _SCALE_TOL * j:
            raise ShapeMismatchError(
                f"scale {s} does not map {i}x{j} onto {i2}x{j2}"
            )
        object.__setattr__(self, "scale", s)

    @classmethod
    def from_scale(cls, input_shape: SpatialShape, scale: float) -> "LocalityConfig":
        """Derive the output grid; fails unless ``scale`` divides both sides."""
        s = float(scale)
        if not s > 0:
            raise ShapeMismatchError(f"scale must be positive, got {scale}")
        out = []
        for side in input_shape:
            n_out = round(side / s)
            if n_out < 1 or abs(n_out * s - side) > _SCALE_TOL * side:
                raise ShapeMismatchError(
                    f"scale {s} does not divide input shape "
                    f"{input_shape.rows}x{input_shape.cols}"
                )
            out.append(n_out)
        return cls(input_shape, SpatialShape(*out), s)

    @property
    def n_inputs(self) -> int:
        return self.input_shape.size

    @property
    def n_outputs(self) -> int:
        return self.output_shape.size


def coord_of_index(n: int, shape: SpatialShape) -> tuple[int, int]:
    """1-based ``(i, j)`` of 1-based column-major index ``n``."""
    if not 1 <= n <= shape.size:
        raise OutOfRangeError(f"index {n} outside 1..{shape.size}")
    return (n - 1) % shape.rows + 1, (n - 1) // shape.rows + 1


def coord_omega_big(n: int, shape: SpatialShape) -> tuple[int, int]:
    """Coordinate of input pixel ``n``."""
    return coord_of_index(n, shape)


def coord_omega_small(m: int, shape: SpatialShape) -> tuple[int, int]:
    """Coordinate of output location ``m``."""
    return coord_of_index(m, shape)


def index_of_coord(i: int, j: int, shape: SpatialShape) -> int:
    """1-based column-major index of 1-based coordinate ``(i, j)``."""
    if not (1 <= i <= shape.rows and 1 <= j <= shape.cols):
        raise OutOfRangeError(f"coordinate ({i}, {j}) outside {shape.rows}x{shape.cols}")
    return (j - 1) * shape.rows + i


def coordinate_table(shape: SpatialShape) -> np.ndarray:
    """``(N, 2)`` array of 1-based coordinates in column-major index order."""
    n = np.arange(shape.size)
    return np.column_stack([n % shape.rows + 1, n // shape.rows + 1]).astype(np.float64)


def anchor(m: int, cfg: LocalityConfig) -> np.ndarray:
    """Input-space point ``s * coord(m)`` where location ``m`` has zero penalty."""
    return cfg.scale * np.asarray(coord_omega_small(m, cfg.output_shape), dtype=np.float64)


@dataclass(frozen=True, eq=False)
class PenaltyDiagonal:
    """Diagonal of the penalty matrix for one output location."""

    entries: np.ndarray
    location: int

    def __post_init__(self):
        self.entries.flags.writeable = False

    def matrix(self) -> np.ndarray:
        return np.diag(self.entries)


def penalty_vector(m: int, cfg: LocalityConfig) -> PenaltyDiagonal:
    """Squared distance of every input pixel from the anchor of location ``m``.

    ``entries[n] = ||coord(n) - s * coord(m)||^2``.  Under 1-based coordinates
    the anchor of output ``(1, 1)`` at ``s = 2`` is input ``(2, 2)``, not the
    block center.
    """
    if not 1 <= m <= cfg.n_outputs:
        raise OutOfRangeError(f"location {m} outside 1..{cfg.n_outputs}")
    diff = coordinate_table(cfg.input_shape) - anchor(m, cfg)
    return PenaltyDiagonal(np.sum(diff * diff, axis=1), m)


def penalty_vector_expanded(m: int, cfg: LocalityConfig) -> np.ndarray:
    """Same entries via ``e - 2 s d w + s^2 ||w||^2``, with ``e`` the squared
    coordinate norms, ``d`` the coordinate table and ``w = coord(m)``."""
    if not 1 <= m <= cfg.n_outputs:
        raise OutOfRangeError(f"location {m} outside 1..{cfg.n_outputs}")
    d = coordinate_table(cfg.input_shape)
    e = np.sum(d * d, axis=1)
    w = np.asarray(coord_omega_small(m, cfg.output_shape), dtype=np.float64)
    s = cfg.scale
    return e - 2 * s * (d @ w) + s * s * (w @ w) * np.ones(cfg.n_inputs)


def penalty_matrix(cfg: LocalityConfig) -> np.ndarray:
    """``(M, N)`` array whose row ``m-1`` is the penalty diagonal of location ``m``."""
    return np.stack([penalty_vector(m, cfg).entries for m in range(1, cfg.n_outputs + 1)])
