"""Periodic sampling lattices, real fields on them, and the ADF1 field format."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAX_DIM = 4
DIRECT_CONVOLVE_LIMIT = 2**16

ADF_MAGIC = b"ADF1"
ADF_VERSION = 1
_ADF_HEADER = struct.Struct("<4sIIId")


class FieldDecodeError(ValueError):
    """Raised when an ADF1 payload is malformed."""


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """A d-dimensional periodic box of side ``box_length`` with ``n`` samples per axis.

    Sample ``i`` along an axis sits at ``i * spacing``; offsets are read
    periodically, so index ``i`` and ``i - n`` name the same point.
    """

    d: int
    n: int
    box_length: float

    @property
    def spacing(self) -> float:
        return self.box_length / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.d

    @property
    def volume(self) -> float:
        return self.box_length**self.d

    def offsets(self) -> np.ndarray:
        """Signed integer offsets ``-n/2 .. n/2-1`` in FFT order (0 first)."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)

    def coordinates(self) -> list[np.ndarray]:
        """Broadcastable signed physical coordinates, one array per axis."""
        off = self.offsets() * self.spacing
        out = []
        for axis in range(self.d):
            shape = [1] * self.d
            shape[axis] = self.n
            out.append(off.reshape(shape))
        return out

    def frequencies(self, real: bool = False) -> list[np.ndarray]:
        """Broadcastable lattice frequencies m/L per axis (FFT order).

        With ``real=True`` the last axis carries the non-negative half used by
        real-input transforms.
        """
        out = []
        h = self.spacing
        for axis in range(self.d):
            if real and axis == self.d - 1:
                f = np.fft.rfftfreq(self.n, d=h)
            else:
                f = np.fft.fftfreq(self.n, d=h)
            shape = [1] * self.d
            shape[axis] = f.size
            out.append(f.reshape(shape))
        return out

    def radial_frequency(self, real: bool = False) -> np.ndarray:
        return np.sqrt(sum(f**2 for f in self.frequencies(real=real)))


def make_grid(d: int, n: int, box_length: float) -> GridSpec:
    if not 1 <= d <= MAX_DIM:
        raise ValueError(f"dimension d={d} outside [1, {MAX_DIM}]")
    if not isinstance(n, (int, np.integer)) or not _is_power_of_two(int(n)):
        raise ValueError(f"samples per axis n={n} is not a power of two")
    if n < 4:
        raise ValueError(f"samples per axis n={n} must be at least 4")
    if not box_length > 0 or not math.isfinite(box_length):
        raise ValueError(f"box_length={box_length} must be positive and finite")
    # n is a power of two, so L/n is exact in binary floating point.
    return GridSpec(int(d), int(n), float(box_length))


class Field:
    """Real samples on a :class:`GridSpec`; immutable after construction."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: GridSpec, values):
        arr = np.array(values, dtype=np.float64, copy=True)
        if arr.size != grid.size:
            raise ValueError(f"expected {grid.size} values, got {arr.size}")
        arr = arr.reshape(grid.shape)
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Field is immutable")

    @classmethod
    def zeros(cls, grid: GridSpec) -> Field:
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: GridSpec, c: float) -> Field:
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def impulse(cls, grid: GridSpec, mass: float = 1.0) -> Field:
        """``mass`` concentrated on the origin cell (value mass / h^d)."""
        v = np.zeros(grid.shape)
        v[(0,) * grid.d] = mass / grid.cell_volume
        return cls(grid, v)

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def shifted(self, cells) -> Field:
        """Translate by whole cells along each axis (periodic)."""
        return Field(self.grid, np.roll(self.values, tuple(cells), axis=tuple(range(self.grid.d))))

    def _check(self, other: Field) -> None:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: Field) -> Field:
        self._check(other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: Field) -> Field:
        self._check(other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> Field:
        return Field(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self) -> Field:
        return Field(self.grid, -self.values)

    def __abs__(self) -> Field:
        return Field(self.grid, np.abs(self.values))

    def __repr__(self) -> str:
        return f"Field(grid={self.grid!r})"


def lp_norm(f: Field, p: float) -> float:
    """Discrete L^p norm ``(sum |f|^p h^d)^(1/p)``; ``p=inf`` gives ``max |f|``."""
    if p == math.inf:
        return float(np.max(np.abs(f.values)))
    if not p >= 1:
        raise ValueError(f"p={p} must be >= 1")
    a = np.abs(f.values)
    peak = a.max()
    if peak == 0:
        return 0.0
    # Scale by the peak so large p cannot overflow.
    s = np.sum((a / peak) ** p) * f.grid.cell_volume
    return float(peak * s ** (1.0 / p))


def level_measure(f: Field, lam: float) -> float:
    """Measure of ``{f > lam}`` counted in cells."""
    return float(np.count_nonzero(f.values > lam)) * f.grid.cell_volume


def direct_convolve(f: Field, g: Field) -> Field:
    """Periodic convolution by explicit summation over every source cell.

    Only meant as an oracle: it refuses grids with more than 2**16 cells.
    """
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    grid = f.grid
    if grid.size > DIRECT_CONVOLVE_LIMIT:
        raise ValueError(f"direct_convolve limited to {DIRECT_CONVOLVE_LIMIT} cells, got {grid.size}")
    axes = tuple(range(grid.d))
    out = np.zeros(grid.shape)
    for idx in np.ndindex(*grid.shape):
        fy = f.values[idx]
        if fy != 0.0:
            # g(x - y) as a function of x is g shifted by y.
            out += fy * np.roll(g.values, idx, axis=axes)
    return Field(grid, out * grid.cell_volume)


def write_field(f: Field, path) -> None:
    g = f.grid
    header = _ADF_HEADER.pack(ADF_MAGIC, ADF_VERSION, g.d, g.n, g.box_length)
    payload = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    Path(path).write_bytes(header + payload)


def read_field(path) -> Field:
    return decode_field(Path(path).read_bytes())


def decode_field(blob: bytes) -> Field:
    if len(blob) < _ADF_HEADER.size:
        raise FieldDecodeError(f"truncated header: {len(blob)} bytes")
    magic, version, d, n, box = _ADF_HEADER.unpack_from(blob)
    if magic != ADF_MAGIC:
        raise FieldDecodeError(f"bad magic {magic!r}")
    if version != ADF_VERSION:
        raise FieldDecodeError(f"unsupported version {version}")
    try:
        grid = make_grid(d, n, box)
    except ValueError as exc:
        raise FieldDecodeError(f"invalid grid header: {exc}") from exc
    expected = _ADF_HEADER.size + 8 * grid.size
    if len(blob) != expected:
        raise FieldDecodeError(f"payload size {len(blob)} != expected {expected} for d={d}, n={n}")
    values = np.frombuffer(blob, dtype="<f8", offset=_ADF_HEADER.size)
    try:
        return Field(grid, values)
    except ValueError as exc:
        raise FieldDecodeError(str(exc)) from exc

