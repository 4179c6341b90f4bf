"""Binary slice masks, binary volumes and structuring elements.

Volumes are stored as read-only boolean arrays of shape ``(nz, ny, nx)`` so
that C-order flattening yields the linear voxel index ``x + nx*(y + ny*z)``.
The bit-packed form (LSB first) is produced on demand for serialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "SliceMask",
    "BinaryVolume",
    "StructuringElement",
    "CROSS6",
    "CUBE27",
    "ORIGIN",
    "ball",
    "cube",
    "structuring_element",
    "assemble_volume",
    "resample_mask",
    "complement",
    "count_foreground",
]


def _frozen_bool(array, ndim: int) -> np.ndarray:
    out = np.array(array, dtype=bool, copy=True)
    if out.ndim != ndim:
        raise ValueError(f"expected a {ndim}D array, got shape {out.shape}")
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class SliceMask:
    """One 2D binary mask; ``bits`` has shape ``(height, width)``."""

    exam_id: str
    slice_index: int
    bits: np.ndarray

    def __post_init__(self):
        if self.slice_index < 0:
            raise ValueError(f"slice_index must be non-negative, got {self.slice_index}")
        object.__setattr__(self, "bits", _frozen_bool(self.bits, 2))
        if self.bits.size == 0:
            raise ValueError("slice mask must have positive width and height")

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def __eq__(self, other):
        if not isinstance(other, SliceMask):
            return NotImplemented
        return (
            self.exam_id == other.exam_id
            and self.slice_index == other.slice_index
            and np.array_equal(self.bits, other.bits)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class BinaryVolume:
    """Immutable 3D binary voxel grid with physical spacing in millimeters."""

    voxels: np.ndarray
    spacing_mm: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "voxels", _frozen_bool(self.voxels, 3))
        if self.voxels.size == 0:
            raise ValueError(f"volume dimensions must be positive, got {self.voxels.shape[::-1]}")
        spacing = tuple(float(s) for s in self.spacing_mm)
        if len(spacing) != 3 or not all(math.isfinite(s) and s > 0 for s in spacing):
            raise ValueError(f"spacing must be three positive finite numbers, got {self.spacing_mm!r}")
        object.__setattr__(self, "spacing_mm", spacing)

    @classmethod
    def zeros(cls, nx: int, ny: int, nz: int, spacing_mm=(1.0, 1.0, 1.0)) -> "BinaryVolume":
        return cls(np.zeros((nz, ny, nx), dtype=bool), spacing_mm)

    @classmethod
    def ones(cls, nx: int, ny: int, nz: int, spacing_mm=(1.0, 1.0, 1.0)) -> "BinaryVolume":
        return cls(np.ones((nz, ny, nx), dtype=bool), spacing_mm)

    @classmethod
    def from_points(cls, dims, points: Iterable[Sequence[int]], spacing_mm=(1.0, 1.0, 1.0)) -> "BinaryVolume":
        """Build a volume of ``dims = (nx, ny, nz)`` with the given ``(x, y, z)`` voxels set."""
        nx, ny, nz = dims
        arr = np.zeros((nz, ny, nx), dtype=bool)
        for x, y, z in points:
            arr[z, y, x] = True
        return cls(arr, spacing_mm)

    @classmethod
    def from_packed(cls, dims, payload: bytes, spacing_mm=(1.0, 1.0, 1.0)) -> "BinaryVolume":
        nx, ny, nz = dims
        n = nx * ny * nz
        if len(payload) != (n + 7) // 8:
            raise ValueError(f"payload has {len(payload)} bytes, expected {(n + 7) // 8}")
        bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=n, bitorder="little")
        return cls(bits.reshape(nz, ny, nx).astype(bool), spacing_mm)

    @property
    def nx(self) -> int:
        return self.voxels.shape[2]

    @property
    def ny(self) -> int:
        return self.voxels.shape[1]

    @property
    def nz(self) -> int:
        return self.voxels.shape[0]

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def size(self) -> int:
        return self.voxels.size

    def __getitem__(self, xyz) -> bool:
        x, y, z = xyz
        return bool(self.voxels[z, y, x])

    def packed(self) -> bytes:
        """Bit-packed payload, LSB first, trailing pad bits zero."""
        return np.packbits(self.voxels.ravel(), bitorder="little").tobytes()

    def slice(self, z: int, exam_id: str = "") -> SliceMask:
        return SliceMask(exam_id, z, self.voxels[z])

    def with_voxels(self, voxels: np.ndarray) -> "BinaryVolume":
        """New volume with the same spacing and the given voxel array."""
        if voxels.shape != self.voxels.shape:
            raise ValueError(f"shape {voxels.shape} does not match {self.voxels.shape}")
        return BinaryVolume(voxels, self.spacing_mm)

    def __eq__(self, other):
        if not isinstance(other, BinaryVolume):
            return NotImplemented
        return self.spacing_mm == other.spacing_mm and np.array_equal(self.voxels, other.voxels)

    __hash__ = None

    def __repr__(self):
        return f"BinaryVolume(dims={self.dims}, spacing_mm={self.spacing_mm}, foreground={count_foreground(self)})"


@dataclass(frozen=True)
class StructuringElement:
    """A non-empty set of integer ``(dx, dy, dz)`` offsets."""

    offsets: frozenset
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        offsets = frozenset(tuple(int(c) for c in o) for o in self.offsets)
        if not offsets:
            raise ValueError("structuring element must contain at least one offset")
        if any(len(o) != 3 for o in offsets):
            raise ValueError("offsets must be (dx, dy, dz) triples")
        object.__setattr__(self, "offsets", offsets)

    def __iter__(self):
        # sorted so kernels visit offsets in a fixed order
        return iter(sorted(self.offsets))

    def __len__(self):
        return len(self.offsets)

    def __contains__(self, offset):
        return tuple(offset) in self.offsets

    @property
    def radius(self) -> int:
        """Largest absolute offset component (Chebyshev reach)."""
        return max(max(abs(c) for c in o) for o in self.offsets)

    def reflect(self) -> "StructuringElement":
        name = f"reflect({self.name})" if self.name else None
        return StructuringElement(frozenset((-dx, -dy, -dz) for dx, dy, dz in self.offsets), name)


ORIGIN = StructuringElement(frozenset({(0, 0, 0)}), "origin")
CROSS6 = StructuringElement(
    frozenset({(0, 0, 0), (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)}),
    "cross6",
)
CUBE27 = StructuringElement(
    frozenset((dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)),
    "cube27",
)

_NAMED = {se.name: se for se in (ORIGIN, CROSS6, CUBE27)}


def ball(radius: int) -> StructuringElement:
    """Euclidean ball of lattice offsets with ``|o| <= radius``."""
    r = int(radius)
    if r < 0:
        raise ValueError("radius must be non-negative")
    rng = range(-r, r + 1)
    offsets = frozenset((dx, dy, dz) for dx in rng for dy in rng for dz in rng if dx * dx + dy * dy + dz * dz <= r * r)
    return StructuringElement(offsets, f"ball{r}")


def cube(reach: int) -> StructuringElement:
    """All offsets with Chebyshev norm ``<= reach`` (``cube(1)`` is cube27)."""
    if reach < 0:
        raise ValueError("reach must be non-negative")
    rng = range(-reach, reach + 1)
    return StructuringElement(frozenset((dx, dy, dz) for dx in rng for dy in rng for dz in rng), f"cube{(2 * reach + 1) ** 3}")


def structuring_element(name: str) -> StructuringElement:
    """Look up a structuring element by name: ``origin``, ``cross6``, ``cube27`` or ``ball<r>``."""
    if not isinstance(name, str):
        raise ValueError(f"structuring element name must be a string, got {name!r}")
    if name in _NAMED:
        return _NAMED[name]
    if name.startswith("ball") and name[4:].isdigit():
        return ball(int(name[4:]))
    raise ValueError(f"unknown structuring element {name!r}")


def assemble_volume(slices: Sequence[SliceMask], spacing_mm=(1.0, 1.0, 1.0)) -> BinaryVolume:
    """Stack per-slice masks into a volume; slice ``k`` becomes plane ``z = k``.

    Slices may arrive in any order but their indices must be exactly
    ``0..n-1``. A gap is an error rather than an implicitly empty plane.
    """
    if not slices:
        raise ValueError("cannot assemble a volume from zero slices")
    first = slices[0]
    by_index = {}
    for s in slices:
        if s.exam_id != first.exam_id:
            raise ValueError(f"slice {s.slice_index} belongs to exam {s.exam_id!r}, expected {first.exam_id!r}")
        if (s.width, s.height) != (first.width, first.height):
            raise ValueError(
                f"slice {s.slice_index} is {s.width}x{s.height}, expected {first.width}x{first.height}"
            )
        if s.slice_index in by_index:
            raise ValueError(f"duplicate slice_index {s.slice_index}")
        by_index[s.slice_index] = s
    n = len(slices)
    missing = sorted(set(range(n)) - by_index.keys())
    if missing:
        raise ValueError(f"slice indices must be 0..{n - 1}; missing {missing}")
    return BinaryVolume(np.stack([by_index[k].bits for k in range(n)]), spacing_mm)


def resample_mask(mask: SliceMask, new_width: int, new_height: int) -> SliceMask:
    """Nearest-neighbor resize sampling source pixel ``floor((u + 0.5) * w / W)``."""
    if new_width <= 0 or new_height <= 0:
        raise ValueError(f"target dimensions must be positive, got {new_width}x{new_height}")
    w, h = mask.width, mask.height
    # integer form of floor((u + 0.5) * w / W)
    src_x = ((2 * np.arange(new_width) + 1) * w) // (2 * new_width)
    src_y = ((2 * np.arange(new_height) + 1) * h) // (2 * new_height)
    return SliceMask(mask.exam_id, mask.slice_index, mask.bits[np.ix_(src_y, src_x)])


def complement(v: BinaryVolume) -> BinaryVolume:
    return v.with_voxels(~v.voxels)


def count_foreground(v: BinaryVolume) -> int:
    return int(np.count_nonzero(v.voxels))
