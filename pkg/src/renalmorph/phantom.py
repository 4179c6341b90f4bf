"""Synthetic kidney phantoms and perturbed predictions.

A ground-truth phantom is two disjoint voxelized ellipsoids. A prediction
is derived from it by a seeded sequence of error modes: boundary flips,
interior holes, background speckle and dropped slices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .morphology.ops import dilate, erode
from .voxel import CROSS6, CUBE27, BinaryVolume, ball, cube

__all__ = [
    "Ellipsoid",
    "PhantomSpec",
    "PerturbationSpec",
    "MIN_SLICES",
    "MAX_SLICES",
    "ellipsoid_mask",
    "generate_ground_truth",
    "random_phantom_spec",
    "perturb",
]

# slice counts per exam in the source cohort
MIN_SLICES, MAX_SLICES = 11, 56
MARGIN = 3


def _rotation(angles_deg) -> np.ndarray:
    """Rotation matrix from (z, y, x) Euler angles in degrees, applied z first."""
    az, ay, ax = (math.radians(a) for a in angles_deg)
    cz, sz = math.cos(az), math.sin(az)
    cy, sy = math.cos(ay), math.sin(ay)
    cx, sx = math.cos(ax), math.sin(ax)
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    return rz @ ry @ rx


@dataclass(frozen=True)
class Ellipsoid:
    """Center and semi-axes in voxel units, ``(x, y, z)`` order."""

    center: tuple
    semi_axes: tuple
    rotation_deg: tuple = (0.0, 0.0, 0.0)

    def extent(self) -> np.ndarray:
        """Half-width of the axis-aligned bounding box along x, y, z."""
        r = _rotation(self.rotation_deg)
        return np.sqrt((r**2) @ np.asarray(self.semi_axes, dtype=float) ** 2)


@dataclass(frozen=True)
class PhantomSpec:
    dims: tuple
    kidneys: tuple
    seed: int = 0
    spacing_mm: tuple = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class PerturbationSpec:
    """Error modes applied to a ground-truth volume; all-default means identity.

    ``speckle_max_size`` bounds the voxel count of each speckle ball,
    ``speckle_gap`` is the minimum Chebyshev distance between a speckle voxel
    and any other foreground, and ``flip_probability`` applies to voxels one
    step either side of the surface.
    """

    speckle_count: int = 0
    speckle_max_size: int = 0
    hole_count: int = 0
    hole_max_radius: int = 0
    flip_probability: float = 0.0
    dropped_slices: int = 0
    seed: int = 0
    speckle_gap: int = 3

    def __post_init__(self):
        for name in ("speckle_count", "speckle_max_size", "hole_count", "hole_max_radius", "dropped_slices"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.speckle_gap < 2:
            raise ValueError(f"speckle_gap must be at least 2, got {self.speckle_gap}")
        if not 0 <= self.flip_probability <= 1:
            raise ValueError(f"flip_probability must be in [0, 1], got {self.flip_probability}")


def ellipsoid_mask(dims, e: Ellipsoid) -> np.ndarray:
    """Boolean ``(nz, ny, nx)`` mask of voxel centers inside the ellipsoid."""
    out = np.zeros(tuple(dims)[::-1], dtype=bool)
    ext = e.extent()
    lo = [max(int(math.floor(c - r)), 0) for c, r in zip(e.center, ext)]
    hi = [min(int(math.ceil(c + r)) + 1, n) for c, r, n in zip(e.center, ext, dims)]
    if any(h <= l for l, h in zip(lo, hi)):
        return out
    z, y, x = np.meshgrid(*(np.arange(lo[a], hi[a]) for a in (2, 1, 0)), indexing="ij")
    d = np.stack([x - e.center[0], y - e.center[1], z - e.center[2]], axis=-1).astype(float)
    local = d @ _rotation(e.rotation_deg)  # rows are R^T d
    q = sum((local[..., i] / e.semi_axes[i]) ** 2 for i in range(3))
    out[lo[2]:hi[2], lo[1]:hi[1], lo[0]:hi[0]] = q <= 1.0
    return out


def generate_ground_truth(spec: PhantomSpec) -> BinaryVolume:
    """Voxelize the two kidneys; each must clear the border by 3 voxels and not touch the other."""
    dims = tuple(int(d) for d in spec.dims)
    masks = []
    for i, e in enumerate(spec.kidneys):
        if min(e.semi_axes) <= 0:
            raise ValueError(f"kidney {i}: semi-axes must be positive")
        ext = e.extent()
        for axis, n in enumerate(dims):
            c = e.center[axis]
            if c - ext[axis] < MARGIN or c + ext[axis] > n - 1 - MARGIN:
                raise ValueError(f"kidney {i} comes within {MARGIN} voxels of the border along axis {'xyz'[axis]}")
        m = ellipsoid_mask(dims, e)
        if not m.any():
            raise ValueError(f"kidney {i} contains no voxel centers")
        masks.append(m)
    vox = np.zeros(dims[::-1], dtype=bool)
    for m in masks:
        grown = dilate(BinaryVolume(m), CUBE27).voxels
        if (grown & vox).any():
            raise ValueError("kidneys overlap or touch")
        vox |= m
    return BinaryVolume(vox, spec.spacing_mm)


def random_phantom_spec(seed: int, width: int = 128, height: int = 128, nz: int | None = None, spacing_mm=(1.0, 1.0, 1.0)) -> PhantomSpec:
    """Two kidney-like ellipsoids, left and right of the midline, with seeded jitter.

    The slice count is drawn from 11..56 unless ``nz`` is given.
    """
    rng = np.random.default_rng(seed)
    if nz is None:
        nz = int(rng.integers(MIN_SLICES, MAX_SLICES + 1))
    dims = (width, height, nz)
    for _ in range(1000):
        kidneys = []
        for side in (0.3, 0.7):
            semi = (
                rng.uniform(0.07, 0.11) * width,
                rng.uniform(0.14, 0.22) * height,
                rng.uniform(0.3, 0.45) * (nz - 1 - 2 * MARGIN),
            )
            center = (
                (side + rng.uniform(-0.03, 0.03)) * (width - 1),
                rng.uniform(0.42, 0.58) * (height - 1),
                (nz - 1) / 2 + rng.uniform(-0.5, 0.5),
            )
            rot = (rng.uniform(-20, 20), rng.uniform(-5, 5), rng.uniform(-5, 5))
            kidneys.append(Ellipsoid(center, semi, rot))
        spec = PhantomSpec(dims, tuple(kidneys), seed, tuple(spacing_mm))
        try:
            generate_ground_truth(spec)
        except ValueError:
            continue
        return spec
    raise ValueError(f"could not place two kidneys in a {width}x{height}x{nz} volume")


def _ball_radii(limit: int) -> list:
    """Radii of lattice balls with at most ``limit`` voxels."""
    out = []
    while len(ball(len(out))) <= limit:
        out.append(len(out))
    return out


def _offsets_zyx(se) -> np.ndarray:
    return np.array([(dz, dy, dx) for dx, dy, dz in se], dtype=np.int64)


def perturb(gt: BinaryVolume, spec: PerturbationSpec) -> BinaryVolume:
    """Apply boundary flips, holes, speckle and slice drops, in that order.

    Each mode only touches its own region: flips stay within one voxel of the
    surface, holes are balls enclosed by at least three voxels of untouched
    foreground, speckle balls are placed by rejection sampling at least
    ``speckle_gap`` voxels (Chebyshev) from any foreground and from each
    other, and dropped slices are chosen among slices that contain foreground.
    """
    rng = np.random.default_rng(spec.seed)
    vox = gt.voxels.copy()
    shape = vox.shape

    if spec.flip_probability > 0:
        shell = dilate(gt, CROSS6).voxels & ~erode(gt, CROSS6).voxels
        idx = np.flatnonzero(shell)
        flips = idx[rng.random(idx.size) < spec.flip_probability]
        vox.ravel()[flips] ^= True

    if spec.hole_count > 0 and spec.hole_max_radius > 0:
        for _ in range(spec.hole_count):
            r = int(rng.integers(1, spec.hole_max_radius + 1))
            centers = np.flatnonzero(erode(gt, ball(r + MARGIN)).voxels)
            if centers.size == 0:
                continue
            c = np.array(np.unravel_index(centers[rng.integers(centers.size)], shape))
            vox[tuple((_offsets_zyx(ball(r)) + c).T)] = False

    if spec.speckle_count > 0 and spec.speckle_max_size > 0:
        radii = _ball_radii(spec.speckle_max_size)
        guard = cube(spec.speckle_gap - 1)
        blocked = dilate(BinaryVolume(vox), guard).voxels.copy()
        guard_offsets = _offsets_zyx(guard)
        for _ in range(spec.speckle_count):
            r = radii[int(rng.integers(len(radii)))]
            if any(n <= 2 * r for n in shape):
                continue
            blob_offsets = _offsets_zyx(ball(r))
            for _attempt in range(1000):
                c = np.array([rng.integers(r, n - r) for n in shape])
                pts = blob_offsets + c
                if blocked[tuple(pts.T)].any():
                    continue
                vox[tuple(pts.T)] = True
                near = (pts[:, None, :] + guard_offsets[None, :, :]).reshape(-1, 3)
                inside = np.all((near >= 0) & (near < shape), axis=1)
                blocked[tuple(near[inside].T)] = True
                break

    if spec.dropped_slices > 0:
        occupied = np.flatnonzero(gt.voxels.any(axis=(1, 2)))
        k = min(spec.dropped_slices, occupied.size)
        if k:
            drop = rng.choice(occupied, size=k, replace=False)
            vox[np.sort(drop)] = False

    return gt.with_voxels(vox)
