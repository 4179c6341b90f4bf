"""Vectorized binary morphology on :class:`BinaryVolume`.

Every operator first crops to the foreground bounding box grown by the
operator's reach. Outside that box the result is known (background), so
large mostly-empty volumes cost little more than the box itself.
Out-of-volume positions always count as background.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..voxel import CROSS6, BinaryVolume, StructuringElement
from ._ccl import label_array

__all__ = [
    "ComponentLabeling",
    "dilate",
    "erode",
    "label_components",
    "clean",
    "majority",
    "fill",
]


@dataclass(frozen=True, eq=False)
class ComponentLabeling:
    """Labels ``1..K`` in raster order of each component's first voxel; 0 is background."""

    labels: np.ndarray
    component_sizes: dict
    connectivity: int

    @property
    def count(self) -> int:
        return len(self.component_sizes)


def _active_box(vox: np.ndarray, pad: int):
    """Slices covering the foreground bounding box grown by ``pad``, or None if empty."""
    box = []
    for axis in range(3):
        others = tuple(a for a in range(3) if a != axis)
        hit = np.flatnonzero(vox.any(axis=others))
        if hit.size == 0:
            return None
        lo = max(int(hit[0]) - pad, 0)
        hi = min(int(hit[-1]) + 1 + pad, vox.shape[axis])
        box.append(slice(lo, hi))
    return tuple(box)


def _shift_slices(shape, delta):
    """(dst, src) slices such that ``dst[p]`` pairs with ``src[p - delta]`` (delta in z, y, x)."""
    dst, src = [], []
    for n, d in zip(shape, delta):
        if abs(d) >= n:
            return None
        dst.append(slice(max(d, 0), n + min(d, 0)))
        src.append(slice(max(-d, 0), n - max(d, 0)))
    return tuple(dst), tuple(src)


def dilate(v: BinaryVolume, se: StructuringElement = CROSS6) -> BinaryVolume:
    """Set ``p`` iff some ``p - o`` (``o`` in ``se``) is an in-bounds foreground voxel."""
    out = np.zeros_like(v.voxels)
    box = _active_box(v.voxels, se.radius)
    if box is None:
        return v.with_voxels(out)
    src = v.voxels[box]
    acc = np.zeros_like(src)
    for dx, dy, dz in se:
        sl = _shift_slices(src.shape, (dz, dy, dx))
        if sl is None:
            continue
        dst, srcsl = sl
        acc[dst] |= src[srcsl]
    out[box] = acc
    return v.with_voxels(out)


def erode(v: BinaryVolume, se: StructuringElement = CROSS6) -> BinaryVolume:
    """Set ``p`` iff every ``p + o`` (``o`` in ``se``) is an in-bounds foreground voxel."""
    out = np.zeros_like(v.voxels)
    box = _active_box(v.voxels, se.radius)
    if box is None:
        return v.with_voxels(out)
    src = v.voxels[box]
    acc = np.ones_like(src)
    for dx, dy, dz in se:
        # acc[p] &= src[p + o]; positions whose partner leaves the box are background
        sl = _shift_slices(src.shape, (-dz, -dy, -dx))
        if sl is None:
            acc[...] = False
            break
        dst, srcsl = sl
        keep = np.zeros_like(src)
        keep[dst] = src[srcsl]
        acc &= keep
    out[box] = acc
    return v.with_voxels(out)


def majority(v: BinaryVolume, threshold: int = 14) -> BinaryVolume:
    """Set ``p`` iff at least ``threshold`` voxels of its 3x3x3 neighborhood are set.

    The neighborhood includes ``p`` itself. The rule is symmetric: it can
    clear foreground and also set background. A removal-only variant is the
    voxelwise AND of this result with ``v``.
    """
    if not 1 <= threshold <= 27:
        raise ValueError(f"majority threshold must be in 1..27, got {threshold}")
    out = np.zeros_like(v.voxels)
    box = _active_box(v.voxels, 1)
    if box is None:
        return v.with_voxels(out)
    counts = v.voxels[box].astype(np.uint8)
    for axis in range(3):
        n = counts.shape[axis]
        summed = counts.copy()
        if n > 1:
            lo = [slice(None)] * 3
            hi = [slice(None)] * 3
            lo[axis] = slice(0, n - 1)
            hi[axis] = slice(1, n)
            summed[tuple(hi)] += counts[tuple(lo)]
            summed[tuple(lo)] += counts[tuple(hi)]
        counts = summed
    out[box] = counts >= threshold
    return v.with_voxels(out)


def label_components(v: BinaryVolume, connectivity: int = 26) -> ComponentLabeling:
    labels = np.zeros(v.voxels.shape, dtype=np.int32)
    count = 0
    box = _active_box(v.voxels, 0)
    if box is not None:
        # cropping keeps raster order, so first-encountered order is unchanged
        sub, count = label_array(v.voxels[box], connectivity)
        labels[box] = sub
    elif connectivity not in (6, 26):
        raise ValueError(f"connectivity must be 6 or 26, got {connectivity}")
    sizes = np.bincount(labels.ravel(), minlength=count + 1)[1:]
    labels.flags.writeable = False
    return ComponentLabeling(labels, {i + 1: int(s) for i, s in enumerate(sizes)}, connectivity)


def clean(v: BinaryVolume, keep_count: int = 2, min_voxels: int = 64, connectivity: int = 26) -> BinaryVolume:
    """Keep the ``keep_count`` largest components that have at least ``min_voxels`` voxels.

    Equal sizes are ranked by label, i.e. by first-encountered raster index.
    """
    if keep_count < 1:
        raise ValueError(f"keep_count must be positive, got {keep_count}")
    if min_voxels < 0:
        raise ValueError(f"min_voxels must be non-negative, got {min_voxels}")
    lab = label_components(v, connectivity)
    ranked = sorted(lab.component_sizes.items(), key=lambda item: (-item[1], item[0]))
    kept = [label for label, size in ranked[:keep_count] if size >= min_voxels]
    lut = np.zeros(lab.count + 1, dtype=bool)
    lut[kept] = True
    return v.with_voxels(lut[lab.labels])


def fill(v: BinaryVolume, background_connectivity: int = 6) -> BinaryVolume:
    """Set every background voxel that cannot reach the volume border through background."""
    if background_connectivity not in (6, 26):
        raise ValueError(f"connectivity must be 6 or 26, got {background_connectivity}")
    box = _active_box(v.voxels, 1)
    if box is None:
        return v
    sub = v.voxels[box]
    # every face voxel of the grown box is either on the volume border or outside
    # the foreground box, hence border-reachable background whenever it is background
    bg_labels, count = label_array(~sub, background_connectivity)
    if count == 0:
        return v
    border = np.zeros(count + 1, dtype=bool)
    for axis in range(3):
        border[np.take(bg_labels, 0, axis=axis)] = True
        border[np.take(bg_labels, -1, axis=axis)] = True
    enclosed = ~border
    enclosed[0] = False
    out = v.voxels.copy()
    out[box] |= enclosed[bg_labels]
    return v.with_voxels(out)
