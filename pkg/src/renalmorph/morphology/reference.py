"""Naive reference implementations used as test oracles.

Plain Python loops over every voxel, straight from the operator
definitions. They share no code with the vectorized kernels and are only
meant for small volumes.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from ..voxel import CROSS6, BinaryVolume, StructuringElement
from .ops import ComponentLabeling

__all__ = [
    "reference_dilate",
    "reference_erode",
    "reference_majority",
    "reference_fill",
    "reference_label_components",
    "reference_clean",
    "reference_run_pipeline",
]


def _flat(v: BinaryVolume):
    return v.nx, v.ny, v.nz, v.voxels.ravel().tolist()


def _volume(v: BinaryVolume, flat) -> BinaryVolume:
    return v.with_voxels(np.array(flat, dtype=bool).reshape(v.voxels.shape))


def _neighbors(connectivity):
    if connectivity == 6:
        return [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    if connectivity == 26:
        return [
            (dx, dy, dz)
            for dz in (-1, 0, 1)
            for dy in (-1, 0, 1)
            for dx in (-1, 0, 1)
            if (dx, dy, dz) != (0, 0, 0)
        ]
    raise ValueError(f"connectivity must be 6 or 26, got {connectivity}")


def reference_dilate(v: BinaryVolume, se: StructuringElement = CROSS6) -> BinaryVolume:
    nx, ny, nz, src = _flat(v)
    offsets = list(se.offsets)
    out = [False] * len(src)
    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                for dx, dy, dz in offsets:
                    qx, qy, qz = x - dx, y - dy, z - dz
                    if 0 <= qx < nx and 0 <= qy < ny and 0 <= qz < nz and src[qx + nx * (qy + ny * qz)]:
                        out[x + nx * (y + ny * z)] = True
                        break
    return _volume(v, out)


def reference_erode(v: BinaryVolume, se: StructuringElement = CROSS6) -> BinaryVolume:
    nx, ny, nz, src = _flat(v)
    offsets = list(se.offsets)
    out = [False] * len(src)
    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                ok = True
                for dx, dy, dz in offsets:
                    qx, qy, qz = x + dx, y + dy, z + dz
                    if not (0 <= qx < nx and 0 <= qy < ny and 0 <= qz < nz and src[qx + nx * (qy + ny * qz)]):
                        ok = False
                        break
                out[x + nx * (y + ny * z)] = ok
    return _volume(v, out)


def reference_majority(v: BinaryVolume, threshold: int = 14) -> BinaryVolume:
    if not 1 <= threshold <= 27:
        raise ValueError(f"majority threshold must be in 1..27, got {threshold}")
    nx, ny, nz, src = _flat(v)
    out = [False] * len(src)
    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                count = 0
                for qz in range(z - 1, z + 2):
                    for qy in range(y - 1, y + 2):
                        for qx in range(x - 1, x + 2):
                            if 0 <= qx < nx and 0 <= qy < ny and 0 <= qz < nz and src[qx + nx * (qy + ny * qz)]:
                                count += 1
                out[x + nx * (y + ny * z)] = count >= threshold
    return _volume(v, out)


def _flood(nx, ny, nz, member, seeds, steps, mark, label):
    queue = deque(seeds)
    for i in seeds:
        mark[i] = label
    while queue:
        i = queue.popleft()
        x = i % nx
        y = (i // nx) % ny
        z = i // (nx * ny)
        for dx, dy, dz in steps:
            qx, qy, qz = x + dx, y + dy, z + dz
            if 0 <= qx < nx and 0 <= qy < ny and 0 <= qz < nz:
                j = qx + nx * (qy + ny * qz)
                if member[j] and not mark[j]:
                    mark[j] = label
                    queue.append(j)


def reference_label_components(v: BinaryVolume, connectivity: int = 26) -> ComponentLabeling:
    steps = _neighbors(connectivity)
    nx, ny, nz, src = _flat(v)
    labels = [0] * len(src)
    current = 0
    for i, on in enumerate(src):
        if on and not labels[i]:
            current += 1
            _flood(nx, ny, nz, src, [i], steps, labels, current)
    sizes = {k: 0 for k in range(1, current + 1)}
    for lab in labels:
        if lab:
            sizes[lab] += 1
    arr = np.array(labels, dtype=np.int32).reshape(v.voxels.shape)
    return ComponentLabeling(arr, sizes, connectivity)


def reference_fill(v: BinaryVolume, background_connectivity: int = 6) -> BinaryVolume:
    steps = _neighbors(background_connectivity)
    nx, ny, nz, src = _flat(v)
    background = [not on for on in src]
    seeds = []
    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                i = x + nx * (y + ny * z)
                on_border = x in (0, nx - 1) or y in (0, ny - 1) or z in (0, nz - 1)
                if on_border and background[i]:
                    seeds.append(i)
    reached = [0] * len(src)
    _flood(nx, ny, nz, background, seeds, steps, reached, 1)
    return _volume(v, [on or not reached[i] for i, on in enumerate(src)])


def reference_clean(v: BinaryVolume, keep_count: int = 2, min_voxels: int = 64, connectivity: int = 26) -> BinaryVolume:
    lab = reference_label_components(v, connectivity)
    # first voxel of each label, for the raster-order tie-break
    first = {}
    for i, k in enumerate(lab.labels.ravel().tolist()):
        if k and k not in first:
            first[k] = i
    ranked = sorted(lab.component_sizes, key=lambda k: (-lab.component_sizes[k], first[k]))
    kept = {k for k in ranked[:keep_count] if lab.component_sizes[k] >= min_voxels}
    return _volume(v, [k in kept for k in lab.labels.ravel().tolist()])


def reference_run_pipeline(v: BinaryVolume, spec) -> BinaryVolume:
    """Run a :class:`PipelineSpec` with the reference operators."""
    from ..voxel import structuring_element
    from .pipeline import Clean, Dilate, Erode, Fill, Majority

    for step in spec:
        if isinstance(step, Dilate):
            v = reference_dilate(v, structuring_element(step.se))
        elif isinstance(step, Erode):
            v = reference_erode(v, structuring_element(step.se))
        elif isinstance(step, Clean):
            v = reference_clean(v, step.keep, step.min_voxels, step.connectivity)
        elif isinstance(step, Majority):
            v = reference_majority(v, step.threshold)
        elif isinstance(step, Fill):
            v = reference_fill(v, step.connectivity)
        else:
            raise TypeError(f"unsupported step {step!r}")
    return v
