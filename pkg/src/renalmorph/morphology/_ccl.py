"""Two-pass union-find connected-component labeling (numba)."""

import numba
import numpy as np

# backward neighbors (dz, dy, dx) in raster order; the 6-connected set is a prefix-free subset
_BACK26 = np.array(
    [(dz, dy, dx) for dz in (-1, 0) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dz, dy, dx) < (0, 0, 0)],
    dtype=np.int64,
)
_BACK6 = np.array([(-1, 0, 0), (0, -1, 0), (0, 0, -1)], dtype=np.int64)


@numba.njit(cache=True, nogil=True)
def _find(parent, a):
    root = a
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        nxt = parent[a]
        parent[a] = root
        a = nxt
    return root


@numba.njit(cache=True, nogil=True)
def _label(fg, back):
    nz, ny, nx = fg.shape
    prov = np.zeros((nz, ny, nx), dtype=np.int32)
    # provisional label k lives at parent[k]; label 0 is background
    parent = np.zeros(16, dtype=np.int32)
    n_prov = 0
    nb = back.shape[0]
    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                if not fg[z, y, x]:
                    continue
                cur = 0
                for k in range(nb):
                    zz = z + back[k, 0]
                    yy = y + back[k, 1]
                    xx = x + back[k, 2]
                    if zz < 0 or yy < 0 or xx < 0 or yy >= ny or xx >= nx:
                        continue
                    lab = prov[zz, yy, xx]
                    if lab == 0:
                        continue
                    r = _find(parent, lab)
                    if cur == 0:
                        cur = r
                    elif r != cur:
                        # the smaller provisional label (earlier in raster order) stays root
                        if r < cur:
                            parent[cur] = r
                            cur = r
                        else:
                            parent[r] = cur
                if cur == 0:
                    n_prov += 1
                    if n_prov >= parent.shape[0]:
                        grown = np.zeros(parent.shape[0] * 2, dtype=np.int32)
                        grown[: parent.shape[0]] = parent
                        parent = grown
                    parent[n_prov] = n_prov
                    cur = n_prov
                prov[z, y, x] = cur

    final = np.zeros(n_prov + 1, dtype=np.int32)
    count = 0
    for lab in range(1, n_prov + 1):
        r = _find(parent, lab)
        if r == lab:
            count += 1
            final[lab] = count
        else:
            final[lab] = final[r]

    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                if prov[z, y, x] != 0:
                    prov[z, y, x] = final[prov[z, y, x]]
    return prov, count


def label_array(fg: np.ndarray, connectivity: int):
    """Label a 3D boolean array; labels follow first-encountered raster order."""
    if connectivity == 26:
        back = _BACK26
    elif connectivity == 6:
        back = _BACK6
    else:
        raise ValueError(f"connectivity must be 6 or 26, got {connectivity}")
    return _label(np.ascontiguousarray(fg, dtype=np.bool_), back)
