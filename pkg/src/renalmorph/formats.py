"""File formats: PGM slice masks, BVOL volumes, dataset manifests, CSV.

BVOL layout::

    BVOL1
    dims <nx> <ny> <nz>
    spacing <sx> <sy> <sz>
    data bitpacked
    <ceil(nx*ny*nz / 8) payload bytes, voxel i at bit i % 8 of byte i // 8, LSB first>

Every writer goes through :func:`atomic_write`, so an output file is either
complete or absent.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .voxel import BinaryVolume, SliceMask, assemble_volume

__all__ = [
    "FormatError",
    "atomic_write",
    "read_slice_mask",
    "write_slice_mask",
    "encode_pgm",
    "decode_pgm",
    "read_volume",
    "write_volume",
    "encode_bvol",
    "decode_bvol",
    "DatasetManifest",
    "read_manifest",
    "write_manifest",
    "load_manifest_volume",
    "write_exam",
    "discover_exams",
    "write_csv",
    "read_csv",
    "GT_MANIFEST",
    "PRED_MANIFEST",
]

GT_MANIFEST = "gt.manifest.json"
PRED_MANIFEST = "pred.manifest.json"


class FormatError(ValueError):
    """A mask, volume or manifest file could not be parsed."""


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


# -- PGM ---------------------------------------------------------------------


def encode_pgm(mask: SliceMask) -> bytes:
    header = f"P5\n{mask.width} {mask.height}\n255\n".encode("ascii")
    return header + (mask.bits.astype(np.uint8) * 255).tobytes()


def _pgm_tokens(data: bytes, count: int):
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise FormatError(f"PGM header truncated at byte {pos}")
        if data[pos : pos + 1] == b"#":
            end = data.find(b"\n", pos)
            if end < 0:
                raise FormatError(f"PGM header truncated at byte {len(data)}")
            pos = end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append((data[start:pos], start))
    # exactly one whitespace byte separates maxval from the raster
    if pos >= len(data):
        raise FormatError(f"PGM header truncated at byte {pos}")
    return tokens, pos + 1


def decode_pgm(data: bytes, exam_id: str = "", slice_index: int = 0) -> SliceMask:
    """Parse a binary 8-bit PGM; pixels >= 128 are foreground."""
    if data[:2] != b"P5":
        raise FormatError(f"not a binary PGM: magic {data[:2]!r} at byte 0")
    tokens, offset = _pgm_tokens(data[2:], 3)
    offset += 2
    values = []
    for tok, at in tokens:
        try:
            values.append(int(tok))
        except ValueError:
            raise FormatError(f"bad PGM header field {tok!r} at byte {at + 2}") from None
    width, height, maxval = values
    if width <= 0 or height <= 0:
        raise FormatError(f"PGM dimensions must be positive, got {width}x{height}")
    if not 0 < maxval < 256:
        raise FormatError(f"only 8-bit PGM is supported, maxval {maxval}")
    need = width * height
    have = len(data) - offset
    if have < need:
        raise FormatError(f"PGM payload truncated at byte {len(data)}: expected {need} pixel bytes from offset {offset}, found {have}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=need, offset=offset).reshape(height, width)
    return SliceMask(exam_id, slice_index, pixels >= 128)


def write_slice_mask(mask: SliceMask, path) -> None:
    atomic_write(path, encode_pgm(mask))


def read_slice_mask(path, exam_id: str = "", slice_index: int = 0) -> SliceMask:
    return decode_pgm(Path(path).read_bytes(), exam_id, slice_index)


# -- BVOL --------------------------------------------------------------------


def _fmt_float(x: float) -> str:
    return repr(float(x))


def encode_bvol(v: BinaryVolume) -> bytes:
    header = (
        "BVOL1\n"
        f"dims {v.nx} {v.ny} {v.nz}\n"
        f"spacing {' '.join(_fmt_float(s) for s in v.spacing_mm)}\n"
        "data bitpacked\n"
    )
    return header.encode("ascii") + v.packed()


def decode_bvol(data: bytes) -> BinaryVolume:
    pos = 0
    lines = []
    for _ in range(4):
        end = data.find(b"\n", pos)
        if end < 0:
            raise FormatError(f"BVOL header truncated at byte {len(data)}")
        lines.append((data[pos:end].decode("ascii", errors="replace"), pos))
        pos = end + 1
    (magic, _), (dims_line, dims_at), (spacing_line, sp_at), (data_line, data_at) = lines
    if magic != "BVOL1":
        raise FormatError(f"bad magic {magic!r}, expected 'BVOL1'")
    parts = dims_line.split()
    try:
        if len(parts) != 4 or parts[0] != "dims":
            raise ValueError
        dims = tuple(int(p) for p in parts[1:])
        if min(dims) <= 0:
            raise ValueError
    except ValueError:
        raise FormatError(f"bad dims line {dims_line!r} at byte {dims_at}") from None
    parts = spacing_line.split()
    try:
        if len(parts) != 4 or parts[0] != "spacing":
            raise ValueError
        spacing = tuple(float(p) for p in parts[1:])
        if not all(math.isfinite(s) and s > 0 for s in spacing):
            raise ValueError
    except ValueError:
        raise FormatError(f"bad spacing line {spacing_line!r} at byte {sp_at}") from None
    if data_line != "data bitpacked":
        raise FormatError(f"unsupported data line {data_line!r} at byte {data_at}")
    n = dims[0] * dims[1] * dims[2]
    payload = data[pos:]
    expected = (n + 7) // 8
    if len(payload) != expected:
        raise FormatError(f"payload at byte {pos} has {len(payload)} bytes, expected {expected}")
    if n % 8 and payload[-1] >> (n % 8):
        warnings.warn("BVOL payload has nonzero pad bits; ignoring them", stacklevel=2)
    return BinaryVolume.from_packed(dims, payload, spacing)


def write_volume(v: BinaryVolume, path) -> None:
    atomic_write(path, encode_bvol(v))


def read_volume(path) -> BinaryVolume:
    return decode_bvol(Path(path).read_bytes())


# -- manifests and datasets -------------------------------------------------


@dataclass(frozen=True)
class DatasetManifest:
    """Slice files of one exam; ``slices`` holds ``(index, relative path)`` pairs."""

    exam_id: str
    spacing_mm: tuple
    slices: tuple

    def to_json(self) -> str:
        doc = {
            "exam_id": self.exam_id,
            "spacing_mm": [float(s) for s in self.spacing_mm],
            "slices": [{"index": i, "path": p} for i, p in self.slices],
        }
        return json.dumps(doc, indent=2) + "\n"


def read_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        exam_id = doc["exam_id"]
        spacing = tuple(float(s) for s in doc["spacing_mm"])
        slices = tuple((int(s["index"]), str(s["path"])) for s in doc["slices"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed manifest ({exc})") from None
    if not isinstance(exam_id, str) or len(spacing) != 3:
        raise FormatError(f"{path}: exam_id must be a string and spacing_mm three numbers")
    indices = [i for i, _ in slices]
    if indices != list(range(len(indices))):
        raise FormatError(f"{path}: slice indices must be 0..n-1 ascending, got {indices}")
    for _, rel in slices:
        if not (path.parent / rel).is_file():
            raise FormatError(f"{path}: slice file {rel} does not exist")
    return DatasetManifest(exam_id, spacing, slices)


def write_manifest(manifest: DatasetManifest, path) -> None:
    atomic_write(path, manifest.to_json().encode("utf-8"))


def load_manifest_volume(path) -> BinaryVolume:
    """Read every slice named by a manifest and stack them into a volume."""
    path = Path(path)
    m = read_manifest(path)
    slices = [read_slice_mask(path.parent / rel, m.exam_id, i) for i, rel in m.slices]
    return assemble_volume(slices, m.spacing_mm)


def write_exam(root, exam_id: str, gt: BinaryVolume, pred: BinaryVolume) -> Path:
    """Write one exam as ``<root>/<exam_id>/{gt,pred}/NNN.pgm`` plus the two manifests."""
    exam_dir = Path(root) / exam_id
    for kind, vol, name in (("gt", gt, GT_MANIFEST), ("pred", pred, PRED_MANIFEST)):
        entries = []
        for z in range(vol.nz):
            rel = f"{kind}/{z:03d}.pgm"
            write_slice_mask(vol.slice(z, exam_id), exam_dir / rel)
            entries.append((z, rel))
        write_manifest(DatasetManifest(exam_id, vol.spacing_mm, tuple(entries)), exam_dir / name)
    return exam_dir


def discover_exams(root) -> list:
    """Exam directories under ``root`` holding both manifests, sorted by name."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory {root} does not exist")
    return sorted(
        (p for p in root.iterdir() if (p / GT_MANIFEST).is_file() and (p / PRED_MANIFEST).is_file()),
        key=lambda p: p.name,
    )


# -- CSV ---------------------------------------------------------------------


def write_csv(rows, path=None) -> str:
    """Serialize rows with ``\\n`` line endings; write atomically when ``path`` is given."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        atomic_write(path, text.encode("utf-8"))
    return text


def read_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
