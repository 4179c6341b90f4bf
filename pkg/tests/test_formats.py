import warnings

import numpy as np
import pytest

from renalmorph.formats import (
    DatasetManifest, FormatError, decode_bvol, decode_pgm, discover_exams, encode_bvol, encode_pgm,
    load_manifest_volume, read_csv, read_manifest, read_slice_mask, read_volume, write_csv, write_exam,
    write_manifest, write_slice_mask, write_volume,
)
from renalmorph.voxel import BinaryVolume, SliceMask

from conftest import random_volume


def pack_oracle(v):
    """Bit i of the stream at bit i % 8 of byte i // 8, walking x fastest."""
    out = bytearray((v.size + 7) // 8)
    i = 0
    for z in range(v.nz):
        for y in range(v.ny):
            for x in range(v.nx):
                if v[x, y, z]:
                    out[i // 8] |= 1 << (i % 8)
                i += 1
    return bytes(out)


HEADER_211 = b"BVOL1\ndims 2 1 1\nspacing 1.0 1.0 1.0\ndata bitpacked\n"


def test_bvol_single_voxel_fixture():
    v = BinaryVolume.from_points((2, 1, 1), [(0, 0, 0)])
    assert encode_bvol(v) == HEADER_211 + b"\x01"
    assert decode_bvol(HEADER_211 + b"\x01") == v


def test_bvol_nine_voxel_fixture():
    v = BinaryVolume.ones(9, 1, 1)
    data = encode_bvol(v)
    assert data.endswith(b"data bitpacked\n\xff\x01")
    assert decode_bvol(data) == v
    v3 = BinaryVolume.ones(3, 3, 1)
    assert v3.packed() == b"\xff\x01"


def test_bvol_matches_pack_oracle(rng):
    for _ in range(30):
        v = random_volume(rng, max_dim=9)
        assert v.packed() == pack_oracle(v)


def test_bvol_round_trip_with_spacing(tmp_path, rng):
    v = random_volume(rng, max_dim=12)
    v = BinaryVolume(v.voxels, (0.78125, 0.78125, 6.5))
    write_volume(v, tmp_path / "a.bvol")
    back = read_volume(tmp_path / "a.bvol")
    assert back == v and back.spacing_mm == (0.78125, 0.78125, 6.5)


def test_bvol_errors():
    good = HEADER_211 + b"\x01"
    with pytest.raises(FormatError, match="magic"):
        decode_bvol(b"BVOL2" + good[5:])
    with pytest.raises(FormatError, match="dims"):
        decode_bvol(good.replace(b"dims 2 1 1", b"dims 2 x 1"))
    with pytest.raises(FormatError, match="dims"):
        decode_bvol(good.replace(b"dims 2 1 1", b"dims 0 1 1"))
    with pytest.raises(FormatError, match="spacing"):
        decode_bvol(good.replace(b"spacing 1.0 1.0 1.0", b"spacing 1.0 1.0"))
    with pytest.raises(FormatError, match="expected 1"):
        decode_bvol(good + b"\x00")
    with pytest.raises(FormatError, match="expected 1"):
        decode_bvol(HEADER_211)
    with pytest.raises(FormatError, match="truncated"):
        decode_bvol(b"BVOL1\ndims 2 1 1\n")


def test_bvol_pad_bits_warn():
    with pytest.warns(UserWarning, match="pad bits"):
        v = decode_bvol(HEADER_211 + b"\x05")
    assert v == BinaryVolume.from_points((2, 1, 1), [(0, 0, 0)])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        decode_bvol(HEADER_211 + b"\x03")


# -- PGM ---------------------------------------------------------------------


def pgm(width, height, pixels, header_extra=b""):
    return b"P5\n" + header_extra + f"{width} {height}\n255\n".encode() + bytes(pixels)


def test_pgm_threshold():
    m = decode_pgm(pgm(4, 1, [0, 127, 128, 255]))
    assert m.bits.tolist() == [[False, False, True, True]]


def test_pgm_layout_rows_are_y():
    m = decode_pgm(pgm(3, 2, [255, 0, 0, 0, 0, 255]))
    assert (m.width, m.height) == (3, 2)
    assert m.bits[0, 0] and m.bits[1, 2] and m.bits.sum() == 2


def test_pgm_comments_and_maxval():
    m = decode_pgm(b"P5\n# made by hand\n2 1 # trailing\n1\n\x01\x00")
    assert m.bits.tolist() == [[False, False]]


def test_pgm_encode_exact():
    m = SliceMask("e", 0, np.array([[True, False]]))
    assert encode_pgm(m) == b"P5\n2 1\n255\n\xff\x00"


def test_pgm_errors():
    with pytest.raises(FormatError, match="magic"):
        decode_pgm(b"P2\n1 1\n255\n0")
    with pytest.raises(FormatError, match="truncated at byte 14"):
        decode_pgm(pgm(2, 2, [0, 0, 0]))
    with pytest.raises(FormatError, match="8-bit"):
        decode_pgm(b"P5\n1 1\n65535\n\x00\x00")
    with pytest.raises(FormatError, match="header"):
        decode_pgm(b"P5\n1 x\n255\n\x00")
    with pytest.raises(FormatError, match="truncated"):
        decode_pgm(b"P5\n1 1")


def test_pgm_round_trip(tmp_path, rng):
    for i in range(10):
        bits = rng.random((int(rng.integers(1, 30)), int(rng.integers(1, 30)))) < rng.uniform(0.05, 0.95)
        m = SliceMask("x", i, bits)
        write_slice_mask(m, tmp_path / f"{i}.pgm")
        back = read_slice_mask(tmp_path / f"{i}.pgm", "x", i)
        assert (back.bits == bits).all() and back.slice_index == i


# -- manifests, datasets, csv -----------------------------------------------


def test_exam_round_trip(tmp_path, rng):
    gt = BinaryVolume(random_volume(rng, max_dim=10).voxels, (0.5, 0.5, 3.0))
    pred = gt.with_voxels(~gt.voxels)
    exam_dir = write_exam(tmp_path, "exam_001", gt, pred)
    assert load_manifest_volume(exam_dir / "gt.manifest.json") == gt
    assert load_manifest_volume(exam_dir / "pred.manifest.json") == pred
    m = read_manifest(exam_dir / "gt.manifest.json")
    assert m.exam_id == "exam_001" and len(m.slices) == gt.nz
    write_exam(tmp_path, "exam_000", gt, pred)
    (tmp_path / "stray").mkdir()
    assert [p.name for p in discover_exams(tmp_path)] == ["exam_000", "exam_001"]


def test_manifest_errors(tmp_path):
    bad = tmp_path / "m.json"
    bad.write_text("{not json")
    with pytest.raises(FormatError):
        read_manifest(bad)
    write_manifest(DatasetManifest("e", (1.0, 1.0, 1.0), ((0, "missing.pgm"),)), bad)
    with pytest.raises(FormatError, match="does not exist"):
        read_manifest(bad)
    write_slice_mask(SliceMask("e", 0, np.zeros((2, 2), bool)), tmp_path / "a.pgm")
    write_manifest(DatasetManifest("e", (1.0, 1.0, 1.0), ((1, "a.pgm"),)), bad)
    with pytest.raises(FormatError, match="indices"):
        read_manifest(bad)
    with pytest.raises(FileNotFoundError):
        discover_exams(tmp_path / "nope")


def test_manifest_dimension_mismatch(tmp_path):
    write_slice_mask(SliceMask("e", 0, np.zeros((2, 2), bool)), tmp_path / "a.pgm")
    write_slice_mask(SliceMask("e", 1, np.zeros((2, 3), bool)), tmp_path / "b.pgm")
    write_manifest(DatasetManifest("e", (1.0, 1.0, 1.0), ((0, "a.pgm"), (1, "b.pgm"))), tmp_path / "m.json")
    with pytest.raises(ValueError):
        load_manifest_volume(tmp_path / "m.json")


def test_csv_round_trip(tmp_path):
    rows = [["a", "b"], ["1", "x,y"], ["0.1", ""]]
    text = write_csv(rows, tmp_path / "t.csv")
    assert text == 'a,b\n1,"x,y"\n0.1,\n'
    assert (tmp_path / "t.csv").read_bytes() == text.encode()
    assert read_csv(tmp_path / "t.csv") == [{"a": "1", "b": "x,y"}, {"a": "0.1", "b": ""}]


def test_atomic_write_leaves_no_temp(tmp_path):
    write_volume(BinaryVolume.zeros(2, 2, 2), tmp_path / "sub" / "v.bvol")
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["v.bvol"]
