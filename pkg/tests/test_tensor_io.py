from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from panedge.errors import BadMagic, DimOverflow, TensorFormatError, TruncatedPayload, UnknownSourceId
from panedge.labels import CategoryTaxonomy
from panedge.tensor_io import (
    decode_tensor, encode_tensor, read_panoptic_rgb, read_pgm16, read_tensor, write_pgm16, write_tensor,
)

GOLDEN = Path(__file__).parent / "golden"

U16_2X3_HEADER = bytes.fromhex("50455431 00 02 02000000 03000000")


def test_documented_header():
    a = np.array([[1, 2, 3], [4, 5, 6]], dtype=np.uint16)
    data = encode_tensor(a)
    assert data[:14] == U16_2X3_HEADER
    assert len(data) == 14 + 12
    assert data[14:] == bytes.fromhex("0100 0200 0300 0400 0500 0600")
    assert data == (GOLDEN / "u16_2x3.tensor").read_bytes()


@pytest.mark.parametrize("name", ["u16_2x3", "f32_2x2x2", "u32_3x2", "scene_seed7"])
def test_golden_round_trip(name, tmp_path):
    raw = (GOLDEN / f"{name}.tensor").read_bytes()
    a = read_tensor(GOLDEN / f"{name}.tensor")
    out = tmp_path / "x.tensor"
    write_tensor(out, a)
    assert out.read_bytes() == raw


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([np.uint16, np.uint32, np.float32]).flatmap(
    lambda dt: arrays(dt, st.lists(st.integers(0, 5), min_size=2, max_size=3).map(tuple))))
def test_round_trip_bit_exact(a):
    b = decode_tensor(encode_tensor(a))
    assert b.dtype == a.dtype and b.shape == a.shape
    assert b.tobytes() == a.tobytes()


def test_rejects_bad_files():
    good = encode_tensor(np.zeros((2, 3), dtype=np.uint16))
    with pytest.raises(BadMagic):
        decode_tensor(b"XXXX" + good[4:])
    with pytest.raises(TruncatedPayload):
        decode_tensor(good[:-1])
    with pytest.raises(TruncatedPayload):
        decode_tensor(good[:9])
    with pytest.raises(TensorFormatError):
        decode_tensor(good + b"\0")
    with pytest.raises(TensorFormatError):
        decode_tensor(good[:4] + b"\x07" + good[5:])
    with pytest.raises(TensorFormatError):
        decode_tensor(good[:5] + b"\x04" + good[6:])
    huge = b"PET1\x00\x02" + (0xFFFFFFFF).to_bytes(4, "little") * 2
    with pytest.raises(DimOverflow):
        decode_tensor(huge)
    with pytest.raises(TensorFormatError):
        encode_tensor(np.zeros((2, 2), dtype=np.int64))
    with pytest.raises(TensorFormatError):
        encode_tensor(np.zeros(4, dtype=np.uint16))


def test_pgm_round_trip(tmp_path):
    a = np.array([[0, 13001], [65535, 11000]])
    write_pgm16(tmp_path / "a.pgm", a)
    assert (tmp_path / "a.pgm").read_bytes().startswith(b"P5\n2 2\n65535\n")
    assert np.array_equal(read_pgm16(tmp_path / "a.pgm"), a)
    with pytest.raises(TensorFormatError):
        write_pgm16(tmp_path / "b.pgm", np.array([[70000]]))


def _write_rgb(path, ids):
    rgb = np.stack([ids % 256, (ids // 256) % 256, ids // 65536], axis=-1).astype(np.uint8)
    Image.fromarray(rgb, mode="RGB").save(path)


def test_read_panoptic_rgb(tmp_path):
    tax = CategoryTaxonomy(19, frozenset({1, 13}), frozenset(set(range(2, 20)) - {13}))
    ids = np.array([[10, 10, 300], [70000, 10, 300]])
    _write_rgb(tmp_path / "p.png", ids)
    table = {10: (1, 1), 300: (13, 2), 70000: (7, 0)}
    out = read_panoptic_rgb(tmp_path / "p.png", table, tax)
    assert out.tolist() == [[1001, 1001, 13002], [7000, 1001, 13002]]
    with pytest.raises(UnknownSourceId):
        read_panoptic_rgb(tmp_path / "p.png", {10: (1, 1)}, tax)


def test_rgb_round_trip_through_table(tmp_path, cityscapes):
    from panedge.synth import SynthParams, generate_scene

    seg = generate_scene(SynthParams(seed=11))
    labels = np.unique(seg)
    src = {int(l): 1 + 977 * k for k, l in enumerate(labels)}
    ids = np.vectorize(src.get)(seg)
    _write_rgb(tmp_path / "s.png", ids)
    table = {v: divmod(k, 1000) for k, v in src.items()}
    assert np.array_equal(read_panoptic_rgb(tmp_path / "s.png", table, cityscapes), seg)
