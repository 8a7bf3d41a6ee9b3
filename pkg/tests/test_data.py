import struct

import numpy as np
import pytest

from bayescap.data import load_idx, read_pgm, synth_dataset, write_idx, write_pgm
from bayescap.errors import ConsistencyError, FormatError
from bayescap.mechanisms import make_rng


def test_idx_example_bytes(tmp_path):
    img, lab = tmp_path / "img", tmp_path / "lab"
    img.write_bytes(bytes.fromhex("00000803") + struct.pack(">III", 1, 2, 2) + bytes([0, 255, 128, 64]))
    lab.write_bytes(bytes.fromhex("00000801") + struct.pack(">I", 1) + bytes([7]))
    (ex,) = load_idx(img, lab)
    assert ex.label == 7
    assert np.allclose(ex.features, [0.0, 1.0, 0.50196, 0.25098], atol=1e-5)
    assert np.array_equal(ex.features, np.array([0, 255, 128, 64]) / 255)


def test_bad_magic(tmp_path):
    img, lab = tmp_path / "img", tmp_path / "lab"
    img.write_bytes(struct.pack(">IIII", 0x802, 1, 2, 2) + bytes(4))
    lab.write_bytes(struct.pack(">II", 0x801, 1) + bytes(1))
    with pytest.raises(FormatError, match="0x00000802"):
        load_idx(img, lab)


def test_count_mismatch(tmp_path):
    img, lab = tmp_path / "img", tmp_path / "lab"
    write_idx(img, lab, np.zeros((10, 2, 2)), np.zeros(10))
    lab.write_bytes(struct.pack(">II", 0x801, 9) + bytes(9))
    with pytest.raises(ConsistencyError):
        load_idx(img, lab)


def test_truncated_pixels(tmp_path):
    img, lab = tmp_path / "img", tmp_path / "lab"
    write_idx(img, lab, np.zeros((2, 3, 3)), [0, 1])
    img.write_bytes(img.read_bytes()[:-1])
    with pytest.raises(FormatError):
        load_idx(img, lab)


def test_downsample_and_crop(tmp_path):
    rng = make_rng(0)
    images = rng.integers(0, 256, (3, 28, 28))
    img, lab = tmp_path / "img", tmp_path / "lab"
    write_idx(img, lab, images, [1, 2, 3])
    out = load_idx(img, lab, downsample=2, crop=8)
    assert [e.label for e in out] == [1, 2, 3]
    assert out[0].features.shape == (64,)
    block = images[0, 6:8, 6:8].mean() / 255            # first cropped pixel of the 14x14 image
    assert out[0].features[0] == pytest.approx(block)
    assert load_idx(img, lab, downsample=4)[0].features.shape == (49,)


def test_synthetic_dataset():
    a = synth_dataset(30, 8, make_rng(3))
    b = synth_dataset(30, 8, make_rng(3))
    assert all(np.array_equal(x.features, y.features) and x.label == y.label for x, y in zip(a, b))
    assert {x.label for x in a} == set(range(10))
    feats = np.array([x.features for x in a])
    assert feats.min() >= 0 and feats.max() <= 1 and feats.shape == (30, 64)
    c = synth_dataset(30, 8, make_rng(4))
    assert not all(np.array_equal(x.features, y.features) for x, y in zip(a, c))


def test_pgm_round_trip(tmp_path):
    x = make_rng(1).random(64)
    write_pgm(tmp_path / "x.pgm", x)
    text = (tmp_path / "x.pgm").read_text().split()
    assert text[:4] == ["P2", "8", "8", "255"]
    assert np.allclose(read_pgm(tmp_path / "x.pgm").ravel(), x, atol=0.5 / 255 + 1e-12)
