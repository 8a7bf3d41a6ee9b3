"""Image datasets: MNIST-style IDX files and a synthetic offline substitute."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ConsistencyError, FormatError
from .learner import Example

__all__ = ["load_idx", "synth_dataset", "write_idx", "write_pgm", "read_pgm"]

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
N_CLASSES = 10


def _read_header(buf: bytes, expected: int, ndims: int, path) -> tuple[int, ...]:
    if len(buf) < 4 + 4 * ndims:
        raise FormatError(f"{path}: truncated header")
    (magic,) = struct.unpack(">I", buf[:4])
    if magic != expected:
        raise FormatError(f"{path}: magic 0x{magic:08x}, expected 0x{expected:08x}")
    return struct.unpack(f">{ndims}I", buf[4:4 + 4 * ndims])


def _box_downsample(images: np.ndarray, factor: int) -> np.ndarray:
    n, h, w = images.shape
    h2, w2 = h // factor, w // factor
    im = images[:, :h2 * factor, :w2 * factor]
    return im.reshape(n, h2, factor, w2, factor).mean(axis=(2, 4))


def _center_crop(images: np.ndarray, size: int) -> np.ndarray:
    _, h, w = images.shape
    if size > h or size > w:
        raise ValueError(f"cannot crop {h}x{w} images to {size}x{size}")
    top, left = (h - size) // 2, (w - size) // 2
    return images[:, top:top + size, left:left + size]


def load_idx(images_path, labels_path, downsample: int = 1, crop: int | None = None) -> list[Example]:
    """Parse a pair of IDX files into examples with pixels scaled to ``[0, 1]``.

    ``downsample`` averages ``k x k`` blocks (2 turns 28x28 into 14x14);
    ``crop`` then keeps the central ``crop x crop`` window (8 for the desk
    64-input network).
    """
    ib = Path(images_path).read_bytes()
    lb = Path(labels_path).read_bytes()
    n_img, rows, cols = _read_header(ib, IMAGE_MAGIC, 3, images_path)
    (n_lab,) = _read_header(lb, LABEL_MAGIC, 1, labels_path)
    if n_img != n_lab:
        raise ConsistencyError(f"{n_img} images but {n_lab} labels")
    pix = np.frombuffer(ib, dtype=np.uint8, offset=16)
    if pix.size != n_img * rows * cols:
        raise FormatError(f"{images_path}: expected {n_img * rows * cols} pixel bytes, found {pix.size}")
    labels = np.frombuffer(lb, dtype=np.uint8, offset=8)
    if labels.size != n_lab:
        raise FormatError(f"{labels_path}: expected {n_lab} label bytes, found {labels.size}")
    images = pix.reshape(n_img, rows, cols).astype(float) / 255.0
    if downsample > 1:
        images = _box_downsample(images, downsample)
    if crop is not None:
        images = _center_crop(images, crop)
    return [Example(im.ravel(), int(lab)) for im, lab in zip(images, labels)]


def write_idx(images_path, labels_path, images: np.ndarray, labels) -> None:
    """Write ``uint8`` images ``(n, rows, cols)`` and labels in IDX layout."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    n, r, c = images.shape
    Path(images_path).write_bytes(struct.pack(">IIII", IMAGE_MAGIC, n, r, c) + images.tobytes())
    Path(labels_path).write_bytes(struct.pack(">II", LABEL_MAGIC, len(labels)) + labels.tobytes())


# ---------------------------------------------------------------------------
# Synthetic geometric patterns
# ---------------------------------------------------------------------------

def _pattern(cls: int, s: int, rng: np.random.Generator) -> np.ndarray:
    im = np.zeros((s, s))
    yy, xx = np.mgrid[:s, :s]
    a = int(rng.integers(0, s // 2))
    w = int(rng.integers(2, max(3, s // 2) + 1))
    if cls == 0:                                   # horizontal bar
        im[a:a + w, :] = 1
    elif cls == 1:                                 # vertical bar
        im[:, a:a + w] = 1
    elif cls == 2:                                 # filled square
        b = int(rng.integers(0, s - w + 1))
        im[a:a + w, b:b + w] = 1
    elif cls == 3:                                 # diagonal band
        im[np.abs(yy - xx) <= w // 2] = 1
    elif cls == 4:                                 # anti-diagonal band
        im[np.abs(yy + xx - (s - 1)) <= w // 2] = 1
    elif cls == 5:                                 # cross
        c = s // 2 - 1 + int(rng.integers(0, 2))
        im[c:c + 2, :] = 1
        im[:, c:c + 2] = 1
    elif cls == 6:                                 # frame
        t = 1 + int(rng.integers(0, 2))
        im[:t, :] = im[-t:, :] = im[:, :t] = im[:, -t:] = 1
    elif cls == 7:                                 # checkerboard
        k = 1 + int(rng.integers(0, 2))
        im[((yy // k) + (xx // k)) % 2 == 0] = 1
    elif cls == 8:                                 # disc
        cy, cx = rng.uniform(s * 0.3, s * 0.7, 2)
        r = rng.uniform(s * 0.2, s * 0.4)
        im[(yy - cy) ** 2 + (xx - cx) ** 2 <= r * r] = 1
    else:                                          # lower triangle
        im[yy >= xx + int(rng.integers(-1, 2))] = 1
    return im


def synth_dataset(n: int, resolution: int, rng: np.random.Generator) -> list[Example]:
    """``n`` seeded ``resolution x resolution`` pattern images, one class per pattern.

    Foreground intensity is drawn from ``[0.6, 1]`` and a little pixel noise is
    added, so classes are separable but images are not exactly binary.
    """
    if n < 1 or resolution < 4:
        raise ValueError("need n >= 1 and resolution >= 4")
    out = []
    for i in range(n):
        cls = i % N_CLASSES
        im = _pattern(cls, resolution, rng) * rng.uniform(0.6, 1.0)
        im = np.clip(im + 0.05 * rng.standard_normal(im.shape), 0.0, 1.0)
        out.append(Example(im.ravel(), cls))
    return out


# ---------------------------------------------------------------------------
# PGM (P2, plain text)
# ---------------------------------------------------------------------------

def write_pgm(path, pixels: np.ndarray, maxval: int = 255) -> None:
    pixels = np.asarray(pixels, dtype=float)
    if pixels.ndim == 1:
        side = int(round(np.sqrt(pixels.size)))
        if side * side != pixels.size:
            raise ValueError(f"{pixels.size} pixels do not form a square image")
        pixels = pixels.reshape(side, side)
    vals = np.rint(np.clip(pixels, 0.0, 1.0) * maxval).astype(int)
    h, w = vals.shape
    body = "\n".join(" ".join(str(v) for v in row) for row in vals)
    Path(path).write_text(f"P2\n{w} {h}\n{maxval}\n{body}\n")


def read_pgm(path) -> np.ndarray:
    lines = [ln.split("#")[0] for ln in Path(path).read_text().splitlines()]
    tokens = " ".join(lines).split()
    if not tokens or tokens[0] != "P2":
        raise FormatError(f"{path}: not a plain PGM (P2) file")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    vals = np.array([int(t) for t in tokens[4:4 + w * h]], dtype=float)
    return (vals / maxval).reshape(h, w)
