"""Minimal dependency-free PGM/PPM reading and binary PGM writing.

Reads plain (P2/P3) and raw (P5/P6) netpbm files with maxval <= 255.
Writes raw PGM (P5, maxval 255) only, which is what ECM and
reconstruction outputs use.
"""

from __future__ import annotations

import numpy as np

from .errors import ParseError


def write_pgm(image: np.ndarray, path) -> None:
    """Write a 2-D uint8 array as a raw (P5) PGM, maxval 255."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("PGM output requires a 2-D grayscale image")
    img = img.astype(np.uint8, copy=False)
    height, width = img.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        f.write(img.tobytes())


def _read_tokens(data: bytes, count: int, pos: int):
    """Read `count` whitespace-separated ASCII tokens, skipping # comments."""
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError("truncated netpbm header")
        tokens.append(data[start:pos])
    return tokens, pos


def read_pnm(path) -> np.ndarray:
    """Read a P2/P3/P5/P6 netpbm image as uint8, shape (h, w) or (h, w, 3)."""
    with open(path, "rb") as f:
        data = f.read()
    magic = data[:2]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise ParseError(f"unsupported netpbm magic {magic!r}")
    channels = 3 if magic in (b"P3", b"P6") else 1
    (w_tok, h_tok, max_tok), pos = _read_tokens(data, 3, 2)
    width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    if maxval <= 0 or maxval > 255:
        raise ParseError(f"unsupported maxval {maxval}")
    n_values = width * height * channels
    if magic in (b"P5", b"P6"):
        pos += 1  # exactly one whitespace byte after maxval
        raster = data[pos : pos + n_values]
        if len(raster) != n_values:
            raise ParseError("truncated raw netpbm raster")
        img = np.frombuffer(raster, dtype=np.uint8)
    else:
        tokens, _ = _read_tokens(data, n_values, pos)
        img = np.array([int(t) for t in tokens], dtype=np.uint8)
    if channels == 3:
        return img.reshape(height, width, 3)
    return img.reshape(height, width)


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """RGB to grayscale via BT.601 luma, rounded to nearest; uint8 passthrough."""
    img = np.asarray(image)
    if img.ndim == 2:
        return img.astype(np.uint8, copy=False)
    luma = 0.299 * img[..., 0] + 0.587 * img[..., 1] + 0.114 * img[..., 2]
    return np.floor(luma + 0.5).astype(np.uint8)
