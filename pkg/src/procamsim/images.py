"""Raster image helpers: PPM I/O, optional PNG, sampling and markers.

Images are numpy arrays of shape (height, width, 3). Files are binary PPM
(P6, maxval 255), which needs no third-party code; ``.png`` paths work when
Pillow is installed (the ``png`` extra). Continuous pixel coordinates put
the center of pixel (0, 0) at (0.5, 0.5).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ImageFormatError


def new_image(width: int, height: int, fill=(0, 0, 0)) -> np.ndarray:
    """A (height, width, 3) uint8 canvas filled with ``fill``."""
    if width <= 0 or height <= 0:
        raise ValueError("image dimensions must be positive")
    img = np.empty((height, width, 3), dtype=np.uint8)
    img[:] = np.asarray(fill, dtype=np.uint8)
    return img


def _as_uint8(image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected a (H, W, 3) image, got shape {arr.shape}")
    if arr.dtype == np.uint8:
        return arr
    return np.clip(np.round(arr), 0, 255).astype(np.uint8)


def write_ppm(path, image: np.ndarray) -> None:
    """Write a binary P6 PPM with maxval 255."""
    arr = _as_uint8(image)
    header = f"P6\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + arr.tobytes())


def read_ppm(path) -> np.ndarray:
    """Read a binary P6 PPM (maxval 255) into a (H, W, 3) uint8 array."""
    data = Path(path).read_bytes()

    # Header: magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comments allowed between them.
    tokens = []
    pos = 0
    while len(tokens) < 4:
        if pos >= len(data):
            raise ImageFormatError(f"{path}: truncated PPM header")
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end == -1 else end + 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            tokens.append(data[pos:end])
            pos = end
    if tokens[0] != b"P6":
        raise ImageFormatError(f"{path}: not a binary PPM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise ImageFormatError(f"{path}: bad PPM header") from exc
    if maxval != 255:
        raise ImageFormatError(f"{path}: only maxval 255 is supported, got {maxval}")
    pos += 1  # single whitespace byte after the maxval token
    expected = width * height * 3
    pixels = data[pos : pos + expected]
    if len(pixels) != expected:
        raise ImageFormatError(f"{path}: truncated PPM pixel data")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width, 3).copy()


def write_image(path, image: np.ndarray) -> None:
    """Write PPM always; PNG when Pillow is available."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".ppm":
        write_ppm(path, image)
        return
    if suffix == ".png":
        try:
            from PIL import Image
        except ImportError as exc:
            raise ImageFormatError(
                "PNG output needs Pillow; install the 'png' extra or use .ppm"
            ) from exc
        Image.fromarray(_as_uint8(image), mode="RGB").save(path)
        return
    raise ImageFormatError(f"unsupported image format {suffix!r}; use .ppm or .png")


def read_image(path) -> np.ndarray:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".ppm":
        return read_ppm(path)
    if suffix == ".png":
        try:
            from PIL import Image
        except ImportError as exc:
            raise ImageFormatError(
                "PNG input needs Pillow; install the 'png' extra or use .ppm"
            ) from exc
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    raise ImageFormatError(f"unsupported image format {suffix!r}; use .ppm or .png")


def bilinear_sample(image: np.ndarray, xy: np.ndarray) -> np.ndarray:
    """Bilinear samples at continuous pixel coordinates, black outside.

    ``xy`` is (..., 2) with (0.5, 0.5) at the center of pixel (0, 0).
    Samples beyond the border blend toward black (the image is conceptually
    surrounded by black), and far-outside coordinates return black. Returns
    float64 of shape (..., channels).
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        img = img[..., None]
    h, w = img.shape[:2]
    padded = np.zeros((h + 2, w + 2, img.shape[2]), dtype=np.float64)
    padded[1:-1, 1:-1] = img

    pts = np.asarray(xy, dtype=np.float64)
    shape = pts.shape[:-1]
    pts = pts.reshape(-1, 2)
    # Texel index space (texel i is centered at i); +1 for the padding ring.
    # Clamping to the ring keeps far-outside samples black.
    x = np.clip(pts[:, 0] - 0.5, -1.0, w) + 1.0
    y = np.clip(pts[:, 1] - 0.5, -1.0, h) + 1.0
    x0 = np.minimum(np.floor(x).astype(np.int64), w)
    y0 = np.minimum(np.floor(y).astype(np.int64), h)
    fx = x - x0
    fy = y - y0
    x1 = x0 + 1
    y1 = y0 + 1
    top = padded[y0, x0] * (1 - fx)[:, None] + padded[y0, x1] * fx[:, None]
    bottom = padded[y1, x0] * (1 - fx)[:, None] + padded[y1, x1] * fx[:, None]
    out = top * (1 - fy)[:, None] + bottom * fy[:, None]
    return out.reshape(*shape, img.shape[2])


def draw_marker(image: np.ndarray, xy, color, half_size: int = 4) -> None:
    """Draw a cross centered at a continuous pixel coordinate, in place."""
    h, w = image.shape[:2]
    cx = int(np.floor(xy[0]))
    cy = int(np.floor(xy[1]))
    color = np.asarray(color, dtype=image.dtype)
    xs = np.arange(cx - half_size, cx + half_size + 1)
    xs = xs[(xs >= 0) & (xs < w)]
    if 0 <= cy < h:
        image[cy, xs] = color
    ys = np.arange(cy - half_size, cy + half_size + 1)
    ys = ys[(ys >= 0) & (ys < h)]
    if 0 <= cx < w:
        image[ys, cx] = color
