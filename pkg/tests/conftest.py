"""Shared synthetic scenes and encoding helpers."""

import io

import numpy as np
from PIL import Image

from lskmatte import Label, RgbImage, Trimap


def png_bytes(array, mode):
    """Encode a uint8 array with PIL directly (independent of the package codec)."""
    buf = io.BytesIO()
    Image.fromarray(array.astype(np.uint8), mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def strip_trimap(h, w, fg_end, bg_start):
    """Foreground columns [0, fg_end), background [bg_start, w), unknown between."""
    labels = np.full((h, w), Label.UNKNOWN, dtype=np.uint8)
    labels[:, :fg_end] = Label.FOREGROUND
    labels[:, bg_start:] = Label.BACKGROUND
    return Trimap(labels)


def random_scene(seed, h=16, w=16, fg_end=5, bg_start=11):
    """Random noise image plus a strip trimap; colors rarely align on segments."""
    rng = np.random.default_rng(seed)
    img = RgbImage(rng.random((h, w, 3)))
    return img, strip_trimap(h, w, fg_end, bg_start)


def two_color_scene(h=50, w=20, fg_end=9, bg_start=12, fg_color=(0.9, 0.1, 0.1),
                    bg_color=(0.1, 0.2, 0.9)):
    """Two constant color regions; boundary samples form two tight clusters."""
    data = np.empty((h, w, 3))
    data[:] = bg_color
    mid = (fg_end + bg_start) // 2
    data[:, :mid] = fg_color
    return RgbImage(data), strip_trimap(h, w, fg_end, bg_start)


def flat_spatial_scene(h=40, w=40, fg_end=13, bg_start=27, gray=0.5):
    """Constant color everywhere: only coordinates can separate the classes."""
    data = np.full((h, w, 3), gray)
    return RgbImage(data), strip_trimap(h, w, fg_end, bg_start)


def ring_hole_scene(size=64, ring_inner=8.0, ring_outer=20.0, fg_inner=10.0,
                    fg_outer=18.0, bg_start=24.0):
    """A foreground ring enclosing a background-colored hole.

    The hole is marked unknown with no background samples adjacent, so plain
    propagation only ever receives foreground information there. Returns
    (image, trimap, ground-truth alpha).
    """
    red = np.array([0.85, 0.10, 0.10])
    blue = np.array([0.10, 0.20, 0.90])
    c = (size - 1) / 2.0
    yy, xx = np.mgrid[0:size, 0:size]
    rr = np.hypot(yy - c, xx - c)

    on_ring = (rr >= ring_inner) & (rr <= ring_outer)
    data = np.where(on_ring[..., None], red, blue)
    truth = on_ring.astype(np.float64)

    labels = np.full((size, size), Label.UNKNOWN, dtype=np.uint8)
    labels[(rr >= fg_inner) & (rr <= fg_outer)] = Label.FOREGROUND
    labels[rr >= bg_start] = Label.BACKGROUND
    return RgbImage(data), Trimap(labels), truth
