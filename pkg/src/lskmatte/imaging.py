"""Raster substrate: image/trimap codecs, CIELAB conversion, Sobel gradients.

Images live in memory as row-major float64 arrays with samples in [0, 1];
8-bit quantization happens only at the file boundary.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
import scipy.ndimage
from PIL import Image, UnidentifiedImageError

from .errors import (
    ChannelCountError,
    DecodeError,
    DimensionMismatchError,
    TrimapFormatError,
)


class Label(IntEnum):
    """Per-pixel trimap labels."""

    BACKGROUND = 0
    FOREGROUND = 1
    UNKNOWN = 2


# Linear sRGB -> XYZ (D65 white, 2 degree observer).
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_D65_WHITE = np.array([0.95047, 1.0, 1.08883])

_SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
_SOBEL_Y = _SOBEL_X.T


@dataclass(frozen=True)
class RgbImage:
    """Decoded color raster; ``data`` has shape (height, width, 3) in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise DimensionMismatchError(
                f"expected (h, w, 3) image data, got shape {self.data.shape}"
            )
        if self.data.size and (self.data.min() < 0.0 or self.data.max() > 1.0):
            raise ValueError("RGB samples must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class Trimap:
    """Per-pixel label field; ``labels`` has shape (height, width) of Label values."""

    labels: np.ndarray

    def __post_init__(self):
        if self.labels.ndim != 2:
            raise DimensionMismatchError(
                f"expected (h, w) label data, got shape {self.labels.shape}"
            )
        if self.labels.size and not np.isin(self.labels, (0, 1, 2)).all():
            raise ValueError("trimap labels must be Label values")

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def is_foreground(self) -> np.ndarray:
        return self.labels == Label.FOREGROUND

    @property
    def is_background(self) -> np.ndarray:
        return self.labels == Label.BACKGROUND

    @property
    def is_unknown(self) -> np.ndarray:
        return self.labels == Label.UNKNOWN

    @property
    def is_known(self) -> np.ndarray:
        return self.labels != Label.UNKNOWN

    def beta(self) -> np.ndarray:
        """Known opacity field: 1.0 on foreground, 0.0 elsewhere."""
        return self.is_foreground.astype(np.float64)


@dataclass(frozen=True)
class LabImage:
    """CIELAB raster with every channel rescaled onto [0, 255]."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise DimensionMismatchError(
                f"expected (h, w, 3) Lab data, got shape {self.data.shape}"
            )
        if self.data.size and (self.data.min() < 0.0 or self.data.max() > 255.0):
            raise ValueError("Lab channels must lie in [0, 255] after rescale")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class GradientMaps:
    """Per-channel Sobel responses; ``gx``/``gy`` match the source Lab raster."""

    gx: np.ndarray
    gy: np.ndarray

    def __post_init__(self):
        if self.gx.shape != self.gy.shape or self.gx.ndim != 3:
            raise DimensionMismatchError("gx and gy must share a (h, w, 3) shape")

    @property
    def height(self) -> int:
        return self.gx.shape[0]

    @property
    def width(self) -> int:
        return self.gx.shape[1]


def _open_raster(data: bytes) -> Image.Image:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"could not decode image: {exc}") from exc
    return img


def decode_image(data: bytes) -> RgbImage:
    """Decode an 8-bit color image file into an RgbImage (samples = raw / 255)."""
    img = _open_raster(data)
    if img.mode == "P":
        img = img.convert("RGBA" if "transparency" in img.info else "RGB")
    if img.mode == "RGBA":
        img = img.convert("RGB")
    if img.mode != "RGB":
        raise ChannelCountError(
            f"need a 3-channel image (mode RGB/RGBA), got mode {img.mode!r}"
        )
    raw = np.asarray(img, dtype=np.uint8)
    return RgbImage(raw.astype(np.float64) / 255.0)


def _decode_gray(data: bytes, kind: str) -> np.ndarray:
    """Decode a grayscale raster, collapsing equal-channel color files."""
    img = _open_raster(data)
    if img.mode == "P":
        img = img.convert("RGB")
    if img.mode == "1":
        img = img.convert("L")
    if img.mode == "L":
        return np.asarray(img, dtype=np.uint8)
    if img.mode in ("RGB", "RGBA"):
        arr = np.asarray(img, dtype=np.uint8)[..., :3]
        if not (arr == arr[..., :1]).all():
            raise TrimapFormatError(
                f"multi-channel {kind} with unequal channels cannot be collapsed"
            )
        return arr[..., 0]
    raise TrimapFormatError(f"unsupported {kind} mode {img.mode!r}")


def decode_trimap(data: bytes) -> Trimap:
    """Decode a grayscale trimap: 255 -> foreground, 0 -> background, else unknown."""
    gray = _decode_gray(data, "trimap")
    labels = np.full(gray.shape, Label.UNKNOWN, dtype=np.uint8)
    labels[gray == 255] = Label.FOREGROUND
    labels[gray == 0] = Label.BACKGROUND
    return Trimap(labels)


def decode_matte(data: bytes) -> np.ndarray:
    """Decode a grayscale matte file into a (h, w) alpha field in [0, 1]."""
    return _decode_gray(data, "matte").astype(np.float64) / 255.0


def to_lab(img: RgbImage) -> LabImage:
    """Convert sRGB (D65) to CIELAB, then rescale every channel onto [0, 255].

    L maps linearly from [0, 100]; a and b map linearly from [-128, 127].
    """
    rgb = img.data
    linear = np.where(rgb > 0.04045, ((rgb + 0.055) / 1.055) ** 2.4, rgb / 12.92)
    xyz = (linear @ _RGB_TO_XYZ.T) / _D65_WHITE
    f = np.where(xyz > 0.008856, np.cbrt(xyz), 7.787 * xyz + 16.0 / 116.0)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    lab[..., 0] *= 255.0 / 100.0
    lab[..., 1:] += 128.0
    np.clip(lab, 0.0, 255.0, out=lab)
    return LabImage(lab)


def gradients(lab: LabImage) -> GradientMaps:
    """Per-channel 3x3 Sobel responses in x and y; borders use edge replication."""
    gx = np.empty_like(lab.data)
    gy = np.empty_like(lab.data)
    for c in range(3):
        gx[..., c] = scipy.ndimage.correlate(lab.data[..., c], _SOBEL_X, mode="nearest")
        gy[..., c] = scipy.ndimage.correlate(lab.data[..., c], _SOBEL_Y, mode="nearest")
    return GradientMaps(gx, gy)


def encode_matte(alpha: np.ndarray) -> bytes:
    """Encode an alpha field in [0, 1] as an 8-bit grayscale PNG (round half up)."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim != 2:
        raise DimensionMismatchError(f"expected (h, w) alpha field, got {alpha.shape}")
    if alpha.size and (alpha.min() < 0.0 or alpha.max() > 1.0):
        raise ValueError("alpha values outside [0, 1]; clamp before encoding")
    gray = np.floor(alpha * 255.0 + 0.5).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(gray, mode="L").save(buf, format="PNG")
    return buf.getvalue()
