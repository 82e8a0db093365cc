"""Per-pixel feature vectors over CIELAB color, texture gradients, coordinates.

Component order is fixed: (l, a, b, gx_l, gx_a, gx_b, gy_l, gy_a, gy_b) plus,
for the 11-dimensional variant, (coor_x, coor_y) normalized onto [0, 255] so
spatial components stay commensurate with the color scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .imaging import GradientMaps, LabImage

COLOR_DIM = 9
SPATIAL_DIM = 11


@dataclass(frozen=True)
class FeatureField:
    """One feature vector per pixel; ``data`` has shape (h, w, 9 or 11)."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[2] not in (COLOR_DIM, SPATIAL_DIM):
            raise DimensionMismatchError(
                f"expected (h, w, 9|11) feature data, got shape {self.data.shape}"
            )

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def dimensionality(self) -> int:
        return self.data.shape[2]

    @property
    def with_coords(self) -> bool:
        return self.dimensionality == SPATIAL_DIM

    def vector_at(self, x: int, y: int) -> np.ndarray:
        return self.data[y, x]


def build_features(lab: LabImage, grads: GradientMaps, with_coords: bool = False) -> FeatureField:
    """Stack Lab channels and Sobel responses (plus normalized coordinates)."""
    if (lab.height, lab.width) != (grads.height, grads.width):
        raise DimensionMismatchError(
            f"Lab {lab.height}x{lab.width} vs gradients {grads.height}x{grads.width}"
        )
    parts = [lab.data, grads.gx, grads.gy]
    if with_coords:
        h, w = lab.height, lab.width
        coor = np.zeros((h, w, 2))
        if w > 1:
            coor[..., 0] = (np.arange(w) * 255.0 / (w - 1))[None, :]
        if h > 1:
            coor[..., 1] = (np.arange(h) * 255.0 / (h - 1))[:, None]
        parts.append(coor)
    return FeatureField(np.concatenate(parts, axis=2))


def feature_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two feature vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"feature lengths differ: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.sqrt(np.einsum("i,i->", d, d)))
