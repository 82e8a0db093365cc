"""Known-region expansion: shrink the unknown band before the expensive solve.

An unknown pixel joins the foreground when some foreground pixel is both
spatially close (Euclidean pixel distance below the spatial threshold) and
color-close, where the color budget tightens with spatial distance:
``||color_p - color_q|| <= color_threshold - dist(p, q)``. Background is
handled symmetrically; a pixel qualifying for both classes stays unknown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .imaging import Label, RgbImage, Trimap

DEFAULT_SPATIAL_THRESHOLD = 9.0
DEFAULT_COLOR_THRESHOLD = 9.0


@dataclass(frozen=True)
class ExpansionParams:
    spatial_threshold: float = DEFAULT_SPATIAL_THRESHOLD
    color_threshold: float = DEFAULT_COLOR_THRESHOLD

    def __post_init__(self):
        if self.spatial_threshold <= 0 or self.color_threshold <= 0:
            raise ValueError("expansion thresholds must be positive")


def expand_trimap(img: RgbImage, tri: Trimap, params: ExpansionParams | None = None) -> Trimap:
    """Relabel unknown pixels near color-consistent known pixels, in one pass.

    Decisions are made against the original labels only (no cascading), so a
    single call is a single expansion step. Known pixels never change.
    """
    if params is None:
        params = ExpansionParams()
    if (img.height, img.width) != (tri.height, tri.width):
        raise DimensionMismatchError(
            f"image {img.height}x{img.width} vs trimap {tri.height}x{tri.width}"
        )

    labels = tri.labels
    unknown = tri.is_unknown
    if not unknown.any():
        return Trimap(labels.copy())

    # Pixels farther than the spatial threshold can never qualify, so the
    # candidate search is confined to offsets within ceil(E)-1 in each axis.
    reach = int(math.ceil(params.spatial_threshold)) - 1
    h, w = labels.shape
    ys, xs = np.nonzero(unknown)
    y0 = max(0, ys.min() - reach)
    y1 = min(h, ys.max() + 1 + reach)
    x0 = max(0, xs.min() - reach)
    x1 = min(w, xs.max() + 1 + reach)

    sub_labels = labels[y0:y1, x0:x1]
    sub_color = img.data[y0:y1, x0:x1] * 255.0
    sh, sw = sub_labels.shape
    can_fg = np.zeros((sh, sw), dtype=bool)
    can_bg = np.zeros((sh, sw), dtype=bool)

    for dy in range(-reach, reach + 1):
        for dx in range(-reach, reach + 1):
            if dy == 0 and dx == 0:
                continue
            dist = math.hypot(dx, dy)
            if dist >= params.spatial_threshold:
                continue
            budget = params.color_threshold - dist
            if budget < 0:
                continue
            py = slice(max(0, -dy), sh - max(0, dy))
            px = slice(max(0, -dx), sw - max(0, dx))
            qy = slice(max(0, dy), sh - max(0, -dy))
            qx = slice(max(0, dx), sw - max(0, -dx))
            diff = sub_color[py, px] - sub_color[qy, qx]
            close = np.einsum("ijk,ijk->ij", diff, diff) <= budget * budget
            q_labels = sub_labels[qy, qx]
            can_fg[py, px] |= close & (q_labels == Label.FOREGROUND)
            can_bg[py, px] |= close & (q_labels == Label.BACKGROUND)

    out = labels.copy()
    sub_unknown = unknown[y0:y1, x0:x1]
    out_sub = out[y0:y1, x0:x1]
    out_sub[sub_unknown & can_fg & ~can_bg] = Label.FOREGROUND
    out_sub[sub_unknown & can_bg & ~can_fg] = Label.BACKGROUND
    return Trimap(out)
