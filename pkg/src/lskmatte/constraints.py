"""Adaptive initial alphas, confidences and weights for unknown pixels.

Each unknown pixel first tries local sampling: project its color onto the
segment between the nearest foreground/background boundary samples. When the
reconstruction residual is small the projection is trusted at full weight;
otherwise the KNN classifier supplies the estimate at reduced weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegeneratePairError, DimensionMismatchError
from .features import FeatureField
from .imaging import RgbImage, Trimap
from .knn import FOREGROUND, TrainedClassifier, classify_many

GAMMA_LOCAL = 1.0
GAMMA_CLASSIFIER = 0.1

DEFAULT_EPSILON = 0.1
DEFAULT_SIGMA_SQ = 2.0
DEFAULT_RHO = 15.0


class Source(IntEnum):
    """Provenance of each pixel's constraint."""

    KNOWN = 0
    LOCAL_SAMPLING = 1
    CLASSIFIER = 2


@dataclass(frozen=True)
class BranchParams:
    epsilon: float = DEFAULT_EPSILON    # residual threshold, [0, 1] RGB scale
    sigma_sq: float = DEFAULT_SIGMA_SQ  # feature-distance scale of the confidence
    rho: float = DEFAULT_RHO            # sigmoid enlargement coefficient

    def __post_init__(self):
        if self.epsilon <= 0 or self.sigma_sq <= 0 or self.rho <= 0:
            raise ValueError("branch parameters must be positive")


@dataclass(frozen=True)
class ConstraintField:
    """Per-pixel initial alpha, confidence, weight, and provenance tag."""

    a_init: np.ndarray      # (h, w) in [0, 1]
    confidence: np.ndarray  # (h, w) in [0, 1]
    gamma: np.ndarray       # (h, w) in {1.0, 0.1, 0.0}
    source: np.ndarray      # (h, w) uint8 Source codes

    def __post_init__(self):
        shape = self.a_init.shape
        for arr in (self.confidence, self.gamma, self.source):
            if arr.shape != shape:
                raise DimensionMismatchError("constraint arrays must share one shape")

    @property
    def height(self) -> int:
        return self.a_init.shape[0]

    @property
    def width(self) -> int:
        return self.a_init.shape[1]


def _project_alpha_block(p, f, b):
    """Vectorized segment projection; returns (alpha, squared denominator)."""
    fb = f - b
    denom = np.einsum("ij,ij->i", fb, fb)
    num = np.einsum("ij,ij->i", p - b, fb)
    alpha = np.zeros_like(denom)
    ok = denom > 0.0
    alpha[ok] = num[ok] / denom[ok]
    np.clip(alpha, 0.0, 1.0, out=alpha)
    return alpha, denom


def _residual_block(p, f, b, alpha):
    recon = alpha[:, None] * f + (1.0 - alpha)[:, None] * b
    diff = p - recon
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def project_alpha(p: np.ndarray, f: np.ndarray, b: np.ndarray) -> float:
    """Opacity of color ``p`` projected onto the segment from ``b`` to ``f``.

    Clamped to [0, 1]. Raises DegeneratePairError when ``f`` equals ``b``;
    callers fall back to the classifier branch.
    """
    p, f, b = (np.asarray(v, dtype=np.float64).reshape(1, 3) for v in (p, f, b))
    alpha, denom = _project_alpha_block(p, f, b)
    if denom[0] == 0.0:
        raise DegeneratePairError("foreground and background colors coincide")
    return float(alpha[0])


def residual(p: np.ndarray, f: np.ndarray, b: np.ndarray, alpha: float) -> float:
    """Reconstruction error ||p - alpha*f - (1-alpha)*b|| over RGB in [0, 1]."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    p, f, b = (np.asarray(v, dtype=np.float64).reshape(1, 3) for v in (p, f, b))
    return float(_residual_block(p, f, b, np.array([alpha]))[0])


def classifier_confidence(dis, sigma_sq: float = DEFAULT_SIGMA_SQ):
    """Trust in a classifier decision: exp(-dis / sigma_sq)."""
    return np.exp(-np.asarray(dis, dtype=np.float64) / sigma_sq)


def classifier_alpha(flag, dis, rho: float = DEFAULT_RHO):
    """Sigmoid mapping of the classifier decision and its feature distance.

    Approaches the hard label as ``dis`` shrinks, 0.5 as it grows; the exact
    dis = 0 case is the analytic limit (a step at the flag).
    """
    scalar = np.ndim(flag) == 0 and np.ndim(dis) == 0
    flag = np.atleast_1d(np.asarray(flag, dtype=np.float64))
    dis = np.atleast_1d(np.asarray(dis, dtype=np.float64))
    flag, dis = np.broadcast_arrays(flag, dis)
    out = np.empty(flag.shape)
    exact = dis == 0.0
    with np.errstate(over="ignore"):
        out[~exact] = 1.0 / (1.0 + np.exp(rho * (-flag[~exact]) / dis[~exact]))
    out[exact] = (1.0 + flag[exact]) / 2.0
    return float(out[0]) if scalar else out


def build_constraints(
    img: RgbImage,
    tri: Trimap,
    clf: TrainedClassifier,
    features: FeatureField,
    params: BranchParams | None = None,
) -> ConstraintField:
    """Compute the constraint field for every pixel of an (expanded) trimap.

    Known pixels carry their trimap opacity at zero weight. Unknown pixels get
    the local-sampling estimate when the nearest boundary pair reconstructs
    their color within epsilon, else the classifier estimate.
    """
    if params is None:
        params = BranchParams()
    shape = (tri.height, tri.width)
    if (img.height, img.width) != shape or (features.height, features.width) != shape:
        raise DimensionMismatchError("image, trimap and features must share dimensions")
    if features.dimensionality != clf.dimensionality:
        raise DimensionMismatchError(
            f"features are {features.dimensionality}D but the classifier expects "
            f"{clf.dimensionality}D"
        )

    a_init = tri.beta()
    confidence = np.zeros(shape)
    gamma = np.zeros(shape)
    source = np.full(shape, Source.KNOWN, dtype=np.uint8)

    uy, ux = np.nonzero(tri.is_unknown)
    if len(uy) == 0:
        return ConstraintField(a_init, confidence, gamma, source)

    samples = clf.samples
    fg_sel = samples.labels == FOREGROUND
    fg_pos = samples.positions[fg_sel]
    bg_pos = samples.positions[~fg_sel]
    points = np.stack([ux, uy], axis=1)
    _, fi = cKDTree(fg_pos).query(points)
    _, bi = cKDTree(bg_pos).query(points)

    p = img.data[uy, ux]
    f = img.data[fg_pos[fi, 1], fg_pos[fi, 0]]
    b = img.data[bg_pos[bi, 1], bg_pos[bi, 0]]
    alpha, denom = _project_alpha_block(p, f, b)
    resid = _residual_block(p, f, b, alpha)
    local = (denom > 0.0) & (resid < params.epsilon)

    a_u = np.empty(len(uy))
    c_u = np.empty(len(uy))
    g_u = np.where(local, GAMMA_LOCAL, GAMMA_CLASSIFIER)
    s_u = np.where(local, Source.LOCAL_SAMPLING, Source.CLASSIFIER).astype(np.uint8)
    a_u[local] = alpha[local]
    c_u[local] = np.exp(-resid[local])

    rest = ~local
    if rest.any():
        batch = classify_many(clf, features.data[uy[rest], ux[rest]])
        dis = np.where(batch.flags == FOREGROUND, batch.min_f, batch.min_b)
        a_u[rest] = classifier_alpha(batch.flags, dis, params.rho)
        c_u[rest] = np.where(dis == 0.0, 1.0, classifier_confidence(dis, params.sigma_sq))

    a_init[uy, ux] = a_u
    confidence[uy, ux] = c_u
    gamma[uy, ux] = g_u
    source[uy, ux] = s_u
    return ConstraintField(a_init, confidence, gamma, source)
