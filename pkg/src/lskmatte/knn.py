"""Boundary-sample KNN classifier with cross-validated k selection.

Training examples are the known pixels sitting on the foreground/background
borders (cheap, yet representative). k is chosen by stratified cross-validation
over odd candidates; when color features alone fail to separate the classes,
training escalates to the coordinate-augmented feature space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.ndimage

from .errors import DegenerateSampleSetError, DimensionMismatchError, UnusableTrimapError
from .features import FeatureField
from .imaging import Trimap

FOREGROUND = 1
BACKGROUND = -1

DEFAULT_K_MAX = 15
DEFAULT_CV_FOLDS = 5
DEFAULT_ACCURACY_FLOOR = 0.85

_POLICIES = ("auto", "force9", "force11")


@dataclass(frozen=True)
class Sample:
    """One training example: feature vector, class label, pixel position (x, y)."""

    feature: np.ndarray
    label: int
    position: tuple[int, int]


@dataclass(frozen=True)
class SampleSet:
    """Parallel arrays of boundary samples; labels are +1 (fg) / -1 (bg)."""

    features: np.ndarray   # (n, dim) float64
    labels: np.ndarray     # (n,) int8
    positions: np.ndarray  # (n, 2) int, columns (x, y)

    def __post_init__(self):
        n = len(self.labels)
        if self.features.shape[0] != n or self.positions.shape != (n, 2):
            raise DimensionMismatchError("sample arrays out of sync")
        if not np.isin(self.labels, (FOREGROUND, BACKGROUND)).all():
            raise ValueError("sample labels must be +1 or -1")
        if not (self.labels == FOREGROUND).any() or not (self.labels == BACKGROUND).any():
            raise UnusableTrimapError("sample set must contain both classes")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dimensionality(self) -> int:
        return self.features.shape[1]

    def count(self, label: int) -> int:
        return int((self.labels == label).sum())

    def sample(self, index: int) -> Sample:
        return Sample(
            feature=self.features[index].copy(),
            label=int(self.labels[index]),
            position=(int(self.positions[index, 0]), int(self.positions[index, 1])),
        )


@dataclass(frozen=True)
class TrainedClassifier:
    samples: SampleSet
    k: int
    cv_accuracy: float
    used_coords: bool
    score_table: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        if self.k < 1 or self.k % 2 == 0:
            raise ValueError("k must be a positive odd integer")
        if self.k > min(self.samples.count(FOREGROUND), self.samples.count(BACKGROUND)):
            raise ValueError("k exceeds the per-class sample count")

    @property
    def dimensionality(self) -> int:
        return self.samples.dimensionality


@dataclass(frozen=True)
class Classification:
    """Decision for one feature vector; ties go to background."""

    flag: int
    dist_f: float
    dist_b: float
    nearest_f: Sample
    nearest_b: Sample


@dataclass(frozen=True)
class BatchClassification:
    """Vectorized decisions; ``nearest_*`` index into the classifier's samples."""

    flags: np.ndarray
    dist_f: np.ndarray
    dist_b: np.ndarray
    min_f: np.ndarray
    min_b: np.ndarray
    nearest_f: np.ndarray
    nearest_b: np.ndarray


def collect_boundary_samples(features: FeatureField, tri: Trimap) -> SampleSet:
    """Known pixels with at least one differently labeled 8-neighbor, in scan order."""
    if (features.height, features.width) != (tri.height, tri.width):
        raise DimensionMismatchError(
            f"features {features.height}x{features.width} vs trimap {tri.height}x{tri.width}"
        )
    fg = tri.is_foreground
    bg = tri.is_background
    if not fg.any() or not bg.any():
        raise UnusableTrimapError("trimap must contain both foreground and background")

    # border_value=1 replicates the image edge: missing neighbors never count
    # as a label change.
    box = np.ones((3, 3), dtype=bool)
    fg_border = fg & ~scipy.ndimage.binary_erosion(fg, structure=box, border_value=1)
    bg_border = bg & ~scipy.ndimage.binary_erosion(bg, structure=box, border_value=1)
    ys, xs = np.nonzero(fg_border | bg_border)
    labels = np.where(fg_border[ys, xs], FOREGROUND, BACKGROUND).astype(np.int8)
    feats = np.ascontiguousarray(features.data[ys, xs], dtype=np.float64)
    positions = np.stack([xs, ys], axis=1).astype(np.int64)
    return SampleSet(feats, labels, positions)


def _fold_assignment(labels: np.ndarray, folds: int) -> np.ndarray:
    """Stratified round-robin folds in sample order (deterministic)."""
    assignment = np.empty(len(labels), dtype=np.int64)
    for label in (FOREGROUND, BACKGROUND):
        idx = np.flatnonzero(labels == label)
        assignment[idx] = np.arange(len(idx)) % folds
    return assignment


def _sorted_class_distances(queries: np.ndarray, refs: np.ndarray) -> np.ndarray:
    d2 = (
        np.einsum("ij,ij->i", queries, queries)[:, None]
        + np.einsum("ij,ij->i", refs, refs)[None, :]
        - 2.0 * (queries @ refs.T)
    )
    np.maximum(d2, 0.0, out=d2)
    d2.sort(axis=1)
    return np.sqrt(d2)


def _cv_scores(samples: SampleSet, candidates: list[int], folds: int) -> list[float]:
    """Mean held-out accuracy per candidate k across stratified folds."""
    assignment = _fold_assignment(samples.labels, folds)
    totals = np.zeros(len(candidates))
    for fold in range(folds):
        test = assignment == fold
        train = ~test
        test_feats = samples.features[test]
        test_labels = samples.labels[test]
        fg_train = samples.features[train & (samples.labels == FOREGROUND)]
        bg_train = samples.features[train & (samples.labels == BACKGROUND)]
        df = _sorted_class_distances(test_feats, fg_train)
        db = _sorted_class_distances(test_feats, bg_train)
        for ci, k in enumerate(candidates):
            mean_f = df[:, :k].mean(axis=1)
            mean_b = db[:, :k].mean(axis=1)
            flags = np.where(mean_f < mean_b, FOREGROUND, BACKGROUND)
            totals[ci] += (flags == test_labels).mean()
    return list(totals / folds)


def _train_single(
    features: FeatureField,
    tri: Trimap,
    k_max: int,
    cv_folds: int,
    used_coords: bool,
) -> TrainedClassifier:
    samples = collect_boundary_samples(features, tri)
    n_fg = samples.count(FOREGROUND)
    n_bg = samples.count(BACKGROUND)
    needed = 2 * cv_folds
    if min(n_fg, n_bg) < needed:
        raise DegenerateSampleSetError(
            f"need at least {needed} boundary samples per class for "
            f"{cv_folds}-fold cross-validation, got {n_fg} foreground / {n_bg} background"
        )

    # k must not exceed what any training fold can supply per class.
    assignment = _fold_assignment(samples.labels, cv_folds)
    cap = min(
        int((samples.labels == label)[assignment != fold].sum())
        for label in (FOREGROUND, BACKGROUND)
        for fold in range(cv_folds)
    )
    candidates = [k for k in range(1, k_max + 1, 2) if k <= cap]
    scores = _cv_scores(samples, candidates, cv_folds)
    best = int(np.argmax(scores))  # first max wins: smallest k on ties
    return TrainedClassifier(
        samples=samples,
        k=candidates[best],
        cv_accuracy=float(scores[best]),
        used_coords=used_coords,
        score_table=tuple(zip(candidates, (float(s) for s in scores))),
    )


def train(
    features9: FeatureField,
    features11: FeatureField | None,
    tri: Trimap,
    policy: str = "auto",
    accuracy_floor: float = DEFAULT_ACCURACY_FLOOR,
    k_max: int = DEFAULT_K_MAX,
    cv_folds: int = DEFAULT_CV_FOLDS,
) -> TrainedClassifier:
    """Train at 9D, escalating to 11D when cross-validation accuracy is poor.

    Under policy ``auto`` the coordinate features are only brought in when the
    9D accuracy falls below ``accuracy_floor``; the better-scoring
    dimensionality is kept (ties keep 9D).
    """
    if policy not in _POLICIES:
        raise ValueError(f"policy must be one of {_POLICIES}, got {policy!r}")
    if not 0.0 <= accuracy_floor <= 1.0:
        raise ValueError("accuracy_floor must lie in [0, 1]")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if cv_folds < 2:
        raise ValueError("cv_folds must be >= 2")

    color_clf = None
    if policy != "force11":
        color_clf = _train_single(features9, tri, k_max, cv_folds, used_coords=False)
        if policy == "force9" or color_clf.cv_accuracy >= accuracy_floor:
            return color_clf
    if features11 is None:
        raise ValueError("11D features required for this policy but not provided")
    spatial_clf = _train_single(features11, tri, k_max, cv_folds, used_coords=True)
    if color_clf is not None and spatial_clf.cv_accuracy <= color_clf.cv_accuracy:
        return color_clf
    return spatial_clf


def classify_many(clf: TrainedClassifier, queries: np.ndarray, chunk: int = 2048) -> BatchClassification:
    """Classify a batch of feature vectors against the trained sample set."""
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    if queries.ndim != 2 or queries.shape[1] != clf.dimensionality:
        raise DimensionMismatchError(
            f"queries must have shape (n, {clf.dimensionality}), got {queries.shape}"
        )
    samples = clf.samples
    fg_idx = np.flatnonzero(samples.labels == FOREGROUND)
    bg_idx = np.flatnonzero(samples.labels == BACKGROUND)
    fg = samples.features[fg_idx]
    bg = samples.features[bg_idx]
    fg_sq = np.einsum("ij,ij->i", fg, fg)
    bg_sq = np.einsum("ij,ij->i", bg, bg)
    k = clf.k

    n = queries.shape[0]
    flags = np.empty(n, dtype=np.int8)
    dist_f = np.empty(n)
    dist_b = np.empty(n)
    min_f = np.empty(n)
    min_b = np.empty(n)
    nearest_f = np.empty(n, dtype=np.int64)
    nearest_b = np.empty(n, dtype=np.int64)

    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        block = queries[start:stop]
        q_sq = np.einsum("ij,ij->i", block, block)
        for refs, refs_sq, idx, dist, mins, nearest in (
            (fg, fg_sq, fg_idx, dist_f, min_f, nearest_f),
            (bg, bg_sq, bg_idx, dist_b, min_b, nearest_b),
        ):
            d2 = q_sq[:, None] + refs_sq[None, :] - 2.0 * (block @ refs.T)
            np.maximum(d2, 0.0, out=d2)
            d = np.sqrt(d2)
            arg = d.argmin(axis=1)
            mins[start:stop] = d[np.arange(len(block)), arg]
            nearest[start:stop] = idx[arg]
            if k < d.shape[1]:
                top = np.partition(d, k - 1, axis=1)[:, :k]
                top.sort(axis=1)
            else:
                d.sort(axis=1)
                top = d
            dist[start:stop] = top.mean(axis=1)
        flags[start:stop] = np.where(
            dist_f[start:stop] < dist_b[start:stop], FOREGROUND, BACKGROUND
        )
    return BatchClassification(flags, dist_f, dist_b, min_f, min_b, nearest_f, nearest_b)


def classify(clf: TrainedClassifier, x: np.ndarray) -> Classification:
    """Classify one feature vector by the minimum mean distance rule."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (clf.dimensionality,):
        raise DimensionMismatchError(
            f"expected a {clf.dimensionality}-vector, got shape {x.shape}"
        )
    batch = classify_many(clf, x[None, :])
    return Classification(
        flag=int(batch.flags[0]),
        dist_f=float(batch.dist_f[0]),
        dist_b=float(batch.dist_b[0]),
        nearest_f=clf.samples.sample(int(batch.nearest_f[0])),
        nearest_b=clf.samples.sample(int(batch.nearest_b[0])),
    )
