"""End-to-end matte extraction shared by the CLI and the test harness."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constraints import BranchParams, ConstraintField, build_constraints
from .errors import MattingError
from .features import FeatureField, build_features
from .imaging import RgbImage, Trimap, gradients, to_lab
from .knn import TrainedClassifier, train
from .preprocess import ExpansionParams, expand_trimap
from .solver import (
    AlphaMatte,
    LaplacianParams,
    MattingSystem,
    assemble_system,
    build_laplacian,
    solve_raw,
)

MODE_AUGMENTED = "augmented"
MODE_CF_BASELINE = "cf-baseline"

_FEATURE_POLICIES = {"auto": "auto", "9d": "force9", "11d": "force11"}


class PipelineStageError(MattingError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunConfig:
    """All pipeline tunables, defaulting to the reference constants."""

    mode: str = MODE_AUGMENTED
    lam: float = 100.0
    epsilon_sim: float = 0.1
    sigma_sq: float = 2.0
    rho: float = 15.0
    pre_spatial: float = 9.0
    pre_color: float = 9.0
    preprocess: bool = True
    features: str = "auto"  # auto | 9d | 11d
    accuracy_floor: float = 0.85
    k_max: int = 15
    cv_folds: int = 5
    window_radius: int = 1
    epsilon_reg: float = 1e-7
    verbose: bool = False

    def validate(self) -> None:
        if self.mode not in (MODE_AUGMENTED, MODE_CF_BASELINE):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.features not in _FEATURE_POLICIES:
            raise ValueError(f"unknown feature policy {self.features!r}")
        # Dataclass constructors below re-validate; checking here gives the
        # CLI a single early failure point.
        ExpansionParams(self.pre_spatial, self.pre_color)
        BranchParams(self.epsilon_sim, self.sigma_sq, self.rho)
        LaplacianParams(self.window_radius, self.epsilon_reg)
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if not 0.0 <= self.accuracy_floor <= 1.0:
            raise ValueError("accuracy-floor must lie in [0, 1]")
        if self.k_max < 1:
            raise ValueError("k-max must be >= 1")
        if self.cv_folds < 2:
            raise ValueError("cv-folds must be >= 2")


@dataclass
class MatteResult:
    matte: AlphaMatte
    raw_alpha: np.ndarray
    system: MattingSystem
    trimap: Trimap  # post-expansion
    classifier: TrainedClassifier | None = None
    constraints: ConstraintField | None = None
    timings: dict = field(default_factory=dict)


def run_matte(
    img: RgbImage,
    tri: Trimap,
    config: RunConfig | None = None,
    log: Callable[[str], None] | None = None,
) -> MatteResult:
    """Run the full pipeline on in-memory rasters and return all artifacts."""
    if config is None:
        config = RunConfig()
    config.validate()
    timings: dict = {}

    def stage(name, fn):
        started = time.perf_counter()
        try:
            result = fn()
        except (MattingError, ValueError) as exc:
            raise PipelineStageError(name, exc) from exc
        timings[name] = time.perf_counter() - started
        if log is not None and config.verbose:
            log(f"{name}: {timings[name]:.2f}s")
        return result

    if config.preprocess:
        params = ExpansionParams(config.pre_spatial, config.pre_color)
        expanded = stage("preprocess", lambda: expand_trimap(img, tri, params))
    else:
        expanded = tri

    classifier = None
    constraints = None
    if config.mode == MODE_AUGMENTED:

        def make_features() -> tuple[FeatureField, FeatureField | None]:
            lab = to_lab(img)
            grads = gradients(lab)
            nine = build_features(lab, grads, with_coords=False)
            eleven = (
                build_features(lab, grads, with_coords=True)
                if config.features != "9d"
                else None
            )
            return nine, eleven

        nine, eleven = stage("features", make_features)
        classifier = stage(
            "train",
            lambda: train(
                nine,
                eleven,
                expanded,
                policy=_FEATURE_POLICIES[config.features],
                accuracy_floor=config.accuracy_floor,
                k_max=config.k_max,
                cv_folds=config.cv_folds,
            ),
        )
        if log is not None and config.verbose:
            log(f"classifier: k={classifier.k} cv_accuracy={classifier.cv_accuracy:.4f} "
                f"coords={classifier.used_coords}")
            for k, score in classifier.score_table:
                log(f"  k={k:<3d} accuracy={score:.4f}")
        chosen = eleven if classifier.used_coords else nine
        branch = BranchParams(config.epsilon_sim, config.sigma_sq, config.rho)
        constraints = stage(
            "constraints",
            lambda: build_constraints(img, expanded, classifier, chosen, branch),
        )

    lap_params = LaplacianParams(config.window_radius, config.epsilon_reg)
    laplacian = stage("laplacian", lambda: build_laplacian(img, lap_params))
    system = stage(
        "assemble", lambda: assemble_system(laplacian, expanded, constraints, config.lam)
    )
    raw = stage("solve", lambda: solve_raw(system))
    matte = AlphaMatte(np.clip(raw, 0.0, 1.0).reshape(system.shape))
    return MatteResult(
        matte=matte,
        raw_alpha=raw,
        system=system,
        trimap=expanded,
        classifier=classifier,
        constraints=constraints,
        timings=timings,
    )
