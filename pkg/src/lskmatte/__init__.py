"""Propagation-based alpha matting with automatically generated constraints.

The closed-form matting energy is augmented with per-pixel initial alphas and
confidences produced adaptively, either by local boundary sampling or by a
KNN classifier over an adaptive CIELAB feature space.
"""

from .constraints import (
    BranchParams,
    ConstraintField,
    Source,
    build_constraints,
    classifier_alpha,
    classifier_confidence,
    project_alpha,
    residual,
)
from .errors import (
    ChannelCountError,
    ConvergenceError,
    DecodeError,
    DegeneratePairError,
    DegenerateSampleSetError,
    DimensionMismatchError,
    MattingError,
    TrimapFormatError,
    UnusableTrimapError,
)
from .features import FeatureField, build_features, feature_distance
from .imaging import (
    GradientMaps,
    Label,
    LabImage,
    RgbImage,
    Trimap,
    decode_image,
    decode_matte,
    decode_trimap,
    encode_matte,
    gradients,
    to_lab,
)
from .knn import (
    Classification,
    Sample,
    SampleSet,
    TrainedClassifier,
    classify,
    classify_many,
    collect_boundary_samples,
    train,
)
from .metrics import EvalReport, compare_methods, evaluate
from .pipeline import MatteResult, PipelineStageError, RunConfig, run_matte
from .preprocess import ExpansionParams, expand_trimap
from .solver import (
    AlphaMatte,
    LaplacianParams,
    MattingSystem,
    assemble_system,
    build_laplacian,
    solve,
    solve_raw,
)

__version__ = "0.1.0"
