"""Matting Laplacian assembly and the augmented sparse solve.

The Laplacian follows the closed-form construction: within every full window
the affinity between pixels i and j is ``(1 + (Ii-mu)' inv(Sigma + eps/n I)
(Ij-mu)) / n`` and the Laplacian accumulates ``delta_ij`` minus that affinity
over all windows containing both pixels. The augmented system adds diagonal
terms for known pixels (weight lambda) and for auto-generated constraints
(weight gamma * confidence).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import pyamg
import scipy.sparse
import scipy.sparse.linalg
from numpy.lib.stride_tricks import sliding_window_view

from .constraints import ConstraintField
from .errors import ConvergenceError, DimensionMismatchError
from .imaging import RgbImage, Trimap

DEFAULT_LAMBDA = 100.0
DEFAULT_WINDOW_RADIUS = 1
DEFAULT_EPSILON_REG = 1e-7

_RESIDUAL_TARGET = 1e-6
# Beyond this size SuperLU's fill-in outgrows commodity memory; switch to
# multigrid-preconditioned CG.
_DIRECT_LIMIT = 65536
_WINDOW_CHUNK = 50000


@dataclass(frozen=True)
class LaplacianParams:
    window_radius: int = DEFAULT_WINDOW_RADIUS
    epsilon_reg: float = DEFAULT_EPSILON_REG

    def __post_init__(self):
        if self.window_radius < 1:
            raise ValueError("window_radius must be >= 1")
        if self.epsilon_reg <= 0:
            raise ValueError("epsilon_reg must be positive")


@dataclass(frozen=True)
class MattingSystem:
    """Sparse symmetric normal equations ``(L + lambda*D + Gamma*C) x = rhs``."""

    matrix: scipy.sparse.csr_matrix
    rhs: np.ndarray
    lam: float
    shape: tuple[int, int]


@dataclass(frozen=True)
class AlphaMatte:
    """Finalized per-pixel opacity; all values in [0, 1]."""

    alpha: np.ndarray

    def __post_init__(self):
        if self.alpha.ndim != 2:
            raise DimensionMismatchError(f"expected (h, w) alpha, got {self.alpha.shape}")
        if self.alpha.size and (self.alpha.min() < 0.0 or self.alpha.max() > 1.0):
            raise ValueError("alpha values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.alpha.shape[0]

    @property
    def width(self) -> int:
        return self.alpha.shape[1]


def build_laplacian(img: RgbImage, params: LaplacianParams | None = None) -> scipy.sparse.csr_matrix:
    """Assemble the sparse matting Laplacian over all full local windows."""
    if params is None:
        params = LaplacianParams()
    h, w = img.height, img.width
    r = params.window_radius
    size = 2 * r + 1
    if h < size or w < size:
        raise DimensionMismatchError(
            f"image {h}x{w} is smaller than the {size}x{size} window"
        )
    n_win = size * size
    n = h * w
    indices = np.arange(n, dtype=np.int32).reshape(h, w)
    win_idx = sliding_window_view(indices, (size, size)).reshape(-1, n_win)
    flat = img.data.reshape(n, 3)
    eye3 = np.eye(3)

    rows, cols, vals = [], [], []
    for start in range(0, win_idx.shape[0], _WINDOW_CHUNK):
        wi = win_idx[start : start + _WINDOW_CHUNK]
        win_colors = flat[wi]  # (chunk, n_win, 3)
        mu = win_colors.mean(axis=1, keepdims=True)
        centered = win_colors - mu
        cov = np.einsum("kij,kil->kjl", centered, centered) / n_win
        inv = np.linalg.inv(cov + (params.epsilon_reg / n_win) * eye3)
        inv = (inv + inv.transpose(0, 2, 1)) / 2.0
        cross = np.einsum("kij,kjl,kml->kim", centered, inv, centered)
        block = np.eye(n_win) - (1.0 + cross) / n_win
        rows.append(np.repeat(wi, n_win))
        cols.append(np.tile(wi, (1, n_win)).ravel())
        vals.append(block.ravel())

    lap = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    # Exact symmetry: window blocks are symmetric only up to rounding.
    return (lap + lap.T) * 0.5


def assemble_system(
    laplacian: scipy.sparse.spmatrix,
    tri: Trimap,
    constraints: ConstraintField | None,
    lam: float = DEFAULT_LAMBDA,
) -> MattingSystem:
    """Add the known-pixel and auto-constraint terms to the Laplacian.

    ``constraints=None`` assembles the plain closed-form system (gamma == 0
    everywhere), which is the cf-baseline mode.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    h, w = tri.height, tri.width
    n = h * w
    if laplacian.shape != (n, n):
        raise DimensionMismatchError(
            f"Laplacian shape {laplacian.shape} does not match trimap {h}x{w}"
        )
    known = tri.is_known.astype(np.float64).ravel()
    beta = tri.beta().ravel()
    if constraints is None:
        weight = np.zeros(n)
        target = np.zeros(n)
    else:
        if (constraints.height, constraints.width) != (h, w):
            raise DimensionMismatchError("constraint field does not match trimap size")
        weight = (constraints.gamma * constraints.confidence).ravel()
        target = constraints.a_init.ravel()
    diag = lam * known + weight
    matrix = (laplacian + scipy.sparse.diags(diag)).tocsr()
    rhs = lam * known * beta + weight * target
    return MattingSystem(matrix=matrix, rhs=rhs, lam=float(lam), shape=(h, w))


def _solve_amg_cg(matrix: scipy.sparse.csr_matrix, rhs: np.ndarray) -> np.ndarray:
    # pyamg's setup draws start vectors from numpy's global RNG; pin it so
    # repeated solves are bit-identical, then restore the caller's state.
    state = np.random.get_state()
    np.random.seed(0x5EED)
    try:
        ml = pyamg.smoothed_aggregation_solver(matrix, max_coarse=500)
    finally:
        np.random.set_state(state)
    x, _ = scipy.sparse.linalg.cg(
        matrix,
        rhs,
        rtol=1e-8,
        atol=0.0,
        maxiter=2000,
        M=ml.aspreconditioner(cycle="V"),
    )
    return x


def solve_raw(system: MattingSystem) -> np.ndarray:
    """Solve the assembled system; returns the unclamped flat alpha vector.

    The solve must reach a relative residual of 1e-6 or ConvergenceError is
    raised with the residual actually achieved.
    """
    matrix = system.matrix
    rhs = system.rhs
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return np.zeros(matrix.shape[0])
    if matrix.shape[0] <= _DIRECT_LIMIT:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.sparse.linalg.MatrixRankWarning)
            x = scipy.sparse.linalg.spsolve(matrix.tocsc(), rhs)
    else:
        x = _solve_amg_cg(matrix, rhs)
    if not np.all(np.isfinite(x)):
        raise ConvergenceError("solver produced non-finite values", residual=float("inf"))
    residual = float(np.linalg.norm(matrix @ x - rhs)) / rhs_norm
    if residual > _RESIDUAL_TARGET:
        raise ConvergenceError(
            f"relative residual {residual:.3e} exceeds {_RESIDUAL_TARGET:.0e}",
            residual=residual,
        )
    return x


def solve(system: MattingSystem) -> AlphaMatte:
    """Solve and clamp into a finalized AlphaMatte."""
    x = solve_raw(system)
    return AlphaMatte(np.clip(x, 0.0, 1.0).reshape(system.shape))
