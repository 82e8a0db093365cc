"""Matte-versus-truth error metrics and method ranking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .solver import AlphaMatte


@dataclass(frozen=True)
class EvalReport:
    sad: float
    mse: float
    pixel_count: int

    @property
    def sad_255(self) -> float:
        """SAD on the 8-bit scale, for comparison with published tables."""
        return self.sad * 255.0

    def record(self) -> str:
        """Single-line machine-readable form."""
        return f"sad={self.sad:.6f} mse={self.mse:.8f} n={self.pixel_count}"


def evaluate(pred: AlphaMatte, truth: AlphaMatte, region: np.ndarray | None = None) -> EvalReport:
    """Sum of absolute differences and mean squared error over all pixels.

    ``region`` optionally restricts both metrics to a boolean pixel mask
    (benchmark parity mode); the default covers the full frame.
    """
    if pred.alpha.shape != truth.alpha.shape:
        raise DimensionMismatchError(
            f"matte shapes differ: {pred.alpha.shape} vs {truth.alpha.shape}"
        )
    diff = pred.alpha - truth.alpha
    if region is not None:
        if region.shape != diff.shape:
            raise DimensionMismatchError("region mask does not match matte shape")
        diff = diff[region]
    n = diff.size
    if n == 0:
        raise ValueError("empty evaluation region")
    sad = float(np.abs(diff).sum())
    mse = float((diff * diff).sum() / n)
    return EvalReport(sad=sad, mse=mse, pixel_count=int(n))


def compare_methods(entries: list[tuple[str, EvalReport]]) -> list[tuple[str, EvalReport]]:
    """Rank (name, report) pairs by SAD, then MSE; stable on full ties."""
    if not entries:
        raise ValueError("no reports to rank")
    return sorted(entries, key=lambda entry: (entry[1].sad, entry[1].mse))


def format_report(report: EvalReport) -> str:
    return (
        f"SAD  {report.sad:.6f}  (x255: {report.sad_255:.2f})\n"
        f"MSE  {report.mse:.8f}\n"
        f"N    {report.pixel_count}"
    )


def format_ranking(entries: list[tuple[str, EvalReport]]) -> str:
    ranked = compare_methods(entries)
    width = max(len(name) for name, _ in ranked)
    lines = [f"{'method':<{width}}  {'sad':>12}  {'mse':>12}"]
    for name, report in ranked:
        lines.append(f"{name:<{width}}  {report.sad:>12.6f}  {report.mse:>12.8f}")
    return "\n".join(lines)
