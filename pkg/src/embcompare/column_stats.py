"""Column-wise statistics over embedding matrices.

The central object is the dimension-pair correlation grid: entry ``(i, j)``
is the Pearson correlation between feature column ``i`` of one embedding
and feature column ``j`` of another, over their shared vocabulary.

All statistics use population (1/n) normalization; the factor cancels in
correlations.  Zero-variance columns get correlation 0 and are flagged
rather than producing NaN.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Sequence

import numpy as np
from scipy.stats import gaussian_kde

from .embedding_io import AlignedPair

DEFAULT_BINS = 60
KDE_POINTS = 256

# Cross-products are always evaluated in fixed-width column blocks so the
# result is bit-identical no matter how many workers execute the blocks.
_COLUMN_BLOCK = 32

_RANGE_TOL = 1e-12


@dataclass(frozen=True)
class CorrelationMatrix:
    """Dense grid of Pearson correlations between two sets of feature columns."""

    values: np.ndarray
    left_name: str = "left"
    right_name: str = "right"
    degenerate_left: tuple[int, ...] = ()
    degenerate_right: tuple[int, ...] = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"correlation matrix must be 2-D, got {values.shape}")
        if values.size and (
            values.min() < -1.0 - _RANGE_TOL or values.max() > 1.0 + _RANGE_TOL
        ):
            raise ValueError("correlation values outside [-1, 1]")
        if values.flags.writeable:
            values = values.copy()
            values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class HistogramSummary:
    """Equal-width histogram of a correlation population, plus median and KDE."""

    bin_edges: np.ndarray
    counts: np.ndarray
    median: float
    kde_points: np.ndarray | None = None

    def to_json_dict(self) -> dict:
        d = {
            "bin_edges": [float(x) for x in self.bin_edges],
            "counts": [int(c) for c in self.counts],
            "median": self.median,
        }
        if self.kde_points is not None:
            d["kde"] = [[float(x), float(y)] for x, y in self.kde_points]
        return d

    def write_csv(self, dest: str | Path | IO) -> None:
        """Write rows of (bin_lo, bin_hi, count)."""
        if isinstance(dest, (str, Path)):
            with open(dest, "w", newline="", encoding="utf-8") as fh:
                self.write_csv(fh)
            return
        w = csv.writer(dest)
        w.writerow(["bin_lo", "bin_hi", "count"])
        for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
            w.writerow([repr(float(lo)), repr(float(hi)), int(c)])

    def write_kde_csv(self, dest: str | Path | IO) -> None:
        if self.kde_points is None:
            raise ValueError("histogram was computed without a KDE")
        if isinstance(dest, (str, Path)):
            with open(dest, "w", newline="", encoding="utf-8") as fh:
                self.write_kde_csv(fh)
            return
        w = csv.writer(dest)
        w.writerow(["x", "density"])
        for x, y in self.kde_points:
            w.writerow([repr(float(x)), repr(float(y))])


def column_means(values: np.ndarray) -> np.ndarray:
    return np.asarray(values, dtype=np.float64).mean(axis=0)


def column_stds(values: np.ndarray) -> np.ndarray:
    """Population (1/n) standard deviation of each column."""
    values = np.asarray(values, dtype=np.float64)
    centered = values - values.mean(axis=0)
    return np.sqrt(np.einsum("ij,ij->j", centered, centered) / values.shape[0])


def standardize_columns(values: np.ndarray) -> tuple[np.ndarray, tuple[int, ...]]:
    """Center and scale columns to zero mean, unit population variance.

    Zero-variance columns are set to all zeros and their indices returned.
    """
    values = np.asarray(values, dtype=np.float64)
    centered = values - values.mean(axis=0)
    var = np.einsum("ij,ij->j", centered, centered) / values.shape[0]
    degenerate = var == 0.0
    scale = np.sqrt(np.where(degenerate, 1.0, var))
    centered /= scale
    if degenerate.any():
        centered[:, degenerate] = 0.0
    return centered, tuple(int(i) for i in np.where(degenerate)[0])


def pearson(x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray) -> float:
    """Pearson correlation of two equal-length vectors, clamped to [-1, 1].

    Returns 0.0 when either input has zero variance (a constant column
    carries no information; callers that need the flag use
    :func:`correlation_matrix`).
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least 2 observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = np.sqrt(np.dot(dx, dx) / n)
    sy = np.sqrt(np.dot(dy, dy) / n)
    if sx == 0.0 or sy == 0.0:
        return 0.0
    r = (np.dot(dx, dy) / n) / (sx * sy)
    return float(min(1.0, max(-1.0, r)))


def correlation_matrix(pair: AlignedPair, workers: int | None = None) -> CorrelationMatrix:
    """Pearson correlation between every left column and every right column.

    Entry ``(i, j)`` equals ``pearson(left[:, i], right[:, j])``.  The
    computation is partitioned into fixed-width column blocks, so the output
    is bit-identical for any ``workers`` count.
    """
    if pair.shared_count < 2:
        raise ValueError("need at least 2 shared words to correlate columns")
    z_left, deg_left = standardize_columns(pair.left.values)
    z_right, deg_right = standardize_columns(pair.right.values)
    n = pair.shared_count
    d_left = z_left.shape[1]
    d_right = z_right.shape[1]
    out = np.empty((d_left, d_right), dtype=np.float64)

    blocks = [
        slice(start, min(start + _COLUMN_BLOCK, d_right))
        for start in range(0, d_right, _COLUMN_BLOCK)
    ]

    def fill(sl: slice) -> None:
        out[:, sl] = z_left.T @ z_right[:, sl]

    if workers is None or workers <= 1 or len(blocks) == 1:
        for sl in blocks:
            fill(sl)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, blocks))

    out /= n
    np.clip(out, -1.0, 1.0, out=out)
    return CorrelationMatrix(
        values=out,
        left_name=pair.left.name,
        right_name=pair.right.name,
        degenerate_left=deg_left,
        degenerate_right=deg_right,
    )


def histogram(
    values: Sequence[float] | np.ndarray,
    bins: int = DEFAULT_BINS,
    with_kde: bool = False,
) -> HistogramSummary:
    """Equal-width histogram over [min, max] with median and optional KDE.

    The KDE uses a Gaussian kernel with Silverman bandwidth evaluated at
    :data:`KDE_POINTS` evenly spaced points over the data range; it is
    omitted for degenerate (zero variance) populations.
    """
    vals = np.asarray(values, dtype=np.float64).ravel()
    if vals.size == 0:
        raise ValueError("cannot histogram an empty population")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if not np.isfinite(vals).all():
        raise ValueError("population contains non-finite values")
    lo, hi = float(vals.min()), float(vals.max())
    counts, edges = np.histogram(vals, bins=bins, range=(lo, hi))
    median = float(np.median(vals))

    kde_points = None
    if with_kde and vals.size > 1 and lo < hi:
        xs = np.linspace(lo, hi, KDE_POINTS)
        density = gaussian_kde(vals, bw_method="silverman")(xs)
        kde_points = np.column_stack([xs, density])
        kde_points.flags.writeable = False

    return HistogramSummary(
        bin_edges=edges, counts=counts, median=median, kde_points=kde_points
    )

