"""Canonical correlation analysis between two embedding spaces.

Whitening is done per side via symmetric eigendecomposition of the
(optionally ridge-regularized) auto-covariance; the canonical correlations
are then the singular values of the whitened cross-covariance, which makes
the descending order intrinsic.  Covariances use population (1/n)
normalization; the factor cancels in the correlations.
"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import IO

import numpy as np

from .embedding_io import AlignedPair, EmbeddingMatrix, write_glove_text

# Auto ridge: this factor times the mean eigenvalue of each side's
# auto-covariance.  |V| >> D keeps covariances well-posed, but near-duplicate
# dimensions can still leave them ill-conditioned.  The factor must stay
# tiny: a ridge r shifts a perfect canonical correlation down by about
# r / (2 * lambda_min), so anything much larger than 1e-12 visibly damps
# correlations when one side has been mixed by an ill-conditioned matrix.
RIDGE_FACTOR = 1e-12

_EIG_DROP = 1e-12
_UNIT_OVERSHOOT = 1e-6


class NumericalError(RuntimeError):
    """A linear-algebra step failed or produced out-of-range results."""


@dataclass(frozen=True)
class CcaResult:
    """Canonical directions and correlations for one fitted pair.

    ``correlations`` is descending with every entry in [0, 1];
    ``zeta_cca`` is its mean.  ``left_directions`` / ``right_directions``
    have one column per kept canonical pair (``k`` columns).
    """

    left_directions: np.ndarray
    right_directions: np.ndarray
    correlations: np.ndarray
    zeta_cca: float
    regularization_left: float
    regularization_right: float

    def __post_init__(self):
        corr = np.asarray(self.correlations, dtype=np.float64)
        if corr.ndim != 1 or corr.size == 0:
            raise ValueError("correlations must be a non-empty vector")
        if (np.diff(corr) > 0).any():
            raise ValueError("correlations must be sorted descending")
        if corr.min() < 0.0 or corr.max() > 1.0 + 1e-9:
            raise ValueError("correlations outside [0, 1]")
        if abs(self.zeta_cca - corr.mean()) > 1e-12:
            raise ValueError("zeta_cca is not the mean canonical correlation")
        for name in ("left_directions", "right_directions", "correlations"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.flags.writeable:
                arr = arr.copy()
                arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def k(self) -> int:
        return self.correlations.shape[0]

    @property
    def regularization(self) -> float:
        return max(self.regularization_left, self.regularization_right)

    def to_json_dict(self) -> dict:
        return {
            "correlations": [float(v) for v in self.correlations],
            "zeta_cca": self.zeta_cca,
            "regularization": self.regularization,
            "regularization_left": self.regularization_left,
            "regularization_right": self.regularization_right,
            "k": self.k,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    def write_correlations_csv(self, dest: str | Path | IO) -> None:
        """Canonical correlations in descending order, one per row."""
        if isinstance(dest, (str, Path)):
            with open(dest, "w", newline="", encoding="utf-8") as fh:
                self.write_correlations_csv(fh)
            return
        w = csv.writer(dest)
        w.writerow(["rank", "correlation"])
        for rank, v in enumerate(self.correlations, start=1):
            w.writerow([rank, repr(float(v))])


def _whitener(
    cov: np.ndarray, ridge: float, side: str
) -> tuple[np.ndarray, int]:
    """Inverse square root of ``cov + ridge*I`` on its non-degenerate span.

    Returns ``(W, dropped)`` where ``W`` maps the original coordinates to a
    whitened basis (columns) and ``dropped`` counts discarded directions.
    """
    eigvals, eigvecs = np.linalg.eigh(cov + ridge * np.eye(cov.shape[0]))
    top = eigvals[-1]
    if top <= 0.0:
        raise NumericalError(f"{side} auto-covariance is not positive")
    keep = eigvals > _EIG_DROP * top
    if ridge == 0.0 and not keep.all():
        raise NumericalError(
            f"{side} auto-covariance is numerically singular at "
            "regularization 0; pass a positive ridge"
        )
    dropped = int((~keep).sum())
    if dropped:
        warnings.warn(
            f"dropping {dropped} near-null canonical direction(s) on the "
            f"{side} side",
            stacklevel=3,
        )
    return eigvecs[:, keep] / np.sqrt(eigvals[keep]), dropped


def cca_fit(pair: AlignedPair, regularization: float | None = None) -> CcaResult:
    """Fit CCA on an aligned pair of embeddings.

    ``regularization`` is an absolute ridge added to both auto-covariances;
    ``None`` (the default) applies ``RIDGE_FACTOR`` times each side's mean
    eigenvalue.  Eigenvalues that stay below ``1e-12`` of the largest after
    the ridge are treated as zero and their directions dropped (with a
    warning), reducing ``k``.
    """
    x = pair.left.values
    y = pair.right.values
    n = pair.shared_count
    if n < 2:
        raise ValueError("need at least 2 shared words to fit CCA")
    if n <= max(x.shape[1], y.shape[1]):
        warnings.warn(
            f"only {n} shared words for {x.shape[1]}x{y.shape[1]} dimensions; "
            "canonical correlations will be unreliable",
            stacklevel=2,
        )
    if regularization is not None and regularization < 0:
        raise ValueError("regularization must be >= 0")

    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    cov_xx = (xc.T @ xc) / n
    cov_yy = (yc.T @ yc) / n
    cov_xy = (xc.T @ yc) / n

    if regularization is None:
        ridge_left = RIDGE_FACTOR * float(np.trace(cov_xx)) / cov_xx.shape[0]
        ridge_right = RIDGE_FACTOR * float(np.trace(cov_yy)) / cov_yy.shape[0]
    else:
        ridge_left = ridge_right = float(regularization)

    w_left, _ = _whitener(cov_xx, ridge_left, pair.left.name)
    w_right, _ = _whitener(cov_yy, ridge_right, pair.right.name)

    core = w_left.T @ cov_xy @ w_right
    try:
        u, s, vt = np.linalg.svd(core, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD of whitened cross-covariance failed: {exc}") from exc
    if s.size and s[0] > 1.0 + _UNIT_OVERSHOOT:
        raise NumericalError(
            f"leading canonical correlation {s[0]!r} exceeds 1; "
            "whitening is broken"
        )
    s = np.minimum(s, 1.0)

    left_dirs = w_left @ u
    right_dirs = w_right @ vt.T
    # deterministic sign: anchor each pair on the left direction's
    # largest-magnitude coefficient, flipping both sides together so the
    # achieved correlation keeps its (non-negative) value
    for i in range(s.size):
        col = left_dirs[:, i]
        if col[np.argmax(np.abs(col))] < 0:
            left_dirs[:, i] = -col
            right_dirs[:, i] = -right_dirs[:, i]

    return CcaResult(
        left_directions=left_dirs,
        right_directions=right_dirs,
        correlations=s,
        zeta_cca=float(s.mean()),
        regularization_left=ridge_left,
        regularization_right=ridge_right,
    )


def write_directions(
    result: CcaResult, left_dest: str | Path | IO, right_dest: str | Path | IO
) -> None:
    """Write both direction matrices in glove_text layout.

    One row per input dimension (labeled ``dim000001`` onward), one column
    per kept canonical pair.
    """
    for directions, dest in (
        (result.left_directions, left_dest),
        (result.right_directions, right_dest),
    ):
        labels = tuple(f"dim{i + 1:06d}" for i in range(directions.shape[0]))
        write_glove_text(
            EmbeddingMatrix(vocab=labels, values=directions, name="directions"), dest
        )


def zeta_cca(result: CcaResult) -> float:
    """Mean of all canonical correlations."""
    return float(result.correlations.mean())


def project(result: CcaResult, pair: AlignedPair) -> tuple[np.ndarray, np.ndarray]:
    """Project an aligned pair onto the canonical directions.

    Returns the canonical variates ``(U, V)``; column ``i`` of each side
    correlates at ``result.correlations[i]`` when projecting the fitted
    pair (up to the ridge perturbation).
    """
    x = pair.left.values
    y = pair.right.values
    if x.shape[1] != result.left_directions.shape[0]:
        raise ValueError(
            f"left embedding has {x.shape[1]} dimensions, fit expects "
            f"{result.left_directions.shape[0]}"
        )
    if y.shape[1] != result.right_directions.shape[0]:
        raise ValueError(
            f"right embedding has {y.shape[1]} dimensions, fit expects "
            f"{result.right_directions.shape[0]}"
        )
    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    return xc @ result.left_directions, yc @ result.right_directions
