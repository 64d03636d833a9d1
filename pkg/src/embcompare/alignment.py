"""One-to-one dimension matching by exact maximum-weight assignment.

The score of a matching ``a`` is the mean of the matched correlations
``kappa[a_d, d]``; the solver finds the permutation maximizing that mean.
The maximization is run as a minimization of ``max_entry - w`` through a
Jonker-Volgenant style shortest-augmenting-path Hungarian core, O(D^3).

Tie handling: among equal-weight optima the lexicographically smallest
assignment is returned, so reports are reproducible across platforms.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO

import numpy as np

from .column_stats import CorrelationMatrix


@dataclass(frozen=True)
class Matching:
    """Optimal one-to-one assignment of left dimensions to right dimensions.

    ``assignment[d]`` is the left dimension matched to right dimension ``d``
    (0-based).  ``matched_correlations`` holds the signed correlation at each
    matched position, in right-dimension order; ``zeta_1to1`` is their mean.

    When the matching was computed on absolute correlations,
    ``abs_objective`` is True and the absolute values and their mean are
    reported alongside the signed ones.
    """

    assignment: np.ndarray
    matched_correlations: np.ndarray
    zeta_1to1: float
    abs_objective: bool = False
    matched_abs_correlations: np.ndarray | None = None
    zeta_abs_1to1: float | None = None

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.intp)
        if sorted(a.tolist()) != list(range(a.shape[0])):
            raise ValueError("assignment is not a permutation")
        if abs(self.zeta_1to1 - np.mean(self.matched_correlations)) > 1e-12:
            raise ValueError("zeta_1to1 is not the mean matched correlation")
        object.__setattr__(self, "assignment", a)

    @property
    def n_dims(self) -> int:
        return self.assignment.shape[0]

    def sorted_matched(self) -> np.ndarray:
        """Matched correlations in descending order (the rank-plot view)."""
        return np.sort(self.matched_correlations)[::-1]

    def to_json_dict(self) -> dict:
        d = {
            "assignment": [int(i) for i in self.assignment],
            "matched_correlations": [float(v) for v in self.matched_correlations],
            "zeta_1to1": self.zeta_1to1,
        }
        if self.abs_objective:
            d["matched_abs_correlations"] = [
                float(v) for v in self.matched_abs_correlations
            ]
            d["zeta_abs_1to1"] = self.zeta_abs_1to1
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    def write_matched_csv(self, dest: str | Path | IO) -> None:
        """Matched correlations sorted descending, one per row."""
        if isinstance(dest, (str, Path)):
            with open(dest, "w", newline="", encoding="utf-8") as fh:
                self.write_matched_csv(fh)
            return
        w = csv.writer(dest)
        w.writerow(["rank", "correlation"])
        for rank, v in enumerate(self.sorted_matched(), start=1):
            w.writerow([rank, repr(float(v))])


def _min_cost_assignment(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Solve the square min-cost assignment problem.

    Returns ``(col_to_row, u, v)`` where ``col_to_row[j]`` is the row
    assigned to column ``j`` and ``u``, ``v`` are feasible dual potentials
    (rows / columns) with zero reduced cost on matched edges.
    """
    n = cost.shape[0]
    u = np.zeros(n, dtype=np.float64)
    v = np.zeros(n + 1, dtype=np.float64)  # index n is the virtual start column
    col_to_row = np.full(n + 1, -1, dtype=np.intp)

    for i in range(n):
        col_to_row[n] = i
        j0 = n
        min_to = np.full(n, np.inf)
        prev_col = np.full(n, n, dtype=np.intp)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = col_to_row[j0]
            reduced = cost[i0, :] - u[i0] - v[:n]
            free = ~used[:n]
            improve = free & (reduced < min_to)
            min_to[improve] = reduced[improve]
            prev_col[improve] = j0
            candidates = np.where(free)[0]
            j1 = candidates[np.argmin(min_to[candidates])]
            delta = min_to[j1]
            tree = np.where(used)[0]
            u[col_to_row[tree]] += delta
            v[tree] -= delta
            min_to[free] -= delta
            j0 = j1
            if col_to_row[j0] < 0:
                break
        # walk the alternating path back to the virtual column
        while j0 != n:
            j1 = prev_col[j0]
            col_to_row[j0] = col_to_row[j1]
            j0 = j1
    return col_to_row[:n].copy(), u, v[:n]


def _kuhn_augment(
    col: int,
    tight_rows: list[np.ndarray],
    col_of_row: np.ndarray,
    row_of_col: np.ndarray,
    fixed_rows: np.ndarray,
    seen: np.ndarray,
) -> bool:
    """Find an alternating path re-matching ``col``; rewires in place."""
    for r in tight_rows[col]:
        if fixed_rows[r] or seen[r]:
            continue
        seen[r] = True
        if col_of_row[r] < 0 or _kuhn_augment(
            col_of_row[r], tight_rows, col_of_row, row_of_col, fixed_rows, seen
        ):
            col_of_row[r] = col
            row_of_col[col] = r
            return True
    return False


def _lexicographically_smallest(
    weights: np.ndarray,
    col_to_row: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
    cost: np.ndarray,
) -> np.ndarray:
    """Among assignments of equal total weight, prefer the lexicographically
    smallest one.

    Any perfect matching restricted to zero-reduced-cost edges is optimal
    (complementary slackness), so we greedily rebuild the matching column by
    column over the tight-edge graph, always trying the smallest row first.
    The tightness test uses a small relative tolerance to absorb float dust;
    if that lets a near-tie slip through, the exact total-weight comparison
    at the end rejects the refined matching.
    """
    n = cost.shape[0]
    scale = max(1.0, float(np.abs(cost).max()))
    reduced = cost - u[:, None] - v[None, :]
    tight = reduced <= 1e-9 * scale
    if not (tight.sum(axis=0) > 1).any():
        return col_to_row

    tight_rows = [np.where(tight[:, j])[0] for j in range(n)]
    row_of_col = col_to_row.copy()
    col_of_row = np.full(n, -1, dtype=np.intp)
    col_of_row[row_of_col] = np.arange(n)
    fixed_rows = np.zeros(n, dtype=bool)

    for d in range(n):
        for r in tight_rows[d]:
            if r >= row_of_col[d]:
                break
            if fixed_rows[r]:
                continue
            displaced = col_of_row[r]
            freed = row_of_col[d]
            # tentatively give row r to column d and re-match the column
            # that loses it (the freed row is the only available one)
            col_of_row[freed] = -1
            col_of_row[r] = d
            row_of_col[d] = r
            seen = np.zeros(n, dtype=bool)
            seen[r] = True
            if _kuhn_augment(
                displaced, tight_rows, col_of_row, row_of_col, fixed_rows, seen
            ):
                break
            # revert
            col_of_row[r] = displaced
            col_of_row[freed] = d
            row_of_col[d] = freed
        fixed_rows[row_of_col[d]] = True

    cols = np.arange(n)
    if (
        weights[row_of_col, cols].sum() == weights[col_to_row, cols].sum()
        and row_of_col.tolist() <= col_to_row.tolist()
    ):
        return row_of_col
    return col_to_row


def max_weight_assignment(weights: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact maximum-weight perfect assignment on a square matrix.

    Returns ``(assignment, total_weight)`` where ``assignment[d]`` is the row
    matched to column ``d`` and the permutation maximizes
    ``sum(weights[assignment[d], d])``.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"weight matrix must be square, got shape {w.shape}")
    if w.shape[0] == 0:
        raise ValueError("weight matrix is empty")
    if not np.isfinite(w).all():
        raise ValueError("weight matrix contains non-finite entries")

    cost = w.max() - w
    col_to_row, u, v = _min_cost_assignment(cost)
    assignment = _lexicographically_smallest(w, col_to_row, u, v, cost)
    total = float(w[assignment, np.arange(w.shape[0])].sum())
    return assignment, total


def one_to_one_score(kappa: CorrelationMatrix, use_abs: bool = False) -> Matching:
    """Best one-to-one dimension matching for a square correlation grid.

    With ``use_abs`` the assignment maximizes ``|kappa|`` (dimensions are
    equivalent up to sign flips); the signed matched values are still
    reported, with the absolute ones alongside.
    """
    values = kappa.values
    if values.shape[0] != values.shape[1]:
        raise ValueError(
            f"correlation matrix is {values.shape[0]}x{values.shape[1]}; "
            "one-to-one matching needs a square grid -- truncate or pad "
            "the embeddings explicitly before matching"
        )
    target = np.abs(values) if use_abs else values
    assignment, _ = max_weight_assignment(target)
    matched = values[assignment, np.arange(values.shape[1])]
    if use_abs:
        matched_abs = np.abs(matched)
        return Matching(
            assignment=assignment,
            matched_correlations=matched,
            zeta_1to1=float(matched.mean()),
            abs_objective=True,
            matched_abs_correlations=matched_abs,
            zeta_abs_1to1=float(matched_abs.mean()),
        )
    return Matching(
        assignment=assignment,
        matched_correlations=matched,
        zeta_1to1=float(matched.mean()),
    )
