"""Data-driven knot selection by generalized cross-validation.

The selector scores cubic-spline knot subsets with GCV, using effective
parameter count 3m + 1 for m interior knots, and walks the subsets of a
uniform candidate grid with alternating elimination and addition sweeps.  All
state dimensions share the knots; their residual sums pool into one score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegreesOfFreedomError, TooFewObservationsError
from .splines import BSplineBasis, KnotSequence, design_matrix
from . import splines

# sample-size brackets for the default candidate count
_COUNT_TABLE = ((20, 15), (30, 15), (50, 20), (100, 30))
_MIN_OBSERVATIONS = 10


@dataclass(frozen=True)
class KnotPolicy:
    """How a pipeline chooses knots.

    candidate_count None means "derive from the sample size".  selection is
    either "elim-add" (GCV-guided subset walk) or "fixed-uniform" (use the full
    uniform grid as-is).
    """

    candidate_count: int | None = None
    order: int = 4
    selection: str = "elim-add"
    max_sweeps: int = 10

    def __post_init__(self):
        if self.candidate_count is not None and self.candidate_count < 1:
            raise ValueError(f"candidate_count must be >= 1, got {self.candidate_count}")
        if self.order < 2:
            raise ValueError(f"order must be >= 2, got {self.order}")
        if self.selection not in ("elim-add", "fixed-uniform"):
            raise ValueError(f"unknown selection rule {self.selection!r}")
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be >= 1, got {self.max_sweeps}")


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of a knot search: chosen subset, its score, and bookkeeping."""

    selected_knots: tuple[float, ...]
    gcv_value: float
    effective_params: int
    candidates: tuple[float, ...]


def default_knot_count(n: int) -> int:
    """Candidate knot count for a sample of size n.

    Calibrated at n in {20, 30} -> 15, n = 50 -> 20, n >= 100 -> 30; sizes in
    between snap to the nearest calibrated size (ties toward the smaller).
    """
    if n < _MIN_OBSERVATIONS:
        raise TooFewObservationsError(f"need at least {_MIN_OBSERVATIONS} observations, got {n}")
    if n >= _COUNT_TABLE[-1][0]:
        return _COUNT_TABLE[-1][1]
    best = min(_COUNT_TABLE, key=lambda item: (abs(item[0] - n), item[0]))
    return best[1]


def uniform_knots(interval: tuple[float, float], count: int) -> np.ndarray:
    """count equally spaced interior knots, endpoints excluded."""
    lo, hi = interval
    return lo + np.arange(1, count + 1) * (hi - lo) / (count + 1)


def effective_params(num_knots: int) -> int:
    """Effective parameter count 3m + 1 charged to a cubic fit with m knots."""
    return 3 * num_knots + 1


def gcv_score(times, y, knot_subset, order: int = 4, interval=None) -> float:
    """GCV score of a knot subset: [(1/n) RSS] / (1 - d/n)^2 summed over dims.

    d = 3m + 1 must stay below n or the denominator is meaningless; that case
    raises DegreesOfFreedomError.
    """
    ts = np.asarray(times, dtype=float)
    ys = np.asarray(y, dtype=float)
    if ys.ndim == 1:
        ys = ys[:, None]
    n = ts.size
    d = effective_params(len(knot_subset))
    if d >= n:
        raise DegreesOfFreedomError(f"effective parameters {d} >= sample size {n}")
    if interval is None:
        interval = (float(ts[0]), float(ts[-1]))
    basis = BSplineBasis(KnotSequence(interval, tuple(knot_subset), order))
    design = design_matrix(basis, ts)
    coef, _, _, _ = np.linalg.lstsq(design, ys, rcond=splines.SV_CUTOFF)
    rss = np.sum((ys - design @ coef) ** 2, axis=0)
    return float(np.sum(rss / n) / (1.0 - d / n) ** 2)


def _subset_score(times, ys, subset, order, interval):
    try:
        return gcv_score(times, ys, subset, order, interval)
    except DegreesOfFreedomError:
        return np.inf


def elim_add(times, y, interval, candidate_count: int, order: int = 4, max_sweeps: int = 10) -> SelectionResult:
    """Greedy subset walk over a uniform candidate grid, guided by GCV.

    Starts from the full grid.  An elimination sweep repeatedly drops the knot
    whose removal lowers GCV the most; an addition sweep puts back the dropped
    knot that lowers it the most.  Sweeps alternate until neither changes the
    subset or max_sweeps is hit.  While the current subset has too many
    effective parameters for the sample (score undefined, treated as +inf),
    elimination is forced so the walk always reaches scoreable territory.
    Ties break toward the smaller knot index, so the walk is deterministic.
    """
    ts = np.asarray(times, dtype=float)
    ys = np.asarray(y, dtype=float)
    if ys.ndim == 1:
        ys = ys[:, None]
    grid = uniform_knots(interval, candidate_count)
    current = list(range(candidate_count))
    current_score = _subset_score(ts, ys, grid[current], order, interval)
    best_subset, best_score = list(current), current_score

    def knots_of(idx):
        return grid[np.asarray(idx, dtype=int)]

    for _ in range(max_sweeps):
        changed = False

        while current:
            drop_pos, drop_score = None, np.inf
            for pos in range(len(current)):
                trial = current[:pos] + current[pos + 1 :]
                s = _subset_score(ts, ys, knots_of(trial), order, interval)
                if s < drop_score:
                    drop_pos, drop_score = pos, s
            forced = not np.isfinite(current_score)
            if drop_pos is None:
                drop_pos = 0  # everything scored +inf; still shrink deterministically
            if forced or drop_score < current_score:
                current = current[:drop_pos] + current[drop_pos + 1 :]
                current_score = drop_score
                changed = True
                if current_score < best_score:
                    best_subset, best_score = list(current), current_score
            else:
                break

        while True:
            pool = [j for j in range(candidate_count) if j not in current]
            add_j, add_score = None, np.inf
            for j in pool:
                trial = sorted(current + [j])
                s = _subset_score(ts, ys, knots_of(trial), order, interval)
                if s < add_score:
                    add_j, add_score = j, s
            if add_j is not None and add_score < current_score:
                current = sorted(current + [add_j])
                current_score = add_score
                changed = True
                if current_score < best_score:
                    best_subset, best_score = list(current), current_score
            else:
                break

        if not changed:
            break

    if not np.isfinite(best_score):
        raise DegreesOfFreedomError(
            f"no scoreable knot subset for n = {ts.size} and {candidate_count} candidates"
        )
    return SelectionResult(
        selected_knots=tuple(float(v) for v in knots_of(best_subset)),
        gcv_value=float(best_score),
        effective_params=effective_params(len(best_subset)),
        candidates=tuple(float(v) for v in grid),
    )


def select_knots(times, y, interval, policy: KnotPolicy) -> SelectionResult:
    """Apply a KnotPolicy: elim-add search or the fixed uniform grid."""
    ts = np.asarray(times, dtype=float)
    count = policy.candidate_count if policy.candidate_count is not None else default_knot_count(ts.size)
    if policy.selection == "fixed-uniform":
        grid = uniform_knots(interval, count)
        score = _subset_score(ts, y, grid, policy.order, interval)
        return SelectionResult(
            selected_knots=tuple(float(v) for v in grid),
            gcv_value=float(score),
            effective_params=effective_params(count),
            candidates=tuple(float(v) for v in grid),
        )
    return elim_add(ts, y, interval, count, policy.order, policy.max_sweeps)
