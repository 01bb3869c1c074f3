"""Temporal aggregation: fitted step blocks, daily duration-curve blocks and typical periods."""

import logging

import numpy as np
from sklearn.cluster import KMeans

from app.core.exceptions import AggregationError
from app.models.aggregate import Block, BlockSeries, TypicalPeriods

logger = logging.getLogger(__name__)

DAYS_PER_MONTH = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)
WEEKS_PER_YEAR = 52
HOURS_PER_YEAR = 8760
MODES = {"days_per_month": (24.0, 2), "weeks_per_year": (168.0, 4)}

_MONTH_OF_DAY = np.repeat(np.arange(12), DAYS_PER_MONTH)


def _segment_costs(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """cost[i, j]: weighted squared error of one level over x[i:j]."""
    n = len(x)
    W = np.concatenate(([0.0], np.cumsum(w)))
    S1 = np.concatenate(([0.0], np.cumsum(w * x)))
    S2 = np.concatenate(([0.0], np.cumsum(w * x * x)))
    cost = np.full((n + 1, n + 1), np.inf)
    for i in range(n):
        wsum = W[i + 1:] - W[i]
        s1 = S1[i + 1:] - S1[i]
        s2 = S2[i + 1:] - S2[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            seg = np.where(wsum > 0.0, s2 - s1 * s1 / wsum, 0.0)
        cost[i, i + 1:] = np.clip(seg, 0.0, None)
    return cost


def _level(x: np.ndarray, w: np.ndarray) -> float:
    total = w.sum()
    return float((w * x).sum() / total) if total > 0.0 else float(x.mean())


def fit_blocks(
    day: np.ndarray,
    k: int,
    weights: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 0.0),
    pin_extremes: bool = False,
) -> BlockSeries:
    """Optimal K-block piecewise-constant fit under the weight w(x) = a + bx + cx^2 + dx^3."""
    if pin_extremes:
        raise AggregationError("pinning of extreme values is not supported")
    x = np.asarray(day, dtype=float)
    n = len(x)
    if k < 1 or k > n:
        raise AggregationError(f"cannot fit {k} blocks to {n} intervals")
    a, b, c, d = weights
    w = a + b * x + c * x ** 2 + d * x ** 3
    if np.any(w < 0.0):
        raise AggregationError("block weights are negative on the data")

    cost = _segment_costs(x, w)
    best = np.full((k + 1, n + 1), np.inf)
    back = np.zeros((k + 1, n + 1), dtype=int)
    best[0, 0] = 0.0
    for blocks in range(1, k + 1):
        for j in range(blocks, n - (k - blocks) + 1):
            candidates = best[blocks - 1, :j] + cost[:j, j]
            i = int(np.argmin(candidates))
            best[blocks, j] = candidates[i]
            back[blocks, j] = i

    edges = [n]
    for blocks in range(k, 0, -1):
        edges.append(back[blocks, edges[-1]])
    edges.reverse()

    out = []
    error = 0.0
    for start, stop in zip(edges[:-1], edges[1:]):
        level = _level(x[start:stop], w[start:stop])
        out.append(Block(start=int(start), length=int(stop - start), level=level))
        error += float((w[start:stop] * (x[start:stop] - level) ** 2).sum())
    return BlockSeries(blocks=tuple(out), span=n, error=error)


def daily_ldc_blocks(
    day: np.ndarray,
    k: int,
    weights: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 0.0),
) -> BlockSeries:
    x = np.asarray(day, dtype=float)
    order = np.argsort(-x, kind="stable")
    fitted = fit_blocks(x[order], k, weights)
    return BlockSeries(blocks=fitted.blocks, span=fitted.span, error=fitted.error, permutation=order)


def _groups(n_periods: int, mode: str) -> list[np.ndarray]:
    period = np.arange(n_periods)
    if mode == "days_per_month":
        keys = (period // 365) * 12 + _MONTH_OF_DAY[period % 365]
    else:
        keys = period // WEEKS_PER_YEAR
    return [np.flatnonzero(keys == key) for key in np.unique(keys)]


def _whole_weeks(x: np.ndarray, length: int, r: float) -> np.ndarray:
    """Drop the trailing partial week of each year (or of the whole trace when it is not whole years)."""
    year = int(round(HOURS_PER_YEAR / r))
    years = len(x) // year if len(x) >= year and len(x) % year == 0 else 1
    span = len(x) // years
    keep = span - span % length
    if keep == 0:
        return x
    logger.warning("Dropping the last %d of every %d intervals: they do not fill a week", span - keep, span)
    return x.reshape(years, span)[:, :keep].ravel()


def sample_typical(
    trace: np.ndarray,
    mode: str,
    r: float = 1.0,
    seed: int = 0,
    per_group: int | None = None,
) -> TypicalPeriods:
    """k-means typical periods per month (days) or per year (weeks); weights are cluster sizes."""
    if mode not in MODES:
        raise AggregationError(f"unknown sampling mode '{mode}'")
    hours, default_k = MODES[mode]
    k = per_group or default_k
    x = np.asarray(trace, dtype=float)
    length = int(round(hours / r))
    if mode == "weeks_per_year" and length >= 1 and len(x) % length:
        x = _whole_weeks(x, length, r)
    if length < 1 or len(x) % length:
        raise AggregationError(f"trace of {len(x)} intervals does not span whole {length}-interval periods")
    profiles = x.reshape(-1, length)

    representatives: list[int] = []
    weights: list[int] = []
    assignment = np.empty(len(profiles), dtype=int)
    for members in _groups(len(profiles), mode):
        if len(members) < k:
            raise AggregationError(f"{len(members)} periods cannot form {k} clusters")
        block = profiles[members]
        k_eff = min(k, len(np.unique(block, axis=0)))
        if k_eff < k:
            logger.warning("Only %d distinct periods in a group; using %d clusters", k_eff, k_eff)
        km = KMeans(n_clusters=k_eff, n_init=10, random_state=seed).fit(block)
        for cluster_id in range(k_eff):
            in_cluster = np.flatnonzero(km.labels_ == cluster_id)
            if in_cluster.size == 0:
                continue
            distances = np.linalg.norm(block[in_cluster] - km.cluster_centers_[cluster_id], axis=1)
            assignment[members[in_cluster]] = len(representatives)
            representatives.append(int(members[in_cluster[np.argmin(distances)]]))
            weights.append(int(in_cluster.size))

    return TypicalPeriods(
        period_length=length,
        representatives=tuple(representatives),
        weights=tuple(weights),
        assignment=assignment,
        profiles=profiles[representatives].copy(),
    )
