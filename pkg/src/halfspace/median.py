"""Tukey medians: locate (approximate) maximizers of the depth.

The Tukey median is a set; these routines return one representative point
plus its depth. ``median_candidates`` maximizes over a deterministic
candidate pool (atoms, pairwise midpoints, centroid, coordinate-wise
median, caller extras); ``median_refine`` improves a start by pattern
search. In one dimension ``median_1d`` is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .depth import BatteryScorer, compute_depth, direction_battery
from .model import WeightedPointSet, as_point
from .optimize import pattern_search_min
from .rng import RngLike, make_rng

MIDPOINT_CAP = 100_000


@dataclass(frozen=True, eq=False)
class MedianResult:
    point: np.ndarray
    achieved_depth: float
    candidate_count: int
    engine: str

    def to_json_dict(self) -> dict:
        return {"point": self.point.tolist(), "achieved_depth": self.achieved_depth,
                "candidate_count": self.candidate_count, "engine": self.engine}


def weighted_median_interval(values: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
    """Endpoints of the weighted median set: points whose closed one-sided
    masses are both >= 1/2."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    w = weights[order]
    cum = np.cumsum(w)
    suffix = np.cumsum(w[::-1])[::-1]
    lo = float(v[int(np.argmax(cum >= 0.5 - 1e-12))])
    hi = float(v[len(v) - 1 - int(np.argmax((suffix >= 0.5 - 1e-12)[::-1]))])
    return lo, hi


def median_1d(p: WeightedPointSet) -> MedianResult:
    """Exact weighted median; the midpoint of the median interval when the
    median set is not a single point."""
    if p.dim != 1:
        raise ValueError("median_1d needs one-dimensional data")
    lo, hi = weighted_median_interval(p.points[:, 0], p.weights)
    point = np.array([lo if lo == hi else 0.5 * (lo + hi)])
    dep = compute_depth(p, point, engine="exact1d")
    return MedianResult(point, dep.value, 1, "exact1d")


def coordinatewise_median(p: WeightedPointSet) -> np.ndarray:
    """Per-coordinate weighted median (interval midpoints), as a point."""
    out = np.empty(p.dim)
    for i in range(p.dim):
        lo, hi = weighted_median_interval(p.points[:, i], p.weights)
        out[i] = lo if lo == hi else 0.5 * (lo + hi)
    return out


def _candidate_pool(p: WeightedPointSet, extra, midpoint_cap: int,
                    rng: np.random.Generator) -> np.ndarray:
    pts = p.points
    n = pts.shape[0]
    pool = [pts, p.mean()[None, :], coordinatewise_median(p)[None, :]]
    if n >= 2:
        if math.comb(n, 2) <= midpoint_cap:
            ii, jj = np.triu_indices(n, k=1)
        else:
            ii = rng.integers(0, n, size=midpoint_cap)
            jj = rng.integers(0, n, size=midpoint_cap)
            keep = ii != jj
            ii, jj = ii[keep], jj[keep]
        pool.append(0.5 * (pts[ii] + pts[jj]))
    for point in extra:
        pool.append(as_point(point)[None, :])
    return np.unique(np.vstack(pool), axis=0)


def _score_pool(p: WeightedPointSet, pool: np.ndarray, engine: str, budget: int,
                rng: np.random.Generator) -> np.ndarray:
    if engine == "sampled":
        dirs = direction_battery(p.points, budget, rng, anchor="difference")
        return BatteryScorer(p, dirs).scores(pool)
    return np.array([compute_depth(p, c, engine=engine).value for c in pool])


def _resolve_engine(p: WeightedPointSet, pool_size: int, engine: str) -> str:
    if engine != "auto":
        return engine
    if p.dim == 1:
        return "exact1d"
    if p.dim == 2 and pool_size * p.size <= 2_000_000:
        return "sweep2d"
    if math.comb(p.size, p.dim - 1) * pool_size <= 20_000:
        return "oracle"
    return "sampled"


def median_candidates(p: WeightedPointSet, engine: str = "auto", *, extra=(),
                      midpoint_cap: int = MIDPOINT_CAP, budget: int = 2048,
                      rng: RngLike = 0) -> MedianResult:
    """Depth argmax over the candidate pool.

    Ties are broken by the smallest distance to the weighted centroid, then
    lexicographically on the centroid-relative coordinates, which keeps the
    selection deterministic and translation-equivariant. The achieved depth
    is a lower bound on the true maximum depth under exact engines; under
    the sampled engine every candidate is scored against one shared seeded
    direction battery.
    """
    gen = make_rng(rng)
    merged = p.consolidate()
    pool = _candidate_pool(merged, extra, midpoint_cap, gen)
    eng = _resolve_engine(merged, len(pool), engine)
    scores = _score_pool(merged, pool, eng, budget, gen)
    top = float(np.max(scores))
    tied = pool[scores >= top - 1e-12]
    center = merged.mean()
    rel = tied - center
    dist = np.linalg.norm(rel, axis=1)
    tied = tied[dist <= dist.min() + 1e-12]
    rel = tied - center
    best = tied[np.lexsort(rel.T[::-1])][0]
    return MedianResult(best, top, len(pool), "candidates")


def median_refine(p: WeightedPointSet, start, engine: str = "auto", *,
                  steps: int = 64, budget: int = 2048, rng: RngLike = 0) -> MedianResult:
    """Pattern-search ascent of the depth from ``start``.

    Probes are axis-aligned and random-direction steps with a geometrically
    shrinking step size (initial step: a quarter of the bounding-box
    diagonal); a move is accepted only when the depth strictly increases,
    so the returned depth never falls below the start's. Deterministic
    given the seed.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    gen = make_rng(rng)
    start = as_point(start)
    merged = p.consolidate()
    probe_evals = 96 + 12 * steps  # pattern-search budget drives the engine choice
    eng = _resolve_engine(merged, probe_evals, engine)
    if eng == "sampled":
        dirs = direction_battery(merged.points, budget, gen, anchor="difference")
        score = BatteryScorer(merged, dirs).score
    else:
        def score(x):
            return compute_depth(merged, x, engine=eng).value

    diameter = float(np.linalg.norm(np.ptp(merged.points, axis=0)))
    if steps == 0:
        return MedianResult(start, score(start), 1, "refined")
    point, neg_depth, evals = pattern_search_min(
        lambda x: -score(x), start, initial_step=diameter / 4.0, rng=gen,
        levels=8, max_moves=steps)
    return MedianResult(point, -neg_depth, evals, "refined")
