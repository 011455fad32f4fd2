"""Tukey depth engines.

The Tukey depth of a point ``mu`` with respect to an atomic distribution is
the infimum over directions ``v`` of the closed-halfspace mass
``sum(w_i for v.(x_i - mu) >= 0)``. Four engines are provided:

* :func:`depth_1d` -- exact, d = 1 (two directions suffice);
* :func:`depth_2d_sweep` -- exact, d = 2, by angular sweep;
* :func:`depth_oracle` -- exact for atomic distributions in any small
  dimension, by enumerating candidate normals anchored at atom subsets and
  resolving atoms on the boundary hyperplane combinatorially (re-scoring
  with rotatable boundary atoms excluded), never by numeric perturbation;
* :func:`depth_sampled` -- a certified upper bound: the minimum over a
  seeded direction battery, which always contains atom-anchored normals.

Atoms coincident with ``mu`` lie on every boundary hyperplane and are always
counted; they can never be rotated off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .model import WeightedPointSet, as_point
from .rng import RngLike, make_rng

ORACLE_SUBSET_GUARD = 10 ** 6
_WITNESS_RETRIES = 60


@dataclass(frozen=True, eq=False)
class DepthResult:
    """Depth value in [0, 1], a direction witnessing (or approaching) the
    infimum, and the engine that produced it."""

    value: float
    witness: np.ndarray
    engine: str

    def to_json_dict(self) -> dict:
        return {"value": self.value, "witness": self.witness.tolist(), "engine": self.engine}


def _closed_mass(offsets: np.ndarray, weights: np.ndarray, v: np.ndarray) -> float:
    # Canonical evaluation shared by every exact engine so that equal index
    # subsets produce bitwise-equal sums.
    return float(weights[offsets @ v >= 0.0].sum())


def depth_1d(p: WeightedPointSet, mu) -> DepthResult:
    """Exact depth on the line: min of the two closed one-sided masses."""
    mu = as_point(mu)
    if p.dim != 1 or mu.shape[0] != 1:
        raise ValueError("depth_1d needs one-dimensional data")
    offsets = p.points - mu
    plus = np.array([1.0])
    minus = np.array([-1.0])
    m_plus = _closed_mass(offsets, p.weights, plus)
    m_minus = _closed_mass(offsets, p.weights, minus)
    if m_plus <= m_minus:
        return DepthResult(m_plus, plus, "exact1d")
    return DepthResult(m_minus, minus, "exact1d")


def depth_2d_sweep(p: WeightedPointSet, mu) -> DepthResult:
    """Exact planar depth by angular sweep.

    The halfspace mass, as the direction angle sweeps the circle, is a step
    function whose jumps occur where an atom sits exactly on the boundary
    line, i.e. at angles perpendicular to lines through ``mu`` and an atom.
    The mass at such a critical angle is never below its neighborhood (the
    boundary atom is included on both closed sides), so the infimum equals
    the minimum over the open sectors between consecutive critical angles,
    each evaluated at its midpoint.
    """
    mu = as_point(mu)
    if p.dim != 2 or mu.shape[0] != 2:
        raise ValueError("depth_2d_sweep needs two-dimensional data")
    offsets = p.points - mu
    nonzero = offsets[np.linalg.norm(offsets, axis=1) > 0]
    if nonzero.shape[0] == 0:
        return DepthResult(1.0, np.array([1.0, 0.0]), "sweep2d")
    theta = np.arctan2(nonzero[:, 1], nonzero[:, 0])
    crit = np.sort(np.concatenate([theta + 0.5 * np.pi, theta - 0.5 * np.pi]) % (2.0 * np.pi))
    keep = np.concatenate([[True], np.diff(crit) > 1e-13])
    crit = crit[keep]
    ends = np.concatenate([crit[1:], [crit[0] + 2.0 * np.pi]])
    mids = 0.5 * (crit + ends)
    dirs = np.column_stack([np.cos(mids), np.sin(mids)])
    masses = (offsets @ dirs.T >= 0.0).T @ p.weights
    best = int(np.argmin(masses))
    v = dirs[best]
    return DepthResult(_closed_mass(offsets, p.weights, v), v, "sweep2d")


# ---------------------------------------------------------------------------
# combinatorial oracle
# ---------------------------------------------------------------------------

def _null_normals(vectors: np.ndarray, d: int) -> list[np.ndarray]:
    """Unit normals orthogonal to the span of ``vectors``.

    Full-rank spans (rank d-1) contribute their unique normal. Degenerate
    spans contribute an orthonormal basis of the orthogonal complement plus
    the normalized projections of the canonical axes onto it.
    """
    if vectors.shape[0] == 0:
        return [np.eye(d)[i] for i in range(d)]
    _, s, vh = np.linalg.svd(vectors, full_matrices=True)
    tol = max(vectors.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    if rank >= d:
        return []
    if rank == d - 1:
        return [vh[d - 1]]
    basis = vh[rank:]
    normals = [basis[i] for i in range(basis.shape[0])]
    for i in range(d):
        proj = basis.T @ basis[:, i]
        norm = np.linalg.norm(proj)
        if norm > 1e-12:
            normals.append(proj / norm)
    return normals


def _orth_basis(v: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the hyperplane orthogonal to unit vector v,
    as a (d, d-1) matrix of column vectors."""
    _, _, vh = np.linalg.svd(v[None, :], full_matrices=True)
    return vh[1:].T


def _candidate_normals(off: np.ndarray, d: int, guard: int) -> list[np.ndarray]:
    n = off.shape[0]
    subset_size = min(d - 1, n)
    if math.comb(n, subset_size) > guard:
        raise ValueError(
            f"combinatorial enumeration needs C({n}, {subset_size}) <= {guard}; "
            "use the sampled engine instead")
    seen: set[tuple] = set()
    out: list[np.ndarray] = []

    def push(v: np.ndarray):
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            return
        v = v / norm
        lead = np.flatnonzero(np.abs(v) > 1e-9)
        if lead.size and v[lead[0]] < 0:
            v = -v
        key = tuple(np.round(v, 12))
        if key not in seen:
            seen.add(key)
            out.append(v)

    for i in range(d):
        push(np.eye(d)[i])
    for subset in combinations(range(n), subset_size):
        rows = off[list(subset)]
        if d == 2 and rows.shape[0] == 1:
            push(np.array([-rows[0, 1], rows[0, 0]]))
            continue
        if d == 3 and rows.shape[0] == 2:
            cross = np.cross(rows[0], rows[1])
            if np.linalg.norm(cross) > 1e-9 * np.linalg.norm(rows[0]) * np.linalg.norm(rows[1]):
                push(cross)
                continue
        for v in _null_normals(rows, d):
            push(v)
    return out


def _min_closed_mass(offsets: np.ndarray, weights: np.ndarray,
                     guard: int = ORACLE_SUBSET_GUARD) -> tuple[float, np.ndarray, bool]:
    """Infimum over nonzero directions u of ``sum(w_i for u.o_i >= 0)``.

    Returns ``(value, witness, decisive)``. A decisive witness has every
    nonzero offset strictly off its boundary, so the closed mass along it
    reproduces ``value`` exactly; a non-decisive witness only approaches the
    infimum. Offsets equal to zero are counted unconditionally.

    Atoms on a candidate boundary hyperplane are handled by recursion: the
    mass that survives every infinitesimal rotation is itself the minimal
    closed mass of the boundary offsets inside the hyperplane, one dimension
    lower.
    """
    d = offsets.shape[1]
    norms = np.linalg.norm(offsets, axis=1)
    zero_mass = float(weights[norms == 0.0].sum())
    off = offsets[norms > 0.0]
    w = weights[norms > 0.0]
    if off.shape[0] == 0:
        return zero_mass, np.eye(d)[0], True
    if d == 1:
        pos = float(w[off[:, 0] > 0].sum())
        neg = float(w[off[:, 0] < 0].sum())
        if pos <= neg:
            return zero_mass + pos, np.array([1.0]), True
        return zero_mass + neg, np.array([-1.0]), True

    scale = float(norms.max())
    btol = 1e-12 * max(1.0, scale)
    best_value = math.inf
    best_witness = np.eye(d)[0]
    best_decisive = False
    for v in _candidate_normals(off, d, guard):
        dots = off @ v
        boundary = np.abs(dots) <= btol
        pos = float(w[dots > btol].sum())
        neg = float(w[dots < -btol].sum())
        if boundary.any():
            basis = _orth_basis(v)
            sub_val, sub_wit, sub_dec = _min_closed_mass(off[boundary] @ basis, w[boundary], guard)
            u = basis @ sub_wit
        else:
            sub_val, u, sub_dec = 0.0, None, True
        for side_mass, sign in ((pos, 1.0), (neg, -1.0)):
            value = zero_mass + side_mass + sub_val
            improves = value < best_value - 1e-15
            ties = abs(value - best_value) <= 1e-15
            if not improves and not (ties and not best_decisive):
                continue
            if u is None:
                witness, decisive = sign * v, True
            else:
                witness, decisive = _compose_witness(sign * v, u, off, w, zero_mass, value,
                                                     btol, decisive_hint=sub_dec)
            if improves or (ties and decisive and not best_decisive):
                best_value = value
                best_witness = witness
                best_decisive = decisive
    return best_value, best_witness, best_decisive


def _compose_witness(v: np.ndarray, u: np.ndarray, off: np.ndarray, w: np.ndarray,
                     zero_mass: float, target: float, btol: float,
                     decisive_hint: bool) -> tuple[np.ndarray, bool]:
    """Tilt v slightly toward u so boundary atoms land decisively on the side
    the combinatorial score assigned them, without flipping any strict atom.
    The tilt is verified against ``target`` (every atom must clear the
    boundary by more than float noise) and halved until it reproduces it."""
    if not decisive_hint:
        return v, False
    dots = off @ v
    u_dots = off @ u
    strict = np.abs(dots) > btol
    margin = np.min(np.abs(dots[strict])) if strict.any() else 1.0
    reach = float(np.max(np.abs(u_dots))) if u_dots.size else 0.0
    delta = 0.5 * margin / reach if reach > 0 else 1.0
    floor = 0.1 * btol
    for _ in range(_WITNESS_RETRIES):
        cand = v + delta * u
        cand = cand / np.linalg.norm(cand)
        new_dots = off @ cand
        mass = zero_mass + float(w[new_dots > 0.0].sum())
        if abs(mass - target) <= 1e-12 and np.min(np.abs(new_dots)) > floor:
            return cand, True
        delta *= 0.5
    return v, False


def depth_oracle(p: WeightedPointSet, mu, guard: int = ORACLE_SUBSET_GUARD) -> DepthResult:
    """Exact depth for atomic distributions by combinatorial enumeration.

    Candidate normals are orthogonal to the span of each (d-1)-subset of
    atom offsets (canonical axes serve as fallback for degenerate spans);
    boundary atoms are re-scored recursively, which realizes every mass
    pattern reachable by infinitesimal rotations of the hyperplane.
    """
    mu = as_point(mu)
    if mu.shape[0] != p.dim:
        raise ValueError("query point dimension mismatch")
    merged = p.consolidate()
    n = int(np.sum(np.linalg.norm(merged.points - mu, axis=1) > 0))
    if math.comb(n, min(p.dim - 1, n)) > guard:
        raise ValueError(
            f"oracle guard exceeded: C({n}, {p.dim - 1}) > {guard}; use depth_sampled")
    offsets = merged.points - mu
    value, witness, decisive = _min_closed_mass(offsets, merged.weights, guard)
    if decisive:
        value = _closed_mass(offsets, merged.weights, witness)
    return DepthResult(value, witness, "oracle")


# ---------------------------------------------------------------------------
# sampled engine
# ---------------------------------------------------------------------------

def direction_battery(points: np.ndarray, budget: int, rng: np.random.Generator,
                      anchor: str = "offset", mu: np.ndarray | None = None) -> np.ndarray:
    """Seeded direction set: canonical axes, atom-anchored hyperplane normals
    (both orientations), then uniform sphere directions up to ``budget``.

    ``anchor='offset'`` uses hyperplanes through ``mu`` and d-1 atoms (depth
    queries); ``anchor='difference'`` uses hyperplanes through d atoms
    (distribution comparisons).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = points.shape
    if d == 1:
        return np.array([[1.0], [-1.0]])
    parts = [np.eye(d), -np.eye(d)]
    if anchor == "offset":
        base = points - as_point(mu)
        subset_size = d - 1
    elif anchor == "difference":
        base = points
        subset_size = d
    else:
        raise ValueError(f"unknown anchor {anchor!r}")
    normals = _anchored_normals(base, subset_size, budget, rng, difference=(anchor == "difference"))
    if normals.size:
        parts.extend([normals, -normals])
    if budget > 0:
        raw = rng.standard_normal((budget, d))
        norms = np.linalg.norm(raw, axis=1)
        raw = raw[norms > 0] / norms[norms > 0][:, None]
        parts.append(raw)
    return np.vstack(parts)


def _anchored_normals(base: np.ndarray, subset_size: int, budget: int,
                      rng: np.random.Generator, difference: bool) -> np.ndarray:
    n, d = base.shape
    if n < subset_size or subset_size < 1:
        return np.empty((0, d))
    total = math.comb(n, subset_size)
    if total <= budget:
        idx = np.array(list(combinations(range(n), subset_size)))
    else:
        idx = rng.integers(0, n, size=(budget, subset_size))
        distinct = np.ones(len(idx), dtype=bool)
        for a in range(subset_size):
            for b in range(a + 1, subset_size):
                distinct &= idx[:, a] != idx[:, b]
        idx = idx[distinct]
    if idx.size == 0:
        return np.empty((0, d))
    vec = base[idx]                                # (m, subset_size, d)
    if difference:
        vec = vec[:, 1:, :] - vec[:, :1, :]
    if d == 2 and vec.shape[1] == 1:
        flat = vec[:, 0, :]
        normals = np.column_stack([-flat[:, 1], flat[:, 0]])
    elif d == 3 and vec.shape[1] == 2:
        normals = np.cross(vec[:, 0, :], vec[:, 1, :])
    else:
        cap = min(len(vec), 4096)
        normals = np.array([ns[0] if (ns := _null_normals(m, d)) else np.zeros(d)
                            for m in vec[:cap]])
    if normals.size == 0:
        return np.empty((0, d))
    norms = np.linalg.norm(normals, axis=1)
    normals = normals[norms > 1e-12]
    return normals / np.linalg.norm(normals, axis=1)[:, None]


def depth_sampled(p: WeightedPointSet, mu, budget: int = 2048,
                  rng: RngLike = 0) -> DepthResult:
    """Certified upper bound on the depth: the minimum closed-halfspace mass
    over a seeded battery of random and atom-anchored directions. Since the
    infimum for atomic distributions is attained on atom-anchored normals,
    the augmentation makes many instances exact."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    mu = as_point(mu)
    if mu.shape[0] != p.dim:
        raise ValueError("query point dimension mismatch")
    gen = make_rng(rng)
    offsets = p.points - mu
    dirs = direction_battery(p.points, budget, gen, anchor="offset", mu=mu)
    best_value = math.inf
    best_v = dirs[0]
    for chunk in np.array_split(dirs, max(1, len(dirs) * p.size // 2_000_000 + 1)):
        masses = (offsets @ chunk.T >= 0.0).T @ p.weights
        i = int(np.argmin(masses))
        if masses[i] < best_value:
            best_value = float(masses[i])
            best_v = chunk[i]
    return DepthResult(_closed_mass(offsets, p.weights, best_v), best_v, "sampled")


class BatteryScorer:
    """Depth upper bounds for many query points under one shared direction
    battery: the minimum over directions of the closed mass at each query.

    Atom projections are sorted once per direction at construction, so a
    single query costs one binary search per direction; this is what makes
    scoring every atom and midpoint of a large sample (and running a local
    search on top) affordable. Retains roughly ``16 * n * len(dirs)`` bytes.
    """

    def __init__(self, p: WeightedPointSet, dirs: np.ndarray):
        self.dirs = dirs
        self._chunks = []
        chunk_size = max(1, 2_000_000 // max(1, p.size))
        for start in range(0, len(dirs), chunk_size):
            chunk = dirs[start:start + chunk_size]
            proj = p.points @ chunk.T                # (n, c)
            order = np.argsort(proj, axis=0, kind="stable")
            sorted_proj = np.take_along_axis(proj, order, axis=0)
            w_sorted = p.weights[order]
            suffix = np.zeros((p.size + 1, chunk.shape[0]))
            suffix[:-1] = np.cumsum(w_sorted[::-1], axis=0)[::-1]
            self._chunks.append((chunk, sorted_proj, suffix))

    def scores(self, candidates: np.ndarray) -> np.ndarray:
        candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
        best = np.full(candidates.shape[0], math.inf)
        for chunk, sorted_proj, suffix in self._chunks:
            cand_proj = candidates @ chunk.T         # (m, c)
            for j in range(chunk.shape[0]):
                pos = np.searchsorted(sorted_proj[:, j], cand_proj[:, j], side="left")
                np.minimum(best, suffix[pos, j], out=best)
        return best

    def score(self, point: np.ndarray) -> float:
        return float(self.scores(point[None, :])[0])


def battery_scores(p: WeightedPointSet, dirs: np.ndarray,
                   candidates: np.ndarray) -> np.ndarray:
    """One-shot convenience wrapper around :class:`BatteryScorer`."""
    return BatteryScorer(p, dirs).scores(candidates)


def compute_depth(p: WeightedPointSet, mu, engine: str = "auto", budget: int = 2048,
                  rng: RngLike = 0) -> DepthResult:
    """Engine dispatcher: exact engines where affordable, sampled otherwise."""
    if engine == "auto":
        if p.dim == 1:
            engine = "exact1d"
        elif p.dim == 2:
            engine = "sweep2d"
        elif math.comb(p.size, p.dim - 1) <= 2_000:
            engine = "oracle"
        else:
            engine = "sampled"
    if engine == "exact1d":
        return depth_1d(p, mu)
    if engine == "sweep2d":
        return depth_2d_sweep(p, mu)
    if engine == "oracle":
        return depth_oracle(p, mu)
    if engine == "sampled":
        return depth_sampled(p, mu, budget=budget, rng=rng)
    raise ValueError(f"unknown depth engine {engine!r}")
