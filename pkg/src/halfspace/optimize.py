"""Derivative-free pattern search shared by the median refiner and the
projection optimizer: axis-aligned and random probes, strict-improvement
acceptance, geometric step shrinking. Deterministic given the generator."""

from __future__ import annotations

import numpy as np


def pattern_search_min(f, x0: np.ndarray, *, initial_step: float,
                       rng: np.random.Generator, levels: int = 8,
                       shrink: float = 0.5, max_moves: int = 100,
                       box: np.ndarray | None = None):
    """Minimize ``f`` from ``x0``.

    Per iteration the probe set is the 2d axis steps plus 2d random unit
    steps (4d probes); a probe is accepted only on strict improvement, and
    the step halves once no probe improves. ``box`` (d, 2) clips probes.

    Returns ``(x, f(x), evaluations)``.
    """

    def clip(x):
        if box is None:
            return x
        return np.clip(x, box[:, 0], box[:, 1])

    x = clip(np.asarray(x0, dtype=float).copy())
    fx = f(x)
    evals = 1
    d = x.shape[0]
    step = float(initial_step) if initial_step > 0 else 1.0
    moves = 0
    for _ in range(levels):
        while moves < max_moves:
            probes = []
            for i in range(d):
                e = np.zeros(d)
                e[i] = step
                probes.append(x + e)
                probes.append(x - e)
            raw = rng.standard_normal((2 * d, d))
            norms = np.linalg.norm(raw, axis=1)
            norms[norms == 0.0] = 1.0
            probes.extend(x + step * raw / norms[:, None])
            best_fp, best_xp = fx, None
            for xp in probes:
                xp = clip(xp)
                fp = f(xp)
                evals += 1
                if fp < best_fp:
                    best_fp, best_xp = fp, xp
            if best_xp is None:
                break
            x, fx = best_xp, best_fp
            moves += 1
        step *= shrink
    return x, fx, evals
