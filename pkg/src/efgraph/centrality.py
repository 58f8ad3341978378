"""Baseline centralities: degree, PageRank, exact betweenness.

These serve as comparison metrics when evaluating how well Expected Force
predicts epidemic behavior. Betweenness follows Brandes' algorithm with the
unordered-pair convention (each {s, t} counted once, endpoints excluded, no
normalization); PageRank is plain power iteration on the undirected
neighbor-averaging recurrence.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import warnings

import numpy as np

from .graph import Graph

__all__ = [
    "CentralityScores",
    "degree_centrality",
    "pagerank",
    "betweenness",
    "BETWEENNESS_COST_BUDGET",
    "write_scores_csv",
]

# n*m above this emits a cost warning: exact betweenness is O(n*m).
BETWEENNESS_COST_BUDGET = 500_000_000


@dataclass
class CentralityScores:
    metric: str  # one of degree, pagerank, betweenness, ef
    values: np.ndarray
    converged: bool = True


def degree_centrality(g: Graph) -> CentralityScores:
    return CentralityScores(metric="degree", values=g.degrees().astype(np.float64))


def pagerank(g: Graph, damping: float = 0.85, tol: float = 1e-8, max_iter: int = 200) -> CentralityScores:
    """Power iteration on PG(v) = (1-d)/n + d * sum_u PG(u)/deg(u).

    Stops when the max per-node change drops below tol; if max_iter is hit
    first the scores are still returned with converged=False. The graph has
    no dangling nodes (isolated nodes are dropped at construction), so the
    scores sum to 1 up to rounding.
    """
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must be in (0, 1)")
    n = g.n
    if n == 0:
        return CentralityScores(metric="pagerank", values=np.zeros(0))
    deg = g.degrees().astype(np.float64)
    nbrs = g.neighbors.astype(np.int64)
    heads = g.offsets[:-1]
    x = np.full(n, 1.0 / n)
    base = (1.0 - damping) / n
    converged = False
    for _ in range(max_iter):
        shares = x / deg
        new = base + damping * np.add.reduceat(shares[nbrs], heads)
        if float(np.max(np.abs(new - x))) < tol:
            x = new
            converged = True
            break
        x = new
    if not converged:
        warnings.warn(f"pagerank did not converge in {max_iter} iterations", stacklevel=2)
    return CentralityScores(metric="pagerank", values=x, converged=converged)


def betweenness(g: Graph, workers: int = 1, cost_budget: int = BETWEENNESS_COST_BUDGET) -> CentralityScores:
    """Exact betweenness via BFS + dependency accumulation from every source.

    Sources are processed in chunks with private accumulators that merge in
    a fixed chunk order, so parallel runs agree with the sequential one to
    float accumulation error (~1e-9).
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    n = g.n
    if n == 0:
        return CentralityScores(metric="betweenness", values=np.zeros(0))
    if n * g.m > cost_budget:
        warnings.warn(
            f"betweenness on n={n}, m={g.m} exceeds the cost budget ({n * g.m} > {cost_budget}); "
            "this is O(n*m) work",
            stacklevel=2,
        )

    deg = g.degrees()
    offsets = g.offsets
    neighbors = g.neighbors

    def _expand(front: np.ndarray):
        counts = deg[front]
        cum = np.cumsum(counts)
        idx = np.repeat(offsets[front], counts) + (
            np.arange(int(cum[-1]), dtype=np.int64) - np.repeat(cum - counts, counts)
        )
        return neighbors[idx].astype(np.int64), np.repeat(front, counts)

    def source_chunk(sources: np.ndarray) -> np.ndarray:
        acc = np.zeros(n)
        for s in sources.tolist():
            dist = np.full(n, -1, dtype=np.int64)
            dist[s] = 0
            sigma = np.zeros(n)
            sigma[s] = 1.0
            levels = []
            front = np.array([s], dtype=np.int64)
            depth = 0
            while front.size:
                levels.append(front)
                nb, src = _expand(front)
                newly = np.unique(nb[dist[nb] == -1])
                dist[newly] = depth + 1
                down = dist[nb] == depth + 1
                sigma += np.bincount(nb[down], weights=sigma[src[down]], minlength=n)
                front = newly
                depth += 1
            delta = np.zeros(n)
            for front in reversed(levels[1:]):
                nb, src = _expand(front)
                up = dist[nb] == dist[src] - 1
                coeff = sigma[nb[up]] / sigma[src[up]] * (1.0 + delta[src[up]])
                delta += np.bincount(nb[up], weights=coeff, minlength=n)
            delta[s] = 0.0
            acc += delta
        return acc

    chunk = max(1, n // (workers * 4)) if workers > 1 else n
    chunks = [np.arange(s, min(s + chunk, n), dtype=np.int64) for s in range(0, n, chunk)]
    if workers == 1 or len(chunks) == 1:
        partials = [source_chunk(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(source_chunk, chunks))
    total = np.zeros(n)
    for part in partials:
        total += part
    return CentralityScores(metric="betweenness", values=total / 2.0)


def write_scores_csv(g: Graph, scores: CentralityScores, stream) -> None:
    """Write `node,<metric>` rows in original-id space, ids ascending."""
    stream.write(f"node,{scores.metric}\n")
    orig = g.orig_ids
    vals = scores.values
    for v in range(g.n):
        stream.write(f"{int(orig[v])},{vals[v]:.12g}\n")
