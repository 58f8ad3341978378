"""Expected Force centrality over 2-hop transmission clusters.

A transmission cluster of a node is a tree with exactly two edges rooted at
that node; its degree is the number of edges leaving the three-node set.
The Expected Force of a node is the entropy of the degree distribution over
all of its clusters, where star-shaped clusters (both edges incident to the
root) count twice for their root, once per transmission order.

Two interchangeable algorithms are provided:

* cluster_centric: every middle-node triplet (i, v, j) with i < j adjacent
  to v is enumerated exactly once, and its degree is credited to the
  histograms of all three members in one pass (weight 2 for the middle).
  Work is streamed in node chunks and batch-vectorized; clusters are never
  materialized as a global set.
* vertex_centric: the original per-node formulation. Each node
  independently walks its own star pairs and 2-hop chains, rebuilding every
  shared cluster once per member. Kept as the reference baseline.

Both produce identical integer histograms, and the entropy pass is shared,
so their outputs are bitwise equal.
"""
from __future__ import annotations

from bisect import bisect_left
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math

import numpy as np

from .graph import Graph

__all__ = [
    "EFResult",
    "FLAG_OK",
    "FLAG_NO_CLUSTERS",
    "FLAG_ZERO_DEGREE_CLUSTERS",
    "cluster_degree",
    "entropy_from_histogram",
    "ef_cluster_centric",
    "ef_vertex_centric",
    "ef",
    "write_ef_csv",
]

FLAG_OK = 0
FLAG_NO_CLUSTERS = 1  # node participates in no cluster (e.g. isolated edge)
FLAG_ZERO_DEGREE_CLUSTERS = 2  # clusters exist but all have degree 0

_PAIR_BUDGET = 1 << 20  # max neighbor pairs handled per vectorized batch


@dataclass
class EFResult:
    """Per-node Expected Force scores plus diagnostics.

    Attributes:
        ef: float64 scores, >= 0
        cluster_total: int64 histogram mass per node
            (2*C(deg(v),2) + sum of (deg(i)-1) over neighbors i)
        flags: uint8 per node, one of the FLAG_* constants
        clusters_processed: triplets enumerated by the run; for
            cluster_centric this is the number of distinct clusters, for
            vertex_centric the total number of per-node cluster visits
    """

    ef: np.ndarray
    cluster_total: np.ndarray
    flags: np.ndarray
    clusters_processed: int


def cluster_degree(g: Graph, i: int, v: int, j: int) -> int:
    """Out-degree of the cluster with middle v and wings i, j.

    Counts edges from {i, v, j} to the rest of the graph: the degree sum
    minus the four tree-edge endpoints, minus two more if i-j closes a
    triangle.
    """
    if i == j:
        raise ValueError("cluster wings must be distinct")
    if not (g.has_edge(v, i) and g.has_edge(v, j)):
        raise ValueError(f"({i}, {v}, {j}) is not a middle-node triplet")
    d = g.degree(v) + g.degree(i) + g.degree(j) - 4
    if g.has_edge(i, j):
        d -= 2
    return d


def entropy_from_histogram(h) -> float:
    """Entropy of the normalized cluster-degree distribution.

    h maps cluster degree -> cluster count. With T the total degree mass,
    each cluster of degree d contributes weight d/T; degree-0 clusters and
    the empty histogram carry no mass (0 * log 0 := 0, T = 0 => 0).
    Natural logarithm.
    """
    items = sorted(h.items())
    total = 0
    for d, c in items:
        if d < 0 or c < 0:
            raise ValueError("histogram keys and counts must be non-negative")
        total += d * c
    if total == 0:
        return 0.0
    w = 0.0
    for d, c in items:
        if d > 0:
            w += c * d * math.log(d)
    return math.log(total) - w / total


def ef(g: Graph, mode: str = "cluster_centric", workers: int = 1, chunk_size: int = 4096) -> EFResult:
    """Dispatch to one of the two Expected Force algorithms."""
    if mode == "cluster_centric":
        return ef_cluster_centric(g, workers=workers, chunk_size=chunk_size)
    if mode == "vertex_centric":
        return ef_vertex_centric(g, workers=workers)
    raise ValueError(f"unknown mode {mode!r}; expected cluster_centric or vertex_centric")


def write_ef_csv(g: Graph, result: EFResult, stream) -> None:
    """Write `node,ef,cluster_total` rows, original ids ascending, 9 significant digits."""
    stream.write("node,ef,cluster_total\n")
    orig = g.orig_ids
    efv = result.ef
    tot = result.cluster_total
    for v in range(g.n):
        stream.write(f"{int(orig[v])},{efv[v]:.9g},{int(tot[v])}\n")


# ----------------------------------------------------------------------
# cluster-centric algorithm
# ----------------------------------------------------------------------


def ef_cluster_centric(g: Graph, workers: int = 1, chunk_size: int = 4096) -> EFResult:
    """Expected Force via single-visit cluster enumeration.

    Nodes are split into chunks claimed by workers; within a chunk, every
    neighbor pair of every middle node is generated in batches, cluster
    degrees are computed vectorized, and the four histogram increments per
    cluster are accumulated as integer (node, degree) counts. Worker
    results merge by exact integer addition, so the output is bitwise
    identical for any workers/chunk_size combination.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    if g.n == 0:
        return _empty_result()

    deg = g.degrees()
    key_span = _key_span(deg)
    edge_codes = _und_edge_codes(g)
    chunks = [(s, min(s + chunk_size, g.n)) for s in range(0, g.n, chunk_size)]

    def work(bounds):
        return _chunk_histograms(g, deg, edge_codes, key_span, bounds[0], bounds[1])

    if workers == 1 or len(chunks) == 1:
        parts = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, chunks))

    pairs = sum(p[2] for p in parts)
    keys = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0, np.int64)
    counts = np.concatenate([p[1] for p in parts]) if parts else np.zeros(0, np.int64)
    keys, counts = _merge_histograms(keys, counts)
    efv, mass, flags = _scores_from_histograms(g.n, key_span, keys, counts)
    return EFResult(ef=efv, cluster_total=mass, flags=flags, clusters_processed=pairs)


def _key_span(deg: np.ndarray) -> int:
    # cluster degree is < 3 * max_degree, so node*span + degree is injective
    top = int(deg.max()) if deg.size else 0
    return 3 * max(1, top) + 1


def _und_edge_codes(g: Graph) -> np.ndarray:
    """Sorted int64 codes u*n+v (u < v), one per undirected edge."""
    src = np.repeat(np.arange(g.n, dtype=np.int64), g.degrees())
    dst = g.neighbors.astype(np.int64)
    keep = src < dst
    return src[keep] * np.int64(g.n) + dst[keep]


def _edge_mask(edge_codes: np.ndarray, n: int, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    if edge_codes.size == 0:
        return np.zeros(i.size, dtype=np.int64)
    code = i * np.int64(n) + j
    pos = np.searchsorted(edge_codes, code)
    np.minimum(pos, edge_codes.size - 1, out=pos)
    return (edge_codes[pos] == code).astype(np.int64)


_triu_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _triu(L: int) -> tuple[np.ndarray, np.ndarray]:
    got = _triu_cache.get(L)
    if got is None:
        got = np.triu_indices(L, 1)
        if len(_triu_cache) < 512:
            _triu_cache[L] = got
    return got


def _cluster_keys(deg, edge_codes, n, key_span, i, v, j, dv):
    """Histogram-increment keys for clusters (i, v, j); middle weighted twice."""
    d = deg[i] + deg[j] + (dv - 4) - 2 * _edge_mask(edge_codes, n, i, j)
    kv = v * key_span + d
    return np.concatenate([i * key_span + d, j * key_span + d, kv, kv])


_RAW_KEY_LIMIT = 1 << 24  # collapse raw increment keys into counted form past this


def _chunk_histograms(g, deg, edge_codes, key_span, start, end):
    raw: list[np.ndarray] = []
    raw_size = 0
    collapsed_keys: list[np.ndarray] = []
    collapsed_counts: list[np.ndarray] = []
    pairs = 0

    def flush():
        nonlocal raw, raw_size
        if raw:
            keys, counts = np.unique(np.concatenate(raw), return_counts=True)
            collapsed_keys.append(keys)
            collapsed_counts.append(counts.astype(np.int64))
            raw = []
            raw_size = 0

    def emit(keys: np.ndarray):
        nonlocal raw_size
        raw.append(keys)
        raw_size += keys.size
        if raw_size >= _RAW_KEY_LIMIT:
            flush()

    nodes = np.arange(start, end, dtype=np.int64)
    nodes = nodes[deg[start:end] >= 2]
    local_deg = deg[nodes]
    for L in np.unique(local_deg).tolist():
        group = nodes[local_deg == L]
        per_node = L * (L - 1) // 2
        if per_node <= _PAIR_BUDGET:
            rows = max(1, _PAIR_BUDGET // per_node)
            pi, qi = _triu(L)
            for s in range(0, group.size, rows):
                sub = group[s : s + rows]
                mat = g.neighbors[g.offsets[sub][:, None] + np.arange(L)].astype(np.int64)
                i = mat[:, pi].ravel()
                j = mat[:, qi].ravel()
                v = np.repeat(sub, per_node)
                emit(_cluster_keys(deg, edge_codes, g.n, key_span, i, v, j, L))
                pairs += i.size
        else:
            # hub: stream this node's pairs in budget-sized blocks
            for node in group.tolist():
                adj = g.adjacency(node).astype(np.int64)
                for i, j in _pair_blocks(adj):
                    v = np.full(i.size, node, dtype=np.int64)
                    emit(_cluster_keys(deg, edge_codes, g.n, key_span, i, v, j, L))
                    pairs += i.size
    flush()
    if not collapsed_keys:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), pairs
    keys, counts = _merge_histograms(
        np.concatenate(collapsed_keys), np.concatenate(collapsed_counts)
    )
    return keys, counts, pairs


def _pair_blocks(adj: np.ndarray):
    acc_i: list[np.ndarray] = []
    acc_j: list[np.ndarray] = []
    acc = 0
    for p in range(adj.size - 1):
        tail = adj[p + 1 :]
        acc_i.append(np.full(tail.size, adj[p], dtype=np.int64))
        acc_j.append(tail)
        acc += tail.size
        if acc >= _PAIR_BUDGET:
            yield np.concatenate(acc_i), np.concatenate(acc_j)
            acc_i, acc_j, acc = [], [], 0
    if acc:
        yield np.concatenate(acc_i), np.concatenate(acc_j)


def _merge_histograms(keys: np.ndarray, counts: np.ndarray):
    """Sum counts of equal keys; result sorted by key (node-major, degree ascending)."""
    if keys.size == 0:
        return keys, counts
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    counts = counts[order]
    starts = np.flatnonzero(np.concatenate([[True], keys[1:] != keys[:-1]]))
    return keys[starts], np.add.reduceat(counts, starts)


def _scores_from_histograms(n, key_span, keys, counts):
    """Shared entropy pass over canonically ordered (node, degree, count) rows.

    All accumulation is np.bincount over the sorted rows, which sums
    sequentially in input order, so results are reproducible bit-for-bit.
    """
    nodes = keys // key_span
    degs = keys % key_span
    cf = counts.astype(np.float64)
    df = degs.astype(np.float64)
    mass = np.bincount(nodes, weights=cf, minlength=n)
    t = np.bincount(nodes, weights=cf * df, minlength=n)
    logd = np.zeros(degs.size)
    pos = degs > 0
    logd[pos] = np.log(df[pos])
    w = np.bincount(nodes, weights=cf * df * logd, minlength=n)
    efv = np.zeros(n)
    live = t > 0
    efv[live] = np.log(t[live]) - w[live] / t[live]
    flags = np.zeros(n, dtype=np.uint8)
    flags[mass == 0] = FLAG_NO_CLUSTERS
    flags[(mass > 0) & ~live] = FLAG_ZERO_DEGREE_CLUSTERS
    return efv, mass.astype(np.int64), flags


def _empty_result() -> EFResult:
    return EFResult(
        ef=np.zeros(0),
        cluster_total=np.zeros(0, np.int64),
        flags=np.zeros(0, np.uint8),
        clusters_processed=0,
    )


# ----------------------------------------------------------------------
# vertex-centric baseline
# ----------------------------------------------------------------------


def ef_vertex_centric(g: Graph, workers: int = 1) -> EFResult:
    """Expected Force via independent per-node cluster walks.

    For each node u, every unordered neighbor pair {i, j} yields the star
    cluster {u, i, j} counted twice, and every 2-hop chain u -> i -> k
    (k != u) counts once; chains are distinct entries even when they
    coincide setwise with a star. Each node builds its own histogram, so
    shared clusters are re-evaluated once per member. Nodes are handed to
    workers in small dynamic chunks to absorb the skewed per-node load.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if g.n == 0:
        return _empty_result()

    deg = g.degrees().tolist()
    adj = [g.adjacency(u).tolist() for u in range(g.n)]

    def connected(a: int, b: int) -> bool:
        if deg[a] > deg[b]:
            a, b = b, a
        la = adj[a]
        p = bisect_left(la, b)
        return p < len(la) and la[p] == b

    def node_histogram(u: int):
        hist: dict[int, int] = {}
        neigh = adj[u]
        du = deg[u]
        visits = 0
        for x in range(len(neigh) - 1):
            i = neigh[x]
            base = du + deg[i] - 4
            for y in range(x + 1, len(neigh)):
                j = neigh[y]
                d = base + deg[j] - (2 if connected(i, j) else 0)
                hist[d] = hist.get(d, 0) + 2
                visits += 1
        for i in neigh:
            base = du + deg[i] - 4
            for k in adj[i]:
                if k == u:
                    continue
                d = base + deg[k] - (2 if connected(u, k) else 0)
                hist[d] = hist.get(d, 0) + 1
                visits += 1
        return sorted(hist.items()), visits

    def work(block: range):
        return [node_histogram(u) for u in block]

    blocks = [range(s, min(s + 64, g.n)) for s in range(0, g.n, 64)]
    if workers == 1 or len(blocks) == 1:
        results = [work(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, blocks))

    key_span = _key_span(g.degrees())
    key_parts: list[int] = []
    count_parts: list[int] = []
    visits_total = 0
    u = 0
    for block in results:
        for items, visits in block:
            visits_total += visits
            for d, c in items:
                key_parts.append(u * key_span + d)
                count_parts.append(c)
            u += 1
    keys = np.asarray(key_parts, dtype=np.int64)
    counts = np.asarray(count_parts, dtype=np.int64)
    efv, mass, flags = _scores_from_histograms(g.n, key_span, keys, counts)
    return EFResult(ef=efv, cluster_total=mass, flags=flags, clusters_processed=visits_total)
