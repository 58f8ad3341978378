"""Undirected simple graphs in compressed adjacency (CSR) form.

Graphs are loaded from plain edge-list text, built from raw edge arrays, or
generated with a recursive-matrix (R-MAT) sampler. Construction cleans the
input: self-loops and duplicate edges are removed, the edge set is
symmetrized, isolated nodes are dropped, and surviving nodes are relabeled
to a dense 0..n-1 range (sorted by original id, so dense order preserves
original order). The resulting Graph is immutable and safe to share
read-only across workers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Graph",
    "RmatParams",
    "DEFAULT_RMAT_PROBS",
    "load_edge_list",
    "build_graph",
    "generate_rmat",
    "cluster_count",
    "write_edge_list",
]

# De-facto standard quadrant probabilities for power-law-like R-MATs.
DEFAULT_RMAT_PROBS = (0.57, 0.19, 0.19, 0.05)

_MAX_NODES = 2**31  # neighbor ids are stored as int32


@dataclass
class Graph:
    """Immutable undirected simple graph.

    Attributes:
        n: number of nodes (dense ids 0..n-1)
        m: number of undirected edges
        offsets: int64 array of length n+1; adjacency of v is
            neighbors[offsets[v]:offsets[v+1]], strictly ascending
        neighbors: int32 array of length 2m
        orig_ids: int64 array mapping dense id -> original id (ascending)
        relabeling: dict mapping original id -> dense id
    """

    n: int
    m: int
    offsets: np.ndarray
    neighbors: np.ndarray
    orig_ids: np.ndarray
    relabeling: dict[int, int] = field(repr=False)

    def _check_id(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise ValueError(f"node id {v} out of range [0, {self.n})")

    def degree(self, v: int) -> int:
        self._check_id(v)
        return int(self.offsets[v + 1] - self.offsets[v])

    def degrees(self) -> np.ndarray:
        """Per-node degree array (int64)."""
        return np.diff(self.offsets)

    def adjacency(self, v: int) -> np.ndarray:
        """Sorted neighbor ids of v (read-only view)."""
        self._check_id(v)
        return self.neighbors[self.offsets[v] : self.offsets[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        """Membership test via binary search on the lower-degree endpoint."""
        self._check_id(u)
        self._check_id(v)
        if u == v:
            return False
        if self.degree(u) > self.degree(v):
            u, v = v, u
        adj = self.adjacency(u)
        pos = int(np.searchsorted(adj, v))
        return pos < adj.size and int(adj[pos]) == v

    def avg_degree(self) -> float:
        if self.n == 0:
            return 0.0
        return 2.0 * self.m / self.n


@dataclass(frozen=True)
class RmatParams:
    """Parameters of the recursive-matrix generator.

    scale N gives a 2^N x 2^N adjacency matrix; avg_degree M sets the
    pre-cleaning target of floor(2^N * M / 2) undirected edges.
    """

    scale: int
    avg_degree: int
    quadrant_probs: tuple[float, float, float, float] = DEFAULT_RMAT_PROBS
    seed: int = 0

    def __post_init__(self):
        if self.scale < 1:
            raise ValueError("scale must be >= 1")
        if self.avg_degree < 1:
            raise ValueError("avg_degree must be >= 1")
        probs = tuple(float(p) for p in self.quadrant_probs)
        if len(probs) != 4 or any(p < 0 for p in probs):
            raise ValueError("quadrant_probs must be 4 nonnegative reals")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError(f"quadrant_probs must sum to 1, got {sum(probs)}")


def load_edge_list(stream) -> np.ndarray:
    """Parse a whitespace-separated edge list into a (k, 2) int64 array.

    Lines starting with '#' or '%' are comments; blank lines are skipped.
    Each remaining line must carry at least two non-negative integer tokens;
    extra tokens (e.g. weights) are ignored. Pairs are returned in input
    order, duplicates and self-loops included.
    """
    us: list[int] = []
    vs: list[int] = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line[0] in "#%":
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise ValueError(f"line {lineno}: expected at least 2 tokens, got {len(tokens)}")
        try:
            u = int(tokens[0])
            v = int(tokens[1])
        except ValueError:
            raise ValueError(f"line {lineno}: non-integer node id in {tokens[:2]}") from None
        if u < 0 or v < 0:
            raise ValueError(f"line {lineno}: negative node id in ({u}, {v})")
        us.append(u)
        vs.append(v)
    out = np.empty((len(us), 2), dtype=np.int64)
    out[:, 0] = us
    out[:, 1] = vs
    return out


def build_graph(edges) -> Graph:
    """Build a cleaned CSR graph from raw (u, v) pairs.

    Self-loops are dropped, edges are symmetrized and deduplicated, nodes
    left without any edge are removed, and the survivors are densely
    relabeled in ascending original-id order. Degenerate input yields the
    empty graph.
    """
    arr = np.asarray(edges, dtype=np.int64)
    if arr.size == 0:
        return _empty_graph()
    arr = arr.reshape(-1, 2)
    arr = arr[arr[:, 0] != arr[:, 1]]
    if arr.shape[0] == 0:
        return _empty_graph()

    orig_ids = np.unique(arr)
    n = int(orig_ids.size)
    if n >= _MAX_NODES:
        raise ValueError(f"graph too large: {n} nodes exceeds int32 id space")
    lo = np.searchsorted(orig_ids, np.minimum(arr[:, 0], arr[:, 1]))
    hi = np.searchsorted(orig_ids, np.maximum(arr[:, 0], arr[:, 1]))
    codes = np.unique(lo * np.int64(n) + hi)
    m = int(codes.size)
    lo = (codes // n).astype(np.int64)
    hi = (codes % n).astype(np.int64)

    src = np.concatenate([lo, hi])
    dst = np.concatenate([hi, lo])
    order = np.lexsort((dst, src))
    src = src[order]
    dst = dst[order]

    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
    relabeling = {int(o): i for i, o in enumerate(orig_ids)}
    return Graph(
        n=n,
        m=m,
        offsets=offsets,
        neighbors=dst.astype(np.int32),
        orig_ids=orig_ids,
        relabeling=relabeling,
    )


def _empty_graph() -> Graph:
    return Graph(
        n=0,
        m=0,
        offsets=np.zeros(1, dtype=np.int64),
        neighbors=np.zeros(0, dtype=np.int32),
        orig_ids=np.zeros(0, dtype=np.int64),
        relabeling={},
    )


def generate_rmat(params: RmatParams) -> tuple[Graph, bool]:
    """Sample an R-MAT graph; returns (graph, truncated).

    Directed pairs are drawn by recursive quadrant descent on a 2^N x 2^N
    matrix; self-loops are dropped and pairs deduplicated as undirected
    edges until floor(2^N * M / 2) distinct edges exist. The attempt cap is
    20x the target; hitting it returns whatever was accumulated with
    truncated=True. Output is a pure function of params.
    """
    a, b, c, _ = params.quadrant_probs
    side = 1 << params.scale
    target = (side * params.avg_degree) // 2
    cap = 20 * target
    rng = np.random.default_rng(params.seed)
    weights = (np.int64(1) << np.arange(params.scale - 1, -1, -1)).astype(np.int64)

    seen: set[int] = set()
    attempts = 0
    while len(seen) < target and attempts < cap:
        need = target - len(seen)
        batch = int(min(cap - attempts, max(1024, min(262144, 2 * need))))
        attempts += batch
        r = rng.random((batch, params.scale))
        u_bit = r >= a + b
        v_bit = ((r >= a) & (r < a + b)) | (r >= a + b + c)
        u = u_bit @ weights
        v = v_bit @ weights
        mask = u != v
        lo = np.minimum(u[mask], v[mask])
        hi = np.maximum(u[mask], v[mask])
        for code in (lo * np.int64(side) + hi).tolist():
            seen.add(code)
            if len(seen) == target:
                break

    truncated = len(seen) < target
    if not seen:
        return _empty_graph(), truncated
    codes = np.fromiter(seen, dtype=np.int64, count=len(seen))
    edges = np.empty((codes.size, 2), dtype=np.int64)
    edges[:, 0] = codes // side
    edges[:, 1] = codes % side
    return build_graph(edges), truncated


def cluster_count(g: Graph) -> int:
    """Number of middle-node triplets (i, v, j), i < j both adjacent to v.

    Equals sum over nodes of C(deg(v), 2).
    """
    d = g.degrees()
    return int(np.sum(d * (d - 1) // 2))


def write_edge_list(g: Graph, stream) -> None:
    """Write one undirected edge per line in original-id space.

    Smaller endpoint first; lines sorted numerically by (u, v). The dense
    relabeling is monotone in original ids, so iterating dense ids in order
    yields sorted output directly.
    """
    for u in range(g.n):
        ou = int(g.orig_ids[u])
        for v in g.adjacency(u):
            if v > u:
                stream.write(f"{ou} {int(g.orig_ids[v])}\n")
