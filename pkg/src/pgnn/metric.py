"""Shortest-path machinery, anchor-set sampling and the Bourgain embedding.

Hop counts are int64; nodes that cannot be reached carry the out-of-band
sentinel :data:`UNREACHABLE` (never an in-band large number), and every
arithmetic path masks it explicitly.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import Graph

UNREACHABLE: int = -1

_NORMS = (1, 2, math.inf)


class DisconnectedGraphError(ValueError):
    """An operation that needs a connected graph saw unreachable pairs."""


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric matrix of pairwise hop counts with UNREACHABLE sentinels."""

    d: np.ndarray

    def __post_init__(self):
        a = self.d
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"distance matrix must be square, got {a.shape}")
        if a.dtype != np.int64:
            raise ValueError("distance matrix must be int64")
        if np.any(np.diagonal(a) != 0):
            raise ValueError("self distances must be 0")
        if np.any(a < UNREACHABLE):
            raise ValueError("distances must be hop counts or UNREACHABLE")
        if not np.array_equal(a, a.T):
            raise ValueError("distance matrix must be symmetric")
        a.setflags(write=False)

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def is_fully_connected(self) -> bool:
        return not np.any(self.d == UNREACHABLE)


def _bfs(g: Graph, source: int, depth_limit: int | None) -> np.ndarray:
    dist = np.full(g.n, UNREACHABLE, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u]
        if depth_limit is not None and du >= depth_limit:
            continue
        for v in g.adjacency[u]:
            if dist[v] == UNREACHABLE:
                dist[v] = du + 1
                queue.append(v)
    return dist


def bfs_from(g: Graph, source: int) -> np.ndarray:
    """Hop counts from one source; UNREACHABLE where no path exists."""
    if not (0 <= source < g.n):
        raise ValueError(f"source {source} out of range for n={g.n}")
    return _bfs(g, source, None)


def all_pairs(g: Graph) -> DistanceMatrix:
    """All-pairs hop counts via one BFS per node."""
    d = np.empty((g.n, g.n), dtype=np.int64)
    for s in range(g.n):
        d[s] = _bfs(g, s, None)
    return DistanceMatrix(d)


def all_pairs_within(g: Graph, q: int) -> DistanceMatrix:
    """All-pairs hop counts exploring only the q-hop neighborhood per node."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    d = np.empty((g.n, g.n), dtype=np.int64)
    for s in range(g.n):
        d[s] = _bfs(g, s, q)
    return DistanceMatrix(d)


def truncate(dm: DistanceMatrix, q) -> DistanceMatrix:
    """q-hop truncation: distances beyond q become UNREACHABLE.

    ``q`` is an integer >= 1 or math.inf (identity).  Idempotent.
    """
    if q != math.inf:
        if not float(q).is_integer() or q < 1:
            raise ValueError(f"q must be an integer >= 1 or inf, got {q!r}")
        q = int(q)
    d = dm.d.copy()
    over = d > q if q != math.inf else np.zeros_like(d, dtype=bool)
    d[over] = UNREACHABLE
    return DistanceMatrix(d)


def similarity(d: int) -> float:
    """1 / (hop count + 1); exactly 0.0 for UNREACHABLE."""
    if d == UNREACHABLE:
        return 0.0
    if d < 0:
        raise ValueError(f"negative hop count {d}")
    return 1.0 / (d + 1.0)


# ----------------------------------------------------------------------
# anchor sets


@dataclass(frozen=True)
class AnchorFamily:
    """A family of anchor node-sets with Bourgain (i, j) provenance.

    Sampled families always satisfy k = ceil(log2 n) * ceil(c * log2 n)
    with set i drawn by including each node independently with probability
    2**-i; hand-built families (demos, degenerate configs) may be smaller.
    """

    sets: tuple[tuple[int, ...], ...]
    provenance: tuple[tuple[int, int], ...]
    c: float
    seed: int

    def __post_init__(self):
        if len(self.sets) != len(self.provenance):
            raise ValueError("one provenance pair per anchor set required")
        if len(self.sets) < 1:
            raise ValueError("anchor family cannot be empty")
        for members in self.sets:
            if list(members) != sorted(set(members)):
                raise ValueError("anchor sets must be sorted and duplicate-free")

    @property
    def k(self) -> int:
        return len(self.sets)


def anchor_family_size(n: int, c: float) -> int:
    """k = ceil(log2 n) * ceil(c * log2 n) for an n-node graph."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if c <= 0:
        raise ValueError(f"need c > 0, got {c}")
    log_n = math.log2(n)
    return math.ceil(log_n) * math.ceil(c * log_n)


def sample_anchor_family(n: int, c: float, seed: int) -> AnchorFamily:
    """Draw the Bourgain anchor family for an n-node graph.

    For i in 1..ceil(log2 n) and j in 1..ceil(c * log2 n), set S_ij includes
    each node independently with probability 2**-i.  Empty draws are kept.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if c <= 0:
        raise ValueError(f"need c > 0, got {c}")
    log_n = math.log2(n)
    i_max = math.ceil(log_n)
    j_max = math.ceil(c * log_n)
    rng = np.random.default_rng(seed)
    sets: list[tuple[int, ...]] = []
    provenance: list[tuple[int, int]] = []
    for i in range(1, i_max + 1):
        prob = 2.0 ** -i
        for j in range(1, j_max + 1):
            mask = rng.random(n) < prob
            sets.append(tuple(int(v) for v in np.flatnonzero(mask)))
            provenance.append((i, j))
    return AnchorFamily(sets=tuple(sets), provenance=tuple(provenance),
                        c=c, seed=seed)


def set_distance(dm: DistanceMatrix, v: int, members: Sequence[int]) -> int:
    """Distance from node v to an anchor set: min over members.

    Empty sets and sets with no reachable member give UNREACHABLE.
    """
    if not (0 <= v < dm.n):
        raise ValueError(f"node {v} out of range for n={dm.n}")
    if len(members) == 0:
        return UNREACHABLE
    vals = dm.d[v, np.asarray(members, dtype=np.int64)]
    reachable = vals[vals != UNREACHABLE]
    if reachable.size == 0:
        return UNREACHABLE
    return int(reachable.min())


def _set_distances(dm: DistanceMatrix, members: Sequence[int]) -> np.ndarray:
    """Vector of set distances for every node; UNREACHABLE where none."""
    if len(members) == 0:
        return np.full(dm.n, UNREACHABLE, dtype=np.int64)
    sub = dm.d[:, np.asarray(members, dtype=np.int64)]
    big = np.iinfo(np.int64).max
    masked = np.where(sub == UNREACHABLE, big, sub)
    mins = masked.min(axis=1)
    return np.where(mins == big, np.int64(UNREACHABLE), mins)


def bourgain_embed(dm: DistanceMatrix, fam: AnchorFamily) -> np.ndarray:
    """n x k coordinates d(v, S_m) / k; empty sets contribute 0 columns.

    Raises DisconnectedGraphError if a nonempty set is unreachable from some
    node, since a finite coordinate does not exist there.
    """
    k = fam.k
    emb = np.zeros((dm.n, k), dtype=np.float64)
    for m, members in enumerate(fam.sets):
        if len(members) == 0:
            continue
        dist = _set_distances(dm, members)
        if np.any(dist == UNREACHABLE):
            bad = int(np.flatnonzero(dist == UNREACHABLE)[0])
            raise DisconnectedGraphError(
                f"node {bad} cannot reach anchor set {m}; graph is disconnected")
        emb[:, m] = dist / k
    return emb


def measure_distortion(dm: DistanceMatrix, emb: np.ndarray,
                       p) -> tuple[float, float, float]:
    """Worst-case expansion and contraction of an embedding, and their product.

    Over all node pairs u != v: expansion is the max ratio of embedded to
    graph distance, contraction the max of the inverse ratio.  Two distinct
    nodes mapped to the same point give infinite contraction (a value, not
    an exception).  Requires a connected graph and p in {1, 2, inf}.
    """
    if p not in _NORMS:
        raise ValueError(f"p must be one of {_NORMS}, got {p!r}")
    n = dm.n
    if n < 2:
        raise ValueError("need at least two nodes to measure distortion")
    if not dm.is_fully_connected():
        raise DisconnectedGraphError("distortion needs a connected graph")
    if emb.ndim != 2 or emb.shape[0] != n:
        raise ValueError(f"embedding must have {n} rows, got {emb.shape}")
    iu, ju = np.triu_indices(n, k=1)
    diffs = emb[iu] - emb[ju]
    if p == 1:
        emb_d = np.abs(diffs).sum(axis=1)
    elif p == 2:
        emb_d = np.sqrt((diffs * diffs).sum(axis=1))
    else:
        emb_d = np.abs(diffs).max(axis=1)
    graph_d = dm.d[iu, ju].astype(np.float64)
    expansion = float((emb_d / graph_d).max())
    if np.any(emb_d == 0.0):
        # no rescaling recovers a collapsed pair
        return expansion, math.inf, math.inf
    contraction = float((graph_d / emb_d).max())
    return expansion, contraction, expansion * contraction
