"""Independent reference implementations shared by the test modules.

Everything here is deliberately written in a different style than the
package (min-plus matrix iteration, O(P*N) pair counting) so agreement
between the two routes is meaningful.
"""

import numpy as np

from pgnn.graph import Graph


def floyd_warshall(g: Graph) -> np.ndarray:
    """All-pairs hop counts as float, np.inf where unreachable."""
    n = g.n
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    for u in range(n):
        for v in g.adjacency[u]:
            d[u, v] = 1.0
    for k in range(n):
        d = np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :])
    return d


def brute_force_auc(scores, labels) -> float:
    """Count concordant positive-negative pairs, ties worth one half."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    pos = s[y == 1]
    neg = s[y == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def random_connected_graph(n: int, rng, extra_edges: int = 0) -> Graph:
    """Random tree on n nodes plus optional extra random edges."""
    edges = []
    for v in range(1, n):
        edges.append((int(rng.integers(v)), v))
    for _ in range(extra_edges):
        u = int(rng.integers(n))
        v = int(rng.integers(n))
        if u != v:
            edges.append((u, v))
    return Graph.from_edges(n, edges)


def numeric_grad(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function, entry by entry."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2.0 * h)
        it.iternext()
    return g


def max_rel_err(a: np.ndarray, b: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)
    return float((np.abs(a - b) / denom).max())
