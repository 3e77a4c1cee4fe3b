"""Position-aware message passing over anchor-set distances.

Each layer sends every node one message per anchor set: the node's own
state is concatenated with the member's state scaled by 1 / (hop count + 1),
then pushed through a shared linear map and ReLU.  Keeping the distance
weight inside the nonlinearity lets the message react to proximity even
when input features are constant.  Per set the messages are either
averaged over all members or taken from the single closest member.  The
row-wise mean across sets becomes the next node state; the final layer
additionally projects each set's aggregate onto a learned vector, giving
one anchor-indexed output column per set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph
from .metric import (UNREACHABLE, AnchorFamily, DistanceMatrix, all_pairs,
                     all_pairs_within)
from .tensor import ShapeError, Tape, Value

VARIANTS = ("exact", "fast")

FAST_HOPS = 2


@dataclass(frozen=True)
class PGNNConfig:
    """Architecture knobs for the position-aware model."""

    layers: int = 2
    anchor_c: float = 1.0
    variant: str = "exact"
    message_dim: int = 32
    closest_node_agg: bool = True
    resample_anchors: bool = True

    def __post_init__(self):
        if not (1 <= self.layers <= 8):
            raise ValueError(f"layers must be in [1, 8], got {self.layers}")
        if self.anchor_c <= 0:
            raise ValueError(f"anchor_c must be positive, got {self.anchor_c}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.message_dim < 1:
            raise ValueError(f"message_dim must be >= 1, got {self.message_dim}")


@dataclass(frozen=True)
class GCNConfig:
    """Knobs for the degenerate mean-aggregation baseline."""

    layers: int = 2
    message_dim: int = 32

    def __post_init__(self):
        if not (1 <= self.layers <= 8):
            raise ValueError(f"layers must be in [1, 8], got {self.layers}")
        if self.message_dim < 1:
            raise ValueError(f"message_dim must be >= 1, got {self.message_dim}")


@dataclass
class PGNNLayerParams:
    """One layer's weights: message map (2 * d_in) x r and output vector r x 1."""

    w_msg: np.ndarray
    w: np.ndarray


@dataclass
class PGNNParams:
    layers: list[PGNNLayerParams] = field(default_factory=list)

    def as_list(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.append(layer.w_msg)
            out.append(layer.w)
        return out

    @classmethod
    def from_list(cls, arrays: list[np.ndarray]) -> "PGNNParams":
        if len(arrays) % 2 != 0:
            raise ShapeError("expected (w_msg, w) pairs")
        layers = [PGNNLayerParams(w_msg=arrays[i], w=arrays[i + 1])
                  for i in range(0, len(arrays), 2)]
        return cls(layers=layers)


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int,
            shape: tuple[int, int]) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def init_pgnn_params(d_in: int, cfg: PGNNConfig,
                     rng: np.random.Generator) -> PGNNParams:
    """Uniform +-sqrt(6 / (fan_in + fan_out)) init; layer l+1 input dim is r."""
    if d_in < 1:
        raise ValueError(f"d_in must be >= 1, got {d_in}")
    r = cfg.message_dim
    layers = []
    dim = d_in
    for _ in range(cfg.layers):
        w_msg = _glorot(rng, 2 * dim, r, (2 * dim, r))
        w = _glorot(rng, r, 1, (r, 1))
        layers.append(PGNNLayerParams(w_msg=w_msg, w=w))
        dim = r
    return PGNNParams(layers=layers)


def init_gcn_params(d_in: int, cfg: GCNConfig,
                    rng: np.random.Generator) -> list[np.ndarray]:
    if d_in < 1:
        raise ValueError(f"d_in must be >= 1, got {d_in}")
    weights = []
    dim = d_in
    for _ in range(cfg.layers):
        weights.append(_glorot(rng, dim, cfg.message_dim, (dim, cfg.message_dim)))
        dim = cfg.message_dim
    return weights


@dataclass(frozen=True, eq=False)
class Embeddings:
    """Forward outputs: anchor-indexed Z (n x k) and node states H (n x r)."""

    z: Value
    h: Value


def make_distance_input(g: Graph, cfg: PGNNConfig) -> DistanceMatrix:
    """Exact variant: full hop counts; fast variant: the 2-hop neighborhood."""
    if cfg.variant == "exact":
        return all_pairs(g)
    return all_pairs_within(g, FAST_HOPS)


def _closest_context(dm: DistanceMatrix, fam: AnchorFamily):
    """Per set: (closest member per node, similarity column) or None if empty.

    Distance ties break to the lowest node id; nodes that reach no member
    keep themselves as a dummy index with similarity 0, which zeroes the
    message exactly.
    """
    n = dm.n
    own = np.arange(n, dtype=np.int64)
    big = np.iinfo(np.int64).max
    ctx = []
    for members in fam.sets:
        if len(members) == 0:
            ctx.append(None)
            continue
        mem = np.asarray(members, dtype=np.int64)
        sub = dm.d[:, mem]
        masked = np.where(sub == UNREACHABLE, big, sub)
        pos = masked.argmin(axis=1)
        dmin = masked[own, pos]
        reach = dmin != big
        u_star = np.where(reach, mem[pos], own)
        safe = np.where(reach, dmin, 0).astype(np.float64)
        sim = np.where(reach, 1.0 / (safe + 1.0), 0.0).reshape(-1, 1)
        ctx.append((u_star, sim))
    return ctx


def _full_context(dm: DistanceMatrix, fam: AnchorFamily):
    """Per set: flattened (v, u) index pairs, similarities and the averaging map."""
    n = dm.n
    ctx = []
    for members in fam.sets:
        m = len(members)
        if m == 0:
            ctx.append(None)
            continue
        mem = np.asarray(members, dtype=np.int64)
        v_idx = np.repeat(np.arange(n, dtype=np.int64), m)
        u_idx = np.tile(mem, n)
        d = dm.d[v_idx, u_idx]
        reach = d != UNREACHABLE
        safe = np.where(reach, d, 0).astype(np.float64)
        sim = np.where(reach, 1.0 / (safe + 1.0), 0.0).reshape(-1, 1)
        avg = np.kron(np.eye(n), np.full((1, m), 1.0 / m))
        ctx.append((v_idx, u_idx, sim, avg))
    return ctx


def _check_forward_args(g: Graph, dm: DistanceMatrix, fam: AnchorFamily) -> None:
    if g.features is None:
        raise ValueError("pgnn_forward needs node features on the graph")
    if dm.n != g.n:
        raise ShapeError(f"distance matrix is {dm.n}x{dm.n} for n={g.n}")
    for members in fam.sets:
        if members and (members[0] < 0 or members[-1] >= g.n):
            raise ValueError("anchor set member out of range")


def pgnn_forward(tape: Tape, g: Graph, dm: DistanceMatrix, fam: AnchorFamily,
                 params: PGNNParams, cfg: PGNNConfig) -> Embeddings:
    """Run the L-layer position-aware forward pass on the given tape.

    Z has one column per anchor set, in fam order (identity on the final
    projection; intermediate-layer projections are never materialized).
    The cross-set mean for H accumulates in provenance-sorted order, so
    reordering fam.sets permutes Z's columns and leaves H bit-identical.
    """
    _check_forward_args(g, dm, fam)
    if len(params.layers) != cfg.layers:
        raise ShapeError(f"{len(params.layers)} layer params for layers={cfg.layers}")
    n, k, r = g.n, fam.k, cfg.message_dim
    if cfg.closest_node_agg:
        ctx = _closest_context(dm, fam)
    else:
        ctx = _full_context(dm, fam)
    order = sorted(range(k), key=lambda m: (fam.provenance[m], m))

    zero_block = np.zeros((n, r))
    mean_scale = np.full((n, 1), 1.0 / k)
    leafed_ctx = []
    for entry in ctx:
        if entry is None:
            leafed_ctx.append(None)
        elif cfg.closest_node_agg:
            u_star, sim = entry
            leafed_ctx.append((u_star, tape.leaf(sim)))
        else:
            v_idx, u_idx, sim, avg = entry
            leafed_ctx.append((v_idx, u_idx, tape.leaf(sim), tape.leaf(avg)))

    h = tape.leaf(g.features)
    per_set: list[Value] = []
    for layer in params.layers:
        w_msg = tape.leaf(layer.w_msg)
        per_set = []
        for entry in leafed_ctx:
            if entry is None:
                per_set.append(tape.leaf(zero_block))
                continue
            if cfg.closest_node_agg:
                u_star, sim = entry
                hu = tape.scale_rows(tape.gather_rows(h, u_star), sim)
                cat = tape.concat_cols(h, hu)
                per_set.append(tape.relu(tape.matmul(cat, w_msg)))
            else:
                v_idx, u_idx, sim, avg = entry
                hv = tape.gather_rows(h, v_idx)
                hu = tape.scale_rows(tape.gather_rows(h, u_idx), sim)
                cat = tape.concat_cols(hv, hu)
                msg = tape.relu(tape.matmul(cat, w_msg))
                per_set.append(tape.matmul(avg, msg))
        acc = per_set[order[0]]
        for m in order[1:]:
            acc = tape.add(acc, per_set[m])
        h = tape.scale_rows(acc, tape.leaf(mean_scale))

    w_out = tape.leaf(params.layers[-1].w)
    z = tape.matmul(per_set[0], w_out)
    for m in range(1, k):
        z = tape.concat_cols(z, tape.matmul(per_set[m], w_out))
    return Embeddings(z=z, h=h)


def gcn_forward(tape: Tape, g: Graph, weights: list[np.ndarray],
                layers: int) -> Value:
    """Degenerate special case: every node its own anchor set, 1-hop weights.

    Per layer h_v <- (1/n) * sum_u s1(v, u) * relu(h_u W) where s1 is 1 on
    the node itself, 1/2 on neighbors and 0 beyond one hop; the output is
    the final h.  1-hop distances come straight from the adjacency.
    """
    if g.features is None:
        raise ValueError("gcn_forward needs node features on the graph")
    if len(weights) != layers:
        raise ShapeError(f"{len(weights)} weight matrices for layers={layers}")
    n = g.n
    # One gather per neighbor position instead of a dense mixing matmul:
    # element-wise adds keep structurally equivalent nodes bit-identical,
    # which a BLAS row reduction does not guarantee.  Ragged adjacency is
    # padded with the node itself at weight zero.
    max_deg = max((len(nbrs) for nbrs in g.adjacency), default=0)
    position_idx = []
    position_w = []
    for j in range(max_deg):
        position_idx.append(np.array(
            [nbrs[j] if j < len(nbrs) else v
             for v, nbrs in enumerate(g.adjacency)], dtype=np.int64))
        position_w.append(tape.leaf(np.array(
            [[0.5 / n if j < len(nbrs) else 0.0] for nbrs in g.adjacency])))
    self_w = tape.leaf(np.full((n, 1), 1.0 / n))
    h = tape.leaf(g.features)
    for w in weights:
        msg = tape.relu(tape.matmul(h, tape.leaf(w)))
        acc = tape.scale_rows(msg, self_w)
        for j in range(max_deg):
            acc = tape.add(acc, tape.scale_rows(
                tape.gather_rows(msg, position_idx[j]), position_w[j]))
        h = acc
    return h


def singleton_family(n: int) -> AnchorFamily:
    """The n one-node anchor sets {0} .. {n-1}, for the degenerate reduction."""
    return AnchorFamily(sets=tuple((v,) for v in range(n)),
                        provenance=tuple((1, j + 1) for j in range(n)),
                        c=1.0, seed=0)
