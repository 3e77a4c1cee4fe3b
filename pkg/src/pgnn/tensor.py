"""Dense float64 matrices and a minimal reverse-mode differentiation tape.

A :class:`Tape` records matrix-level operations as an append-only list of
nodes.  :meth:`Tape.backward` walks the recording in reverse topological
order from a scalar terminal and accumulates gradients for every node,
summing over repeated uses.  There is no broadcasting beyond the explicit
``scale_rows`` op and no in-place mutation anywhere on the tape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit


class ShapeError(ValueError):
    """Operand shapes are incompatible for the requested operation."""


class Matrix:
    """Immutable dense matrix of 64-bit floats.

    Construction rejects NaN/Inf entries and anything that is not
    two-dimensional.  The wrapped array is marked read-only.
    """

    __slots__ = ("_a",)

    def __init__(self, values) -> None:
        a = np.array(values, dtype=np.float64)
        self._check_and_bind(a)

    @classmethod
    def _wrap(cls, a: np.ndarray) -> "Matrix":
        # internal fast path for freshly computed op outputs: no copy
        m = object.__new__(cls)
        m._check_and_bind(a)
        return m

    def _check_and_bind(self, a: np.ndarray) -> None:
        if a.ndim != 2:
            raise ShapeError(f"matrix must be 2-d, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite (no NaN/Inf)")
        a.setflags(write=False)
        self._a = a

    @property
    def rows(self) -> int:
        return self._a.shape[0]

    @property
    def cols(self) -> int:
        return self._a.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._a.shape

    @property
    def data(self) -> np.ndarray:
        """Row-major read-only view of the entries."""
        return self._a

    def __repr__(self) -> str:
        return f"Matrix({self.rows}x{self.cols})"


@dataclass(frozen=True, eq=False)
class Value:
    """Handle to one node recorded on a tape; carries the forward matrix."""

    tape: "Tape"
    id: int
    matrix: Matrix

    @property
    def data(self) -> np.ndarray:
        return self.matrix.data

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


class _Node:
    __slots__ = ("matrix", "parents", "backward", "is_leaf")

    def __init__(self, matrix, parents, backward, is_leaf):
        self.matrix = matrix
        self.parents = parents
        self.backward = backward
        self.is_leaf = is_leaf


class Tape:
    """Append-only recording of matrix ops; single-writer, one run each."""

    def __init__(self) -> None:
        self._nodes: list[_Node] = []
        # memo pins the key array: id() values must stay unique while we live
        self._leaf_memo: dict[int, tuple[np.ndarray, Value]] = {}

    def __len__(self) -> int:
        return len(self._nodes)

    def _record(self, matrix: Matrix, parents: tuple[int, ...],
                backward: Callable | None, is_leaf: bool = False) -> Value:
        self._nodes.append(_Node(matrix, parents, backward, is_leaf))
        return Value(self, len(self._nodes) - 1, matrix)

    def _own(self, *vals: Value) -> None:
        for v in vals:
            if v.tape is not self:
                raise ValueError("value belongs to a different tape")

    # ------------------------------------------------------------------
    # inputs

    def leaf(self, values) -> Value:
        """Register an input/parameter matrix.

        Re-registering the same array object returns the original node, so
        a parameter used by several ops accumulates one gradient entry.
        """
        if isinstance(values, np.ndarray):
            memo = self._leaf_memo.get(id(values))
            if memo is not None:
                return memo[1]
            out = self._record(Matrix(values), (), None, is_leaf=True)
            self._leaf_memo[id(values)] = (values, out)
            return out
        return self._record(Matrix(values), (), None, is_leaf=True)

    # ------------------------------------------------------------------
    # ops

    def matmul(self, a: Value, b: Value) -> Value:
        self._own(a, b)
        if a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul: {a.shape} x {b.shape}")
        ad, bd = a.data, b.data

        def back(g):
            return g @ bd.T, ad.T @ g

        return self._record(Matrix._wrap(ad @ bd), (a.id, b.id), back)

    def add(self, a: Value, b: Value) -> Value:
        self._own(a, b)
        if a.shape != b.shape:
            raise ShapeError(f"add: {a.shape} vs {b.shape}")

        def back(g):
            return g, g

        return self._record(Matrix._wrap(a.data + b.data), (a.id, b.id), back)

    def sub(self, a: Value, b: Value) -> Value:
        self._own(a, b)
        if a.shape != b.shape:
            raise ShapeError(f"sub: {a.shape} vs {b.shape}")

        def back(g):
            return g, -g

        return self._record(Matrix._wrap(a.data - b.data), (a.id, b.id), back)

    def hadamard(self, a: Value, b: Value) -> Value:
        self._own(a, b)
        if a.shape != b.shape:
            raise ShapeError(f"hadamard: {a.shape} vs {b.shape}")
        ad, bd = a.data, b.data

        def back(g):
            return g * bd, g * ad

        return self._record(Matrix._wrap(ad * bd), (a.id, b.id), back)

    def scale_rows(self, a: Value, s: Value) -> Value:
        """Multiply row i of ``a`` by the scalar ``s[i, 0]``."""
        self._own(a, s)
        if s.shape != (a.shape[0], 1):
            raise ShapeError(f"scale_rows: {a.shape} vs scale {s.shape}")
        ad, sd = a.data, s.data

        def back(g):
            return g * sd, (g * ad).sum(axis=1, keepdims=True)

        return self._record(Matrix._wrap(ad * sd), (a.id, s.id), back)

    def concat_cols(self, a: Value, b: Value) -> Value:
        self._own(a, b)
        if a.shape[0] != b.shape[0]:
            raise ShapeError(f"concat_cols: {a.shape} vs {b.shape}")
        split = a.shape[1]

        def back(g):
            return g[:, :split], g[:, split:]

        return self._record(Matrix._wrap(np.hstack((a.data, b.data))),
                            (a.id, b.id), back)

    def row_mean(self, a: Value) -> Value:
        """Mean over rows, returning a 1 x cols row vector."""
        self._own(a)
        rows = a.shape[0]

        def back(g):
            return (np.broadcast_to(g / rows, a.shape).copy(),)

        return self._record(Matrix._wrap(a.data.mean(axis=0, keepdims=True)),
                            (a.id,), back)

    def gather_rows(self, a: Value, idx) -> Value:
        """Select rows of ``a`` by index; gradient scatters back by sum.

        The index vector is data, not a differentiable input.
        """
        self._own(a)
        ix = np.asarray(idx, dtype=np.int64)
        if ix.ndim != 1:
            raise ShapeError(f"gather_rows: index must be 1-d, got {ix.shape}")
        if ix.size and (ix.min() < 0 or ix.max() >= a.shape[0]):
            raise ValueError("gather_rows: index out of range")
        shape = a.shape

        def back(g):
            ga = np.zeros(shape)
            np.add.at(ga, ix, g)
            return (ga,)

        return self._record(Matrix._wrap(a.data[ix]), (a.id,), back)

    def relu(self, a: Value) -> Value:
        self._own(a)
        ad = a.data

        def back(g):
            return (g * (ad > 0.0),)

        return self._record(Matrix._wrap(np.maximum(ad, 0.0)), (a.id,), back)

    def sigmoid(self, a: Value) -> Value:
        self._own(a)
        out = expit(a.data)

        def back(g):
            return (g * out * (1.0 - out),)

        return self._record(Matrix._wrap(out), (a.id,), back)

    def bce_with_logits(self, logits: Value, targets) -> Value:
        """Mean binary cross-entropy over a column of logits.

        Computed in the stable branch form log(1 + exp(-x)) + (1 - y) * x,
        so loss and gradient stay finite for any logit magnitude.  Targets
        are plain 0/1 data, not a tape input.
        """
        self._own(logits)
        if logits.shape[1] != 1:
            raise ShapeError(f"bce_with_logits: logits must be a column, got {logits.shape}")
        t = np.asarray(targets, dtype=np.float64).reshape(-1, 1)
        if t.shape[0] != logits.shape[0]:
            raise ShapeError(
                f"bce_with_logits: logits {logits.shape} vs targets ({t.shape[0]},)")
        if not np.all((t == 0.0) | (t == 1.0)):
            raise ValueError("bce_with_logits: targets must be 0 or 1")
        x = logits.data
        m = x.shape[0]
        per = np.logaddexp(0.0, -x) + (1.0 - t) * x
        out = np.array([[per.mean()]])

        def back(g):
            return (g[0, 0] * (expit(x) - t) / m,)

        return self._record(Matrix._wrap(out), (logits.id,), back)

    # ------------------------------------------------------------------
    # reverse pass

    def backward(self, terminal: Value) -> dict[int, np.ndarray]:
        """Gradients of a scalar terminal w.r.t. every node on the tape.

        Returns a table keyed by node id.  Nodes that do not reach the
        terminal (including unused parameters) get exact zeros.  The tape
        is not mutated, so calling backward again gives identical results.
        """
        self._own(terminal)
        if terminal.shape != (1, 1):
            raise ValueError(
                f"backward terminal must be a 1x1 scalar, got {terminal.shape}")
        grads: list[np.ndarray | None] = [None] * len(self._nodes)
        grads[terminal.id] = np.ones((1, 1))
        for nid in range(terminal.id, -1, -1):
            g = grads[nid]
            if g is None:
                continue
            node = self._nodes[nid]
            if node.backward is None:
                continue
            contribs = node.backward(g)
            for pid, contrib in zip(node.parents, contribs):
                if contrib is None:
                    continue
                if grads[pid] is None:
                    grads[pid] = contrib
                else:
                    grads[pid] = grads[pid] + contrib
        table: dict[int, np.ndarray] = {}
        for nid, node in enumerate(self._nodes):
            g = grads[nid]
            table[nid] = g if g is not None else np.zeros(node.matrix.shape)
        return table


# ----------------------------------------------------------------------
# optimizer


@dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators and the step counter."""

    step: int
    m: tuple[np.ndarray, ...]
    v: tuple[np.ndarray, ...]

    @classmethod
    def fresh(cls, params: Sequence[np.ndarray]) -> "AdamState":
        return cls(step=0,
                   m=tuple(np.zeros_like(p) for p in params),
                   v=tuple(np.zeros_like(p) for p in params))


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray],
              state: AdamState | None, lr: float = 0.01, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8,
              ) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam update; pure, returns new params and state."""
    if len(params) != len(grads):
        raise ShapeError(f"adam_step: {len(params)} params vs {len(grads)} grads")
    if state is None:
        state = AdamState.fresh(params)
    if len(state.m) != len(params):
        raise ShapeError(f"adam_step: state tracks {len(state.m)} params, got {len(params)}")
    t = state.step + 1
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ShapeError(f"adam_step: param {p.shape} vs grad {g.shape}")
        if m.shape != p.shape or v.shape != p.shape:
            raise ShapeError(f"adam_step: state moments {m.shape} vs param {p.shape}")
        m2 = beta1 * m + (1.0 - beta1) * g
        v2 = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m2 / (1.0 - beta1 ** t)
        v_hat = v2 / (1.0 - beta2 ** t)
        new_p.append(p - lr * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(m2)
        new_v.append(v2)
    return new_p, AdamState(step=t, m=tuple(new_m), v=tuple(new_v))
