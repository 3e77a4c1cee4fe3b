"""Link and pairwise-classification experiments with full-batch Adam.

A run repeats training ``repeats`` times from seeds seed+0 .. seed+r-1,
tracks validation AUC every epoch, snapshots the parameters (and, for the
position-aware model, the anchor family) at the best validation epoch with
earliest-epoch tie breaking, and reports the test AUC of that snapshot.
Anchor families are redrawn each forward pass from a seed stream derived
from (run seed, epoch, forward index), so every run is replayable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import EdgeSplit, Graph, augment_one_hot, constant_features
from .metric import AnchorFamily, sample_anchor_family
from .model import (Embeddings, GCNConfig, PGNNConfig, PGNNParams,
                    gcn_forward, init_gcn_params, init_pgnn_params,
                    make_distance_input, pgnn_forward)
from .tensor import Tape, Value, adam_step

SETTINGS = ("transductive", "inductive")


@dataclass(frozen=True)
class TrainConfig:
    """Optimization protocol; epochs == 0 evaluates the initialization."""

    epochs: int = 200
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    repeats: int = 10
    setting: str = "inductive"

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.setting not in SETTINGS:
            raise ValueError(f"setting must be one of {SETTINGS}, got {self.setting!r}")


@dataclass(frozen=True)
class EpochRecord:
    loss: float
    val_auc: float


@dataclass(frozen=True)
class RepeatResult:
    repeat: int
    test_auc: float
    val_auc: float
    best_epoch: int
    train_loss: float
    epoch_log: tuple[EpochRecord, ...]
    # best-validation snapshot, kept out of the serialized metrics
    snapshot: tuple[np.ndarray, ...] = ()
    anchor_seed: int | None = None


@dataclass(frozen=True)
class Metrics:
    """Aggregated results; mean/std are over the per-repeat test AUCs."""

    task: str
    dataset: str
    model: str
    setting: str
    repeats: int
    per_repeat: tuple[RepeatResult, ...]
    mean_auc: float
    std_auc: float

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "dataset": self.dataset,
            "model": self.model,
            "setting": self.setting,
            "repeats": self.repeats,
            "per_repeat": [
                {"repeat": r.repeat, "test_auc": r.test_auc, "val_auc": r.val_auc,
                 "best_epoch": r.best_epoch, "train_loss": r.train_loss}
                for r in self.per_repeat
            ],
            "mean_auc": self.mean_auc,
            "std_auc": self.std_auc,
        }


def pair_score(emb, u: int, v: int) -> float:
    """Symmetric inner-product logit between two embedding rows."""
    z = emb.z.data if isinstance(emb, Embeddings) else np.asarray(emb)
    if not (0 <= u < z.shape[0] and 0 <= v < z.shape[0]):
        raise ValueError(f"pair ({u}, {v}) out of range for {z.shape[0]} rows")
    return float(z[u] @ z[v])


def epoch_loss(tape: Tape, z: Value, pos_pairs, neg_pairs) -> Value:
    """Mean BCE over inner-product logits: positives target 1, negatives 0."""
    pairs = list(pos_pairs) + list(neg_pairs)
    if not pairs:
        raise ValueError("epoch_loss needs at least one pair")
    us = np.array([p[0] for p in pairs], dtype=np.int64)
    vs = np.array([p[1] for p in pairs], dtype=np.int64)
    zu = tape.gather_rows(z, us)
    zv = tape.gather_rows(z, vs)
    prod = tape.hadamard(zu, zv)
    logits = tape.matmul(prod, tape.leaf(np.ones((z.shape[1], 1))))
    targets = np.concatenate([np.ones(len(pos_pairs)), np.zeros(len(neg_pairs))])
    return tape.bce_with_logits(logits, targets)


def roc_auc(scores, labels) -> float:
    """Exact ROC AUC by rank statistics; tied scores count one half.

    Raises ValueError when only one class is present (the area is undefined).
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.ndim != 1 or y.shape != s.shape:
        raise ValueError(f"scores {s.shape} and labels {y.shape} must be equal-length vectors")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    p = int((y == 1).sum())
    q = s.size - p
    if p == 0 or q == 0:
        raise ValueError("roc_auc is undefined when only one class is present")
    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    ranks = np.empty(s.size, dtype=np.float64)
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    pos_rank_sum = ranks[y == 1].sum()
    return float((pos_rank_sum - p * (p + 1) / 2.0) / (p * q))


# ----------------------------------------------------------------------
# experiment harness


def _forward_graph(g: Graph, split: EdgeSplit, setting: str) -> Graph:
    """Graph the model actually sees: train-only edges for link prediction,
    one-hot ids when transductive, constant scalar otherwise (unless the
    graph brings its own features)."""
    if split.task == "link_prediction":
        base = Graph.from_edges(g.n, split.train_pos,
                                features=g.features, labels=g.labels)
    else:
        base = g
    if setting == "transductive":
        return augment_one_hot(base)
    if base.features is not None:
        return base
    return constant_features(base)


def _anchor_seed(run_seed: int, epoch: int, forward_idx: int) -> int:
    ss = np.random.SeedSequence((run_seed, epoch, forward_idx))
    return int(ss.generate_state(1)[0])


def _score_pairs(z: np.ndarray, pos, neg) -> tuple[np.ndarray, np.ndarray]:
    pairs = list(pos) + list(neg)
    us = np.array([p[0] for p in pairs], dtype=np.int64)
    vs = np.array([p[1] for p in pairs], dtype=np.int64)
    scores = (z[us] * z[vs]).sum(axis=1)
    labels = np.concatenate([np.ones(len(pos), dtype=np.int64),
                             np.zeros(len(neg), dtype=np.int64)])
    return scores, labels


def model_label(model_cfg) -> str:
    if isinstance(model_cfg, PGNNConfig):
        return f"pgnn-{model_cfg.variant[0]}-{model_cfg.layers}l"
    return f"gcn-{model_cfg.layers}l"


def _run_single(fg: Graph, dm, split: EdgeSplit, model_cfg, tc: TrainConfig,
                run_seed: int, repeat_idx: int) -> RepeatResult:
    is_pgnn = isinstance(model_cfg, PGNNConfig)
    rng = np.random.default_rng(run_seed)
    if is_pgnn:
        plist = init_pgnn_params(fg.features.shape[1], model_cfg, rng).as_list()
    else:
        plist = init_gcn_params(fg.features.shape[1], model_cfg, rng)

    def draw_family(epoch: int) -> AnchorFamily | None:
        if not is_pgnn:
            return None
        return sample_anchor_family(fg.n, model_cfg.anchor_c,
                                    _anchor_seed(run_seed, epoch, 0))

    def score_value(tape: Tape, arrays, fam) -> Value:
        if is_pgnn:
            emb = pgnn_forward(tape, fg, dm, fam,
                               PGNNParams.from_list(list(arrays)), model_cfg)
            return emb.z
        return gcn_forward(tape, fg, list(arrays), model_cfg.layers)

    def evaluate_auc(arrays, fam, pos, neg) -> float:
        tape = Tape()
        z = score_value(tape, arrays, fam)
        scores, labels = _score_pairs(z.data, pos, neg)
        return roc_auc(scores, labels)

    fam0 = draw_family(0)
    fixed_fam = fam0 if (is_pgnn and not model_cfg.resample_anchors) else None
    state = None
    best_auc = -math.inf
    best_epoch = 0
    best_arrays = [a.copy() for a in plist]
    best_fam = fam0
    log: list[EpochRecord] = []
    last_loss = math.nan

    for epoch in range(1, tc.epochs + 1):
        fam = fixed_fam if fixed_fam is not None else draw_family(epoch)
        tape = Tape()
        leaves = [tape.leaf(p) for p in plist]
        z = score_value(tape, plist, fam)
        loss = epoch_loss(tape, z, split.train_pos, split.train_neg)
        last_loss = float(loss.data[0, 0])
        table = tape.backward(loss)
        grads = [table[leaf.id] for leaf in leaves]
        del tape, table, z, loss, leaves
        plist, state = adam_step(plist, grads, state,
                                 lr=tc.lr, beta1=tc.beta1, beta2=tc.beta2, eps=tc.eps)
        val_auc = evaluate_auc(plist, fam, split.val_pos, split.val_neg)
        log.append(EpochRecord(loss=last_loss, val_auc=val_auc))
        if val_auc > best_auc:
            best_auc = val_auc
            best_epoch = epoch
            best_arrays = [a.copy() for a in plist]
            best_fam = fam

    if tc.epochs == 0:
        best_auc = evaluate_auc(plist, fam0, split.val_pos, split.val_neg)
        tape = Tape()
        z = score_value(tape, plist, fam0)
        last_loss = float(epoch_loss(tape, z, split.train_pos,
                                     split.train_neg).data[0, 0])
        del tape, z

    test_auc = evaluate_auc(best_arrays, best_fam, split.test_pos, split.test_neg)
    return RepeatResult(repeat=repeat_idx, test_auc=test_auc, val_auc=best_auc,
                        best_epoch=best_epoch, train_loss=last_loss,
                        epoch_log=tuple(log), snapshot=tuple(best_arrays),
                        anchor_seed=None if best_fam is None else best_fam.seed)


def run_experiment(g: Graph, split: EdgeSplit, model_cfg, train_cfg: TrainConfig,
                   dataset: str = "graph") -> Metrics:
    """Train and evaluate ``repeats`` times; deterministic given the seeds."""
    if not isinstance(model_cfg, (PGNNConfig, GCNConfig)):
        raise TypeError(f"unsupported model config {type(model_cfg).__name__}")
    fg = _forward_graph(g, split, train_cfg.setting)
    dm = make_distance_input(fg, model_cfg) if isinstance(model_cfg, PGNNConfig) else None
    per = []
    for r in range(train_cfg.repeats):
        per.append(_run_single(fg, dm, split, model_cfg, train_cfg,
                               train_cfg.seed + r, r))
    aucs = np.array([p.test_auc for p in per])
    return Metrics(task=split.task, dataset=dataset, model=model_label(model_cfg),
                   setting=train_cfg.setting, repeats=train_cfg.repeats,
                   per_repeat=tuple(per), mean_auc=float(aucs.mean()),
                   std_auc=float(aucs.std()))
