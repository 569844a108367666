"""Anomaly scoring and ranking metrics.

AUROC is the Mann-Whitney statistic with ties counted as half a win. AUPRC is
step-wise average precision over a ranking sorted by descending score, ties
broken by ascending node id.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateLabels, ShapeMismatch
from .graph import normalize_adjacency
from .model import classify, gcn_forward


@dataclass
class ScoreTable:
    node_ids: np.ndarray
    scores: np.ndarray
    labels: np.ndarray | None = None

    def __len__(self):
        return self.node_ids.size

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["node_id", "score", "label"])
            for i, (v, s) in enumerate(zip(self.node_ids.tolist(), self.scores.tolist())):
                lab = "" if self.labels is None else int(self.labels[i])
                w.writerow([v, repr(float(s)), lab])

    @classmethod
    def read_csv(cls, path) -> "ScoreTable":
        ids, scores, labels = [], [], []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                ids.append(int(row["node_id"]))
                scores.append(float(row["score"]))
                labels.append(row["label"])
        lab = None if any(x == "" for x in labels) else np.array(labels, dtype=np.int8)
        return cls(np.array(ids, dtype=np.int64), np.array(scores), lab)


@dataclass
class MetricsReport:
    auroc: float
    auprc: float
    positives: int
    negatives: int

    def line(self) -> str:
        return f"AUROC={self.auroc:.6f} AUPRC={self.auprc:.6f}"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def score_nodes(params, h, nodes, labels=None) -> ScoreTable:
    """Anomaly score ``1 - eta(h_v)`` for each node in ``nodes``."""
    nodes = np.asarray(nodes, dtype=np.int64)
    scores = 1.0 - classify(params, h[nodes])
    lab = None if labels is None else np.asarray(labels)[nodes]
    return ScoreTable(nodes, scores, lab)


def score_split(graph, split, params, adj=None) -> ScoreTable:
    """Score the unlabeled test nodes with representations from the whole graph."""
    adj = adj or normalize_adjacency(graph)
    h, _ = gcn_forward(params, adj, graph.features)
    return score_nodes(params, h, np.sort(split.test_nodes), graph.labels)


def _check(scores, labels, need_negative=True):
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel().astype(bool)
    if s.shape != y.shape:
        raise ShapeMismatch(f"{s.size} scores vs {y.size} labels")
    if not y.any():
        raise DegenerateLabels("no positive (anomalous) labels")
    if need_negative and y.all():
        raise DegenerateLabels("no negative (normal) labels")
    return s, y


def auroc(scores, labels) -> float:
    s, y = _check(scores, labels)
    ranks = rankdata(s)  # average ranks: ties get half credit
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auprc(scores, labels, node_ids=None) -> float:
    s, y = _check(scores, labels, need_negative=False)
    ids = np.arange(s.size) if node_ids is None else np.asarray(node_ids)
    order = np.lexsort((ids, -s))
    hits = y[order]
    tp = np.cumsum(hits)
    precision = tp / np.arange(1, s.size + 1)
    return float(precision[hits].mean())


def evaluate(table: ScoreTable) -> MetricsReport:
    if table.labels is None:
        raise DegenerateLabels("score table has no labels")
    y = np.asarray(table.labels).astype(bool)
    return MetricsReport(
        auroc=auroc(table.scores, y),
        auprc=auprc(table.scores, y, table.node_ids),
        positives=int(y.sum()),
        negatives=int((~y).sum()),
    )
