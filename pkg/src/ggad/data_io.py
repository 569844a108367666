"""Dataset directories, the synthetic SBM anomaly benchmark and train/test splits.

A dataset directory holds four UTF-8 files::

    meta.json      {"name": ..., "num_nodes": N, "num_features": F}
    edges.tsv      one "u<TAB>v" pair per line, 0-indexed, either direction
    features.csv   N lines of F comma-separated decimals
    labels.csv     "node_id,label" per line, label 1 = anomaly

Features are written with 17 significant digits so a save/load round trip is
exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CountMismatch,
    InsufficientNodes,
    InvalidParams,
    MissingFile,
    ParseError,
)
from .graph import Graph, build_graph

META_FILE = "meta.json"
EDGE_FILE = "edges.tsv"
FEATURE_FILE = "features.csv"
LABEL_FILE = "labels.csv"


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


# -- dataset directories ---------------------------------------------------------

def save_dataset(graph: Graph, path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = {"name": graph.name, "num_nodes": graph.num_nodes, "num_features": graph.num_features}
    (path / META_FILE).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n",
                                  encoding="utf-8")
    edges = graph.edge_array()
    with open(path / EDGE_FILE, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{u}\t{v}\n" for u, v in edges.tolist())
    with open(path / FEATURE_FILE, "w", encoding="utf-8", newline="\n") as fh:
        for row in graph.features:
            fh.write(",".join(format(float(x), ".17g") for x in row) + "\n")
    labels = graph.labels if graph.labels is not None else np.zeros(graph.num_nodes, np.int8)
    with open(path / LABEL_FILE, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{i},{int(y)}\n" for i, y in enumerate(labels.tolist()))
    return path


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for no, line in enumerate(fh, start=1):
            line = line.strip()
            if line:
                yield no, line


def load_dataset(path) -> Graph:
    path = Path(path)
    for name in (META_FILE, EDGE_FILE, FEATURE_FILE, LABEL_FILE):
        if not (path / name).is_file():
            raise MissingFile(f"{path / name} not found")

    try:
        meta = json.loads((path / META_FILE).read_text(encoding="utf-8"))
        n, f = int(meta["num_nodes"]), int(meta["num_features"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(path / META_FILE, 1, f"bad meta: {exc}") from None

    edges = []
    for no, line in _lines(path / EDGE_FILE):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(path / EDGE_FILE, no, f"expected 'u<TAB>v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(path / EDGE_FILE, no, f"non-integer endpoint in {line!r}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise ParseError(path / EDGE_FILE, no, f"endpoint outside [0, {n})")
        edges.append((u, v))

    rows = []
    for no, line in _lines(path / FEATURE_FILE):
        try:
            row = [float(x) for x in line.split(",")]
        except ValueError:
            raise ParseError(path / FEATURE_FILE, no, "non-numeric feature") from None
        if len(row) != f:
            raise CountMismatch(f"{FEATURE_FILE}:{no} has {len(row)} columns, meta says {f}")
        rows.append(row)
    if len(rows) != n:
        raise CountMismatch(f"{FEATURE_FILE} has {len(rows)} rows, meta says {n}")

    labels = np.full(n, -1, dtype=np.int64)
    for no, line in _lines(path / LABEL_FILE):
        if no == 1 and line.replace(" ", "") == "node_id,label":
            continue
        parts = line.split(",")
        try:
            i, y = int(parts[0]), int(parts[1])
        except (ValueError, IndexError):
            raise ParseError(path / LABEL_FILE, no, f"expected 'node_id,label', got {line!r}") from None
        if not 0 <= i < n or y not in (0, 1):
            raise ParseError(path / LABEL_FILE, no, f"bad label row {line!r}")
        labels[i] = y
    if (labels < 0).any():
        raise CountMismatch(f"{LABEL_FILE} covers {(labels >= 0).sum()} of {n} nodes")

    x = np.array(rows, dtype=np.float64).reshape(n, f)
    return build_graph(np.array(edges, dtype=np.int64).reshape(-1, 2), x, labels,
                       name=str(meta.get("name", path.name)))


# -- synthetic benchmark -----------------------------------------------------------

@dataclass
class SynthParams:
    n_nodes: int = 2000
    n_blocks: int = 4
    p_in: float = 0.02
    p_out: float = 0.002
    anomaly_rate: float = 0.05
    feature_dim: int = 16
    clique_size: int = 10
    feature_noise: float = 1.0


def _triangle_pairs(idx: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map linear indices of the strict upper triangle (row-major) to (i, j)."""
    idx = idx.astype(np.int64)
    total = n * (n - 1) // 2
    i = n - 2 - np.floor(np.sqrt(-8.0 * idx + 4.0 * n * (n - 1) - 7) / 2.0 - 0.5).astype(np.int64)
    # float rounding guard
    row_start = lambda r: total - (n - r) * (n - r - 1) // 2  # noqa: E731
    i = np.where(row_start(i) > idx, i - 1, i)
    i = np.where(row_start(i + 1) <= idx, i + 1, i)
    j = idx - row_start(i) + i + 1
    return i, j


def _sample_pairs(rng, count: int, p: float) -> np.ndarray:
    if p <= 0 or count == 0:
        return np.zeros(0, dtype=np.int64)
    k = rng.binomial(count, p)
    return np.sort(rng.choice(count, size=k, replace=False))


def sbm_edges(rng, block_sizes, p_in: float, p_out: float) -> np.ndarray:
    """Undirected SBM edge list (u < v) with independent Bernoulli edges."""
    starts = np.concatenate([[0], np.cumsum(block_sizes)])
    out = []
    for a, size_a in enumerate(block_sizes):
        idx = _sample_pairs(rng, size_a * (size_a - 1) // 2, p_in)
        i, j = _triangle_pairs(idx, size_a)
        out.append(np.stack([i + starts[a], j + starts[a]], axis=1))
        for b in range(a + 1, len(block_sizes)):
            idx = _sample_pairs(rng, size_a * block_sizes[b], p_out)
            out.append(np.stack([idx // block_sizes[b] + starts[a],
                                 idx % block_sizes[b] + starts[b]], axis=1))
    return np.concatenate(out, axis=0) if out else np.zeros((0, 2), np.int64)


def synth_generate(n_nodes=2000, n_blocks=4, p_in=0.02, p_out=0.002, anomaly_rate=0.05,
                   feature_dim=16, rng=None, clique_size=10, feature_noise=1.0,
                   name="synthetic") -> Graph:
    """Stochastic block model with injected structural and contextual anomalies.

    Normal nodes draw features around their block's Gaussian mean. Half of the
    anomalies (rounded down) are structural: cliques of ``clique_size`` nodes
    drawn across blocks, each clique edge replacing one of the member's
    original edges where it has one to spare, so degrees stay close to normal
    and only homophily is broken. The remaining anomalies are contextual:
    features resampled around the mean of the block farthest from their own.
    Magnitudes therefore match normal nodes; only the neighbourhood
    agreement differs.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if n_blocks < 2 or n_nodes < 2 * n_blocks or feature_dim < 1:
        raise InvalidParams("need n_blocks >= 2, two nodes per block and feature_dim >= 1")
    if not (0 <= p_out < p_in <= 1):
        raise InvalidParams(f"need 0 <= p_out < p_in <= 1, got p_out={p_out}, p_in={p_in}")
    if not 0 < anomaly_rate < 0.5:
        raise InvalidParams(f"anomaly_rate must be in (0, 0.5), got {anomaly_rate}")
    if clique_size < 2:
        raise InvalidParams("clique_size must be >= 2")

    sizes = [len(c) for c in np.array_split(np.arange(n_nodes), n_blocks)]
    block = np.repeat(np.arange(n_blocks), sizes)
    edges = sbm_edges(rng, sizes, p_in, p_out)

    means = rng.normal(0.0, 1.0, size=(n_blocks, feature_dim))
    x = means[block] + rng.normal(0.0, feature_noise, size=(n_nodes, feature_dim))

    n_anom = _round_half_up(anomaly_rate * n_nodes)
    anomalies = rng.choice(n_nodes, size=n_anom, replace=False)
    n_struct = n_anom // 2
    structural, contextual = anomalies[:n_struct], anomalies[n_struct:]

    keep = np.ones(len(edges), dtype=bool)
    clique_edges = []
    for start in range(0, n_struct, clique_size):
        members = np.sort(structural[start:start + clique_size])
        iu, ju = np.triu_indices(members.size, 1)
        clique_edges.append(np.stack([members[iu], members[ju]], axis=1))
        for v in members:
            incident = np.flatnonzero(keep & ((edges[:, 0] == v) | (edges[:, 1] == v)))
            n_drop = min(members.size - 1, incident.size - 1)
            if n_drop > 0:
                keep[rng.choice(incident, size=n_drop, replace=False)] = False
    edges = np.concatenate([edges[keep]] + clique_edges, axis=0)

    gaps = np.linalg.norm(means[:, None, :] - means[None, :, :], axis=2)
    farthest = gaps.argmax(axis=1)
    x[contextual] = means[farthest[block[contextual]]] + rng.normal(
        0.0, feature_noise, size=(contextual.size, feature_dim))

    labels = np.zeros(n_nodes, dtype=np.int8)
    labels[anomalies] = 1
    return build_graph(edges, x, labels, name=name)


# -- splits ----------------------------------------------------------------------

@dataclass
class Split:
    labeled_normals: np.ndarray
    test_nodes: np.ndarray
    train_rate: float
    contamination_rate: float
    seed: int | None = None
    contaminants: np.ndarray | None = None  # anomalies hidden inside labeled_normals

    def to_json(self) -> str:
        doc = {
            "labeled_normals": self.labeled_normals.tolist(),
            "test_nodes": self.test_nodes.tolist(),
            "train_rate": self.train_rate,
            "contamination_rate": self.contamination_rate,
            "seed": self.seed,
            "contaminants": [] if self.contaminants is None else self.contaminants.tolist(),
        }
        return json.dumps(doc, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Split":
        doc = json.loads(text)
        return cls(
            labeled_normals=np.array(doc["labeled_normals"], dtype=np.int64),
            test_nodes=np.array(doc["test_nodes"], dtype=np.int64),
            train_rate=float(doc["train_rate"]),
            contamination_rate=float(doc["contamination_rate"]),
            seed=doc.get("seed"),
            contaminants=np.array(doc.get("contaminants", []), dtype=np.int64),
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Split":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def build_split(graph: Graph, train_rate: float, contamination_rate: float = 0.0,
                rng=None, seed=None) -> Split:
    """Labeled normals for training, everything else for testing.

    ``train_rate`` is a percentage of the true normal nodes. ``contamination_rate``
    is the fraction of the labeled set that is swapped for anomalies, which
    then sit among the labeled normals unannounced.
    """
    if graph.labels is None:
        raise InvalidParams("graph has no labels")
    if not 0 < train_rate <= 100:
        raise InvalidParams("train_rate must be a percentage in (0, 100]")
    if not 0 <= contamination_rate < 1:
        raise InvalidParams("contamination_rate must be in [0, 1)")
    if rng is None:
        rng = np.random.default_rng(seed)
    normals = np.flatnonzero(graph.labels == 0)
    anomalies = np.flatnonzero(graph.labels == 1)

    n_lab = _round_half_up(train_rate / 100.0 * normals.size)
    n_bad = _round_half_up(contamination_rate * n_lab)
    if n_lab < 1 or n_lab > normals.size:
        raise InsufficientNodes(f"cannot label {n_lab} of {normals.size} normal nodes")
    if n_bad > anomalies.size:
        raise InsufficientNodes(f"need {n_bad} contaminating anomalies, have {anomalies.size}")

    chosen = rng.choice(normals, size=n_lab, replace=False)
    bad = rng.choice(anomalies, size=n_bad, replace=False) if n_bad else np.zeros(0, np.int64)
    if n_bad:
        drop = rng.choice(n_lab, size=n_bad, replace=False)
        chosen = np.delete(chosen, drop)
    labeled = np.sort(np.concatenate([chosen, bad]).astype(np.int64))
    test = np.setdiff1d(np.arange(graph.num_nodes), labeled)
    return Split(labeled, test, float(train_rate), float(contamination_rate), seed,
                 np.sort(bad.astype(np.int64)))
