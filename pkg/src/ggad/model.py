"""Network pieces: two ReLU GCN layers, the ego-network outlier generator and
the one-class classifier head, plus parameter containers and JSON storage.

Row convention: node representations are rows, so a layer is ``X @ W + b``.
The generator weight ``w_gen`` acts on column vectors as in ``W h``, which in
row form is ``h @ w_gen.T``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import EmptyEgoNetwork, ShapeMismatch
from .linalg import glorot_init, spmm

PROB_CLAMP = 1e-7
PARAM_NAMES = ("w1", "b1", "w2", "b2", "w_gen", "w_cls", "b_cls")


@dataclass
class _TensorSet:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w_gen: np.ndarray
    w_cls: np.ndarray
    b_cls: np.ndarray

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]

    def as_dict(self) -> dict[str, np.ndarray]:
        return dict(self.items())

    def num_parameters(self) -> int:
        return sum(a.size for _, a in self.items())

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for _, a in self.items()])


@dataclass
class ModelParams(_TensorSet):
    """All learnable weights.

    ``w1`` (F, h1), ``b1`` (h1,), ``w2`` (h1, d), ``b2`` (d,), ``w_gen`` (d, d),
    ``w_cls`` (d, 1), ``b_cls`` (1,).
    """

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.w1.shape[0], self.w1.shape[1], self.w2.shape[1]

    def copy(self) -> "ModelParams":
        return ModelParams(**{k: v.copy() for k, v in self.items()})

    def validate(self) -> None:
        f, h1, d = self.dims
        want = {
            "w1": (f, h1), "b1": (h1,), "w2": (h1, d), "b2": (d,),
            "w_gen": (d, d), "w_cls": (d, 1), "b_cls": (1,),
        }
        for name, arr in self.items():
            if arr.shape != want[name]:
                raise ShapeMismatch(f"{name} has shape {arr.shape}, expected {want[name]}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")


@dataclass
class Gradients(_TensorSet):
    @classmethod
    def zeros_like(cls, params: ModelParams) -> "Gradients":
        return cls(**{k: np.zeros_like(v) for k, v in params.items()})


def init_params(rng: np.random.Generator, num_features: int, hidden: int, dim: int) -> ModelParams:
    """Glorot-uniform weights, zero biases."""
    return ModelParams(
        w1=glorot_init(rng, num_features, hidden),
        b1=np.zeros(hidden),
        w2=glorot_init(rng, hidden, dim),
        b2=np.zeros(dim),
        w_gen=glorot_init(rng, dim, dim),
        w_cls=glorot_init(rng, dim, 1),
        b_cls=np.zeros(1),
    )


@dataclass
class GcnCache:
    ax: np.ndarray   # A_hat @ X
    z1: np.ndarray
    a1: np.ndarray
    p1: np.ndarray   # A_hat @ a1
    z2: np.ndarray
    h: np.ndarray


def relu(x):
    return np.maximum(x, 0.0)


def gcn_forward(params: ModelParams, adj, x: np.ndarray) -> tuple[np.ndarray, GcnCache]:
    """``H = ReLU(A ReLU(A X W1 + b1) W2 + b2)``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.w1.shape[0]:
        raise ShapeMismatch(f"features {x.shape} do not match w1 {params.w1.shape}")
    ax = spmm(adj, x)
    z1 = ax @ params.w1 + params.b1
    a1 = relu(z1)
    p1 = spmm(adj, a1)
    z2 = p1 @ params.w2 + params.b2
    h = relu(z2)
    return h, GcnCache(ax=ax, z1=z1, a1=a1, p1=p1, z2=z2, h=h)


def ego_mean_matrix(egos, num_nodes: int, allow_empty: bool = False) -> sp.csr_matrix:
    """Sparse (S, N) averaging operator, row i = uniform weights over ego network i.

    With ``allow_empty`` an empty ego network gives an all-zero row.
    """
    rows, cols, vals = [], [], []
    for i, nbrs in enumerate(egos):
        nbrs = np.asarray(nbrs, dtype=np.int64)
        if nbrs.size == 0:
            if allow_empty:
                continue
            raise EmptyEgoNetwork(f"outlier {i} has an empty ego network")
        rows.append(np.full(nbrs.size, i))
        cols.append(nbrs)
        vals.append(np.full(nbrs.size, 1.0 / nbrs.size))
    if not rows:
        return sp.csr_matrix((len(egos), num_nodes))
    m = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(len(egos), num_nodes),
    )
    m.sort_indices()
    return m


@dataclass
class GeneratorCache:
    cols: np.ndarray        # nodes touched by any ego network
    mean_op: sp.csr_matrix  # (S, len(cols)) averaging restricted to ``cols``
    pre: np.ndarray         # H[cols] @ w_gen.T
    out: np.ndarray         # generated outlier rows


def ego_outliers(params: ModelParams, h: np.ndarray, mean_op: sp.csr_matrix):
    """Generator forward from a precomputed averaging operator."""
    cols = np.unique(mean_op.indices)
    sub = mean_op[:, cols].tocsr()
    pre = h[cols] @ params.w_gen.T
    out = np.asarray(sub @ relu(pre))
    return out, GeneratorCache(cols=cols, mean_op=sub, pre=pre, out=out)


def ego_outliers_backward(params: ModelParams, h: np.ndarray, cache: GeneratorCache,
                          grad_out: np.ndarray, grads: Gradients, grad_h: np.ndarray) -> None:
    """Accumulate gradients of the generator into ``grads.w_gen`` and ``grad_h``."""
    g_act = np.asarray(cache.mean_op.T @ grad_out)
    g_pre = np.where(cache.pre > 0, g_act, 0.0)
    grads.w_gen += g_pre.T @ h[cache.cols]
    grad_h[cache.cols] += g_pre @ params.w_gen


def generate_outliers(params: ModelParams, h: np.ndarray, anchors) -> np.ndarray:
    """Outlier representations from ``(anchor, ego network)`` pairs.

    Row ``i`` is the mean of ``ReLU(w_gen @ h_j)`` over the ego network of
    anchor ``i``.
    """
    egos = [nbrs for _, nbrs in anchors]
    out, _ = ego_outliers(params, h, ego_mean_matrix(egos, h.shape[0]))
    return out


def classifier_logits(params: ModelParams, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != params.w_cls.shape[0]:
        raise ShapeMismatch(f"rows {rows.shape} do not match classifier {params.w_cls.shape}")
    return (rows @ params.w_cls)[:, 0] + params.b_cls[0]


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def classify(params: ModelParams, rows: np.ndarray) -> np.ndarray:
    """Probability of being normal, clamped to ``[1e-7, 1 - 1e-7]``."""
    return np.clip(sigmoid(classifier_logits(params, rows)), PROB_CLAMP, 1.0 - PROB_CLAMP)


# -- serialization -----------------------------------------------------------

MODEL_FORMAT = "ggad-model"


def params_to_json(params: ModelParams, seed=None, config=None) -> str:
    f, h1, d = params.dims
    doc = {
        "format": MODEL_FORMAT,
        "version": 1,
        "dims": {"num_features": f, "hidden": h1, "dim": d},
        "seed": seed,
        "config": config or {},
        "params": {
            name: {"shape": list(arr.shape), "data": [float(v) for v in arr.ravel()]}
            for name, arr in params.items()
        },
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def params_from_json(text: str) -> tuple[ModelParams, dict]:
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not a ggad model file")
    tensors = {}
    for name in PARAM_NAMES:
        entry = doc["params"][name]
        tensors[name] = np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
    params = ModelParams(**tensors)
    params.validate()
    return params, doc


def save_params(path, params: ModelParams, seed=None, config=None) -> None:
    Path(path).write_text(params_to_json(params, seed=seed, config=config), encoding="utf-8")


def load_params(path) -> tuple[ModelParams, dict]:
    return params_from_json(Path(path).read_text(encoding="utf-8"))
