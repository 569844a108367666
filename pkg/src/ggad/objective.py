"""The full training objective ``l_bce + beta * l_ala + lambda * l_ec`` and its
hand-derived gradient.

A :class:`TrainView` is the local-indexed problem one optimisation step sees:
the whole graph in full-batch mode, or one closed subgraph in mini-batch mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import StaleCache
from .graph import Graph, NormalizedAdjacency
from .linalg import row_normalize, row_normalize_backward
from .losses import LossBundle, node_affinities, outlier_affinities, total_loss
from .model import (
    PROB_CLAMP,
    GcnCache,
    Gradients,
    ModelParams,
    classifier_logits,
    ego_mean_matrix,
    gcn_forward,
    sigmoid,
)
from .outliers import OutlierCache, make_outliers, outliers_backward


@dataclass
class TrainView:
    """Everything one forward/backward pass needs, in local node indices.

    ``node_ids[i]`` is the global id of local node ``i``. ``positives`` are the
    rows labeled normal (y = 1); ``anchors`` seed the outlier rows in order.
    """

    adj: NormalizedAdjacency
    x: np.ndarray
    a01: sp.csr_matrix   # 0/1 adjacency without self-loops
    degrees: np.ndarray
    positives: np.ndarray
    anchors: np.ndarray
    ego_op: sp.csr_matrix
    eps: np.ndarray
    strategy: str
    noise: np.ndarray | None = None
    node_ids: np.ndarray | None = None

    @property
    def num_nodes(self) -> int:
        return self.x.shape[0]


def make_view(graph: Graph, adj: NormalizedAdjacency, positives, anchors, eps, strategy,
              noise=None, nodes=None) -> TrainView:
    """Build a view over ``graph`` or over the node subset ``nodes`` (sorted ids).

    ``positives`` and ``anchors`` are global ids; anchors' ego networks must lie
    inside ``nodes``.
    """
    anchors = np.asarray(anchors, dtype=np.int64)
    positives = np.asarray(positives, dtype=np.int64)
    if nodes is None:
        nodes = np.arange(graph.num_nodes, dtype=np.int64)
        sub_adj = adj
        a01 = graph.adjacency_matrix()
        x = graph.features
    else:
        nodes = np.asarray(nodes, dtype=np.int64)
        sub_adj = adj.restrict(nodes)
        a01 = graph.adjacency_matrix()[nodes][:, nodes].tocsr()
        a01.sort_indices()
        x = graph.features[nodes]
    local = np.full(graph.num_nodes, -1, dtype=np.int64)
    local[nodes] = np.arange(nodes.size)
    if (local[anchors] < 0).any() or (local[positives] < 0).any():
        raise ValueError("labeled nodes or anchors fall outside the view")

    egos = []
    for a in anchors:
        nb = local[graph.neighbors(a)]
        if (nb < 0).any():
            raise ValueError(f"ego network of anchor {a} is not inside the view")
        egos.append(nb)
    return TrainView(
        adj=sub_adj,
        x=x,
        a01=a01,
        degrees=sub_adj.degrees,
        positives=np.sort(local[positives]),
        anchors=local[anchors],
        ego_op=ego_mean_matrix(egos, nodes.size, allow_empty=True),
        eps=np.asarray(eps, dtype=np.float64),
        strategy=strategy,
        noise=noise,
        node_ids=nodes,
    )


@dataclass
class ForwardCache:
    params: ModelParams
    gcn: GcnCache
    outliers: np.ndarray
    out_cache: OutlierCache
    unit_h: np.ndarray
    norms_h: np.ndarray
    unit_o: np.ndarray
    norms_o: np.ndarray
    tau_nodes: np.ndarray
    tau_out: np.ndarray
    margin: float
    diff: np.ndarray     # outliers - (anchor rows + eps)
    rows: np.ndarray     # classifier inputs: positives then outliers
    labels: np.ndarray
    probs_raw: np.ndarray
    probs: np.ndarray
    bundle: LossBundle


def forward(params: ModelParams, view: TrainView, config) -> ForwardCache:
    h, gcache = gcn_forward(params, view.adj, view.x)
    mean_op = view.ego_op if view.strategy in ("ggad", "nlo") else None
    out, ocache = make_outliers(view.strategy, params, h, view.anchors, mean_op=mean_op,
                                noise=view.noise)

    unit_h, norms_h = row_normalize(h)
    unit_o, norms_o = row_normalize(out)
    tau_nodes = node_affinities(unit_h, view.a01, view.degrees)
    tau_out = outlier_affinities(unit_o, unit_h, view.ego_op)
    tau_n = float(np.mean(tau_nodes[view.positives]))
    tau_o = float(np.mean(tau_out))
    margin = config.alpha - (tau_n - tau_o)
    l_ala = max(0.0, margin)

    diff = out - (h[view.anchors] + view.eps)
    l_ec = float(np.einsum("ij,ij->", diff, diff) / out.shape[0])

    rows = np.concatenate([h[view.positives], out], axis=0)
    labels = np.concatenate([np.ones(view.positives.size), np.zeros(out.shape[0])])
    probs_raw = sigmoid(classifier_logits(params, rows))
    probs = np.clip(probs_raw, PROB_CLAMP, 1.0 - PROB_CLAMP)
    l_bce = float(-np.mean(labels * np.log(probs) + (1.0 - labels) * np.log(1.0 - probs)))

    bundle = total_loss(
        l_bce,
        0.0 if config.disable_ala else l_ala,
        0.0 if config.disable_ec else l_ec,
        config.beta_eff,
        config.lam_eff,
        tau_normal=tau_n,
        tau_outlier=tau_o,
    )
    return ForwardCache(
        params=params, gcn=gcache, outliers=out, out_cache=ocache,
        unit_h=unit_h, norms_h=norms_h, unit_o=unit_o, norms_o=norms_o,
        tau_nodes=tau_nodes, tau_out=tau_out, margin=margin, diff=diff,
        rows=rows, labels=labels, probs_raw=probs_raw, probs=probs, bundle=bundle,
    )


def loss_value(params: ModelParams, view: TrainView, config) -> float:
    return forward(params, view, config).bundle.l_total


def backward(params: ModelParams, cache: ForwardCache, view: TrainView, config) -> Gradients:
    """Exact gradient of the total loss w.r.t. every parameter tensor.

    ReLU, the hinge and the probability clamp use a zero subgradient at their
    kinks.
    """
    if cache.params is not params:
        raise StaleCache("cache was produced with a different parameter set")
    grads = Gradients.zeros_like(params)
    h = cache.gcn.h
    n_pos = view.positives.size
    n_out = cache.outliers.shape[0]
    beta, lam = config.beta_eff, config.lam_eff

    # classifier: d l_bce / d logit = (p - y) / n, zero where the clamp is active
    inside = (cache.probs_raw > PROB_CLAMP) & (cache.probs_raw < 1.0 - PROB_CLAMP)
    g_logit = np.where(inside, (cache.probs - cache.labels) / cache.labels.size, 0.0)
    grads.w_cls = (cache.rows.T @ g_logit)[:, None]
    grads.b_cls = np.array([g_logit.sum()])
    g_rows = np.outer(g_logit, params.w_cls[:, 0])

    grad_h = np.zeros_like(h)
    grad_h[view.positives] += g_rows[:n_pos]
    grad_out = g_rows[n_pos:].copy()

    if lam > 0:
        g = (2.0 * lam / n_out) * cache.diff
        grad_out += g
        np.add.at(grad_h, view.anchors, -g)

    if beta > 0 and cache.margin > 0:
        # d l_ala / d tau_normal = -beta, d l_ala / d tau_outlier = +beta
        deg = view.degrees
        w = np.zeros(view.num_nodes)
        pos = view.positives[deg[view.positives] > 0]
        w[pos] = -beta / (n_pos * deg[pos])
        # tau_normal = sum_v w_v u_v . (A U)_v with A symmetric
        g_unit_h = (w[:, None] * np.asarray(view.a01 @ cache.unit_h)
                    + np.asarray(view.a01 @ (w[:, None] * cache.unit_h)))

        g_tau_o = beta / n_out
        g_unit_o = g_tau_o * np.asarray(view.ego_op @ cache.unit_h)
        g_unit_h += g_tau_o * np.asarray(view.ego_op.T @ cache.unit_o)

        grad_h += row_normalize_backward(g_unit_h, cache.unit_h, cache.norms_h)
        grad_out += row_normalize_backward(g_unit_o, cache.unit_o, cache.norms_o)

    outliers_backward(params, h, cache.out_cache, grad_out, grads, grad_h)

    gc = cache.gcn
    at = view.adj.matrix  # symmetric
    g_z2 = np.where(gc.z2 > 0, grad_h, 0.0)
    grads.b2 = g_z2.sum(axis=0)
    grads.w2 = gc.p1.T @ g_z2
    g_a1 = np.asarray(at @ (g_z2 @ params.w2.T))
    g_z1 = np.where(gc.z1 > 0, g_a1, 0.0)
    grads.b1 = g_z1.sum(axis=0)
    grads.w1 = gc.ax.T @ g_z1
    return grads
