"""Adam, full-batch training and mini-batch training over 2-hop-closed subgraphs."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .config import AUTO_BATCH_SIZE, TrainConfig
from .errors import BatchTooSmall, NoEligibleAnchors, NonFiniteLoss, ShapeMismatch
from .graph import Graph, NormalizedAdjacency, khop_closure, normalize_adjacency
from .linalg import gaussian, spawn_rngs
from .losses import LossBundle
from .model import ModelParams, init_params
from .objective import TrainView, backward, forward, make_view
from .outliers import OutlierSet, num_outliers, sample_strategy_noise, select_anchors

log = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "AdamState":
        return cls(
            m={k: np.zeros_like(a) for k, a in params.items()},
            v={k: np.zeros_like(a) for k, a in params.items()},
        )


def adam_step(params: ModelParams, grads, state: AdamState, lr: float):
    """One bias-corrected Adam update. Returns new params; ``state`` is updated in place."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - ADAM_BETA1 ** t
    bc2 = 1.0 - ADAM_BETA2 ** t
    new = {}
    for name, p in params.items():
        g = getattr(grads, name)
        if g.shape != p.shape:
            raise ShapeMismatch(f"gradient for {name} has shape {g.shape}, expected {p.shape}")
        m = state.m[name] = ADAM_BETA1 * state.m[name] + (1.0 - ADAM_BETA1) * g
        v = state.v[name] = ADAM_BETA2 * state.v[name] + (1.0 - ADAM_BETA2) * (g * g)
        new[name] = p - lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)
    return ModelParams(**new), state


# -- shared setup --------------------------------------------------------------

def _labeled(split) -> np.ndarray:
    return np.unique(np.asarray(getattr(split, "labeled_normals", split), dtype=np.int64))


@dataclass
class TrainSetup:
    params: ModelParams
    outliers: OutlierSet
    positives: np.ndarray
    batch_rng: np.random.Generator


def prepare(graph: Graph, split, config: TrainConfig, min_outliers: int = 1) -> TrainSetup:
    """Seeded initialisation shared by both training paths.

    Separate random streams feed weight init, anchor sampling, noise and batch
    shuffling, so the full-batch and single-batch paths see identical draws.
    """
    init_rng, anchor_rng, noise_rng, batch_rng = spawn_rngs(config.seed, 4)
    params = init_params(init_rng, graph.num_features, config.hidden, config.dim)
    labeled = _labeled(split)
    ratio = config.s_ratio
    if min_outliers > num_outliers(labeled.size, ratio):
        ratio = min(1.0, min_outliers / labeled.size)
    anchors = select_anchors(labeled, graph, ratio, anchor_rng,
                             require_degree=config.outlier_strategy != "noise")
    s, d = anchors.size, config.dim
    eps = gaussian(noise_rng, config.eps_mean, config.eps_std, (s, d))
    noise = sample_strategy_noise(config.outlier_strategy, noise_rng, s, d, config.sigma_p)
    positives = labeled
    if config.outlier_strategy == "random":
        positives = np.setdiff1d(labeled, anchors)
    return TrainSetup(
        params=params,
        outliers=OutlierSet(anchors=anchors, strategy=config.outlier_strategy, eps=eps, noise=noise),
        positives=positives,
        batch_rng=batch_rng,
    )


def _step(params, state, view, config, epoch):
    cache = forward(params, view, config)
    if not math.isfinite(cache.bundle.l_total):
        raise NonFiniteLoss(epoch)
    grads = backward(params, cache, view, config)
    params, state = adam_step(params, grads, state, config.lr)
    return params, state, cache.bundle


# -- full batch ------------------------------------------------------------------

def train_full_batch(graph: Graph, split, config: TrainConfig,
                     adj: NormalizedAdjacency | None = None):
    """Train on the whole graph, one Adam step per epoch.

    Returns
    -------
    params : ModelParams
    history : list of LossBundle
        Losses of each epoch, evaluated before that epoch's update.
    """
    adj = adj or normalize_adjacency(graph)
    setup = prepare(graph, split, config)
    o = setup.outliers
    view = make_view(graph, adj, setup.positives, o.anchors, o.eps, o.strategy, noise=o.noise)
    params, state = setup.params, AdamState.zeros_like(setup.params)
    history: list[LossBundle] = []
    for epoch in range(config.epochs):
        params, state, bundle = _step(params, state, view, config, epoch)
        history.append(bundle)
        if epoch % 50 == 0 or epoch == config.epochs - 1:
            log.debug("epoch %d %s", epoch, bundle)
    return params, history


# -- mini batch --------------------------------------------------------------------

@dataclass
class MiniBatch:
    train_nodes: np.ndarray   # labeled normals assigned to this batch (global ids)
    anchor_pos: np.ndarray    # positions into the global anchor array
    nodes: np.ndarray         # closed node set, sorted global ids
    edges: np.ndarray         # induced undirected edges (global ids)
    adj: NormalizedAdjacency  # full-graph weights restricted to ``nodes``


@dataclass
class MiniBatchPlan:
    batches: list[MiniBatch] = field(default_factory=list)
    hops: int = 2

    @property
    def num_batches(self) -> int:
        return len(self.batches)


def num_batches(num_train: int, batch_size: int) -> int:
    return max(1, math.ceil(num_train / batch_size))


def plan_minibatches(graph: Graph, split, anchors, batch_size: int, rng: np.random.Generator,
                     adj: NormalizedAdjacency | None = None, hops: int = 2) -> MiniBatchPlan:
    """Partition the labeled normals into batches and close each over ``hops`` hops.

    Anchors are shuffled and dealt round-robin first so every batch holds
    ``S/z`` of them (the first ``S mod z`` batches get one extra); the
    remaining labeled normals are shuffled and spread to even out batch sizes.
    """
    if batch_size < 2:
        raise BatchTooSmall(f"batch_size must be >= 2, got {batch_size}")
    adj = adj or normalize_adjacency(graph)
    train = _labeled(split)
    anchors = np.asarray(anchors, dtype=np.int64)
    z = num_batches(train.size, batch_size)
    if anchors.size < z:
        raise NoEligibleAnchors(f"{anchors.size} anchors cannot cover {z} batches")
    if not np.isin(anchors, train).all():
        raise ValueError("anchors must be labeled normal nodes")

    anchor_order = rng.permutation(anchors.size) if z > 1 else np.arange(anchors.size)
    rest = np.setdiff1d(train, anchors)
    if z > 1:
        rest = rest[rng.permutation(rest.size)]
    rest_chunks = np.array_split(rest, z)[::-1]

    plan = MiniBatchPlan(hops=hops)
    for b in range(z):
        pos = np.sort(anchor_order[b::z])
        members = np.sort(np.concatenate([anchors[pos], rest_chunks[b]]))
        nodes, edges = khop_closure(graph, members, hops)
        plan.batches.append(MiniBatch(
            train_nodes=members, anchor_pos=pos, nodes=nodes, edges=edges,
            adj=adj.restrict(nodes),
        ))
    return plan


def batch_views(graph: Graph, adj: NormalizedAdjacency, plan: MiniBatchPlan,
                setup: TrainSetup) -> list[TrainView]:
    o = setup.outliers
    views = []
    for b in plan.batches:
        anchors = o.anchors[b.anchor_pos]
        positives = np.intersect1d(b.train_nodes, setup.positives)
        noise = None if o.noise is None else o.noise[b.anchor_pos]
        views.append(make_view(graph, adj, positives, anchors, o.eps[b.anchor_pos],
                               o.strategy, noise=noise, nodes=b.nodes))
    return views


def _mean_bundle(bundles: list[LossBundle]) -> LossBundle:
    if len(bundles) == 1:
        return bundles[0]
    keys = bundles[0].as_dict().keys()
    return LossBundle(**{k: float(np.mean([getattr(b, k) for b in bundles])) for k in keys})


def train_minibatch(graph: Graph, split, config: TrainConfig,
                    adj: NormalizedAdjacency | None = None, hops: int = 2):
    """Mini-batch training: one Adam step per batch, batch order reshuffled each epoch.

    The per-epoch history entry averages the batch losses.
    """
    adj = adj or normalize_adjacency(graph)
    batch_size = config.batch_size or AUTO_BATCH_SIZE
    z = num_batches(_labeled(split).size, batch_size)
    setup = prepare(graph, split, config, min_outliers=z)
    plan = plan_minibatches(graph, split, setup.outliers.anchors, batch_size,
                            setup.batch_rng, adj=adj, hops=hops)
    views = batch_views(graph, adj, plan, setup)

    params, state = setup.params, AdamState.zeros_like(setup.params)
    history: list[LossBundle] = []
    for epoch in range(config.epochs):
        order = setup.batch_rng.permutation(len(views)) if len(views) > 1 else [0]
        bundles = []
        for i in order:
            params, state, bundle = _step(params, state, views[i], config, epoch)
            bundles.append(bundle)
        history.append(_mean_bundle(bundles))
    return params, history


def uses_minibatch(graph: Graph, config: TrainConfig) -> bool:
    return config.batch_size is not None or graph.num_nodes > config.minibatch_threshold


def train(graph: Graph, split, config: TrainConfig, adj: NormalizedAdjacency | None = None):
    """Full batch by default; mini-batch when a batch size is set or the graph is huge."""
    if uses_minibatch(graph, config):
        return train_minibatch(graph, split, config, adj=adj)
    return train_full_batch(graph, split, config, adj=adj)
