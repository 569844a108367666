"""Anchor sampling and the outlier generators.

``ggad`` is the learnable ego-network generator. The other four strategies
are the ablation baselines:

random
    anchors' own representations, relabeled as outliers
nlo
    plain neighbour mean, no learnable transform
noise
    standard-normal rows fixed at start, detached from the network
gaussianp
    anchor representation plus fixed Gaussian noise, detached
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import EmptyEgoNetwork, NoEligibleAnchors
from .model import ego_mean_matrix, ego_outliers, ego_outliers_backward

STRATEGIES = ("ggad", "random", "nlo", "noise", "gaussianp")
LEARNABLE = ("ggad",)
DETACHED = ("noise", "gaussianp")


def num_outliers(num_labeled: int, s_ratio: float) -> int:
    """``round(s_ratio * |V_l|)`` (half up), at least 1."""
    return max(1, int(math.floor(s_ratio * num_labeled + 0.5)))


def select_anchors(split, graph, s_ratio: float, rng: np.random.Generator,
                   require_degree: bool = True) -> np.ndarray:
    """Sample distinct labeled normals to seed outliers, uniformly without replacement."""
    labeled = np.asarray(getattr(split, "labeled_normals", split), dtype=np.int64)
    labeled = np.unique(labeled)
    eligible = labeled[graph.degrees[labeled] > 0] if require_degree else labeled
    if eligible.size == 0:
        raise NoEligibleAnchors("every labeled normal node is isolated")
    s = min(num_outliers(labeled.size, s_ratio), eligible.size)
    return rng.choice(eligible, size=s, replace=False).astype(np.int64)


@dataclass
class OutlierSet:
    """Anchors plus the fixed random pieces a strategy needs."""

    anchors: np.ndarray
    strategy: str
    eps: np.ndarray                 # (S, d) closeness target offset
    noise: np.ndarray | None = None  # (S, d) for noise/gaussianp

    @property
    def size(self) -> int:
        return self.anchors.size


def sample_strategy_noise(strategy: str, rng: np.random.Generator, s: int, d: int,
                          sigma_p: float = 0.1) -> np.ndarray | None:
    if strategy == "noise":
        return rng.standard_normal((s, d))
    if strategy == "gaussianp":
        if sigma_p < 0:
            raise ValueError("sigma_p must be >= 0")
        return rng.normal(0.0, sigma_p, size=(s, d)) if sigma_p > 0 else np.zeros((s, d))
    return None


@dataclass
class OutlierCache:
    strategy: str
    anchors: np.ndarray
    mean_op: sp.csr_matrix
    gen: object = None


def make_outliers(strategy, params, h, anchors, mean_op=None, noise=None, rng=None,
                  sigma_p: float = 0.1):
    """Outlier representations for one forward pass.

    Parameters
    ----------
    anchors : array of int
        Row indices of ``h`` that seed each outlier.
    mean_op : sparse (S, N), optional
        Ego-network averaging operator. Required for ``ggad`` and ``nlo``.
    noise : ndarray, optional
        Fixed noise for ``noise``/``gaussianp``; sampled from ``rng`` if absent.

    Returns
    -------
    (ndarray, OutlierCache)
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown outlier strategy {strategy!r}")
    anchors = np.asarray(anchors, dtype=np.int64)
    s, d = anchors.size, h.shape[1]
    cache = OutlierCache(strategy=strategy, anchors=anchors, mean_op=mean_op)

    if strategy in ("ggad", "nlo"):
        if mean_op is None:
            raise ValueError(f"strategy {strategy!r} needs the ego-network operator")
        if np.any(np.diff(mean_op.indptr) == 0):
            raise EmptyEgoNetwork("an anchor has no neighbours")
    if strategy in DETACHED and noise is None:
        noise = sample_strategy_noise(strategy, rng, s, d, sigma_p)

    if strategy == "ggad":
        out, cache.gen = ego_outliers(params, h, mean_op)
    elif strategy == "nlo":
        out = np.asarray(mean_op @ h)
    elif strategy == "random":
        out = h[anchors].copy()
    elif strategy == "noise":
        out = np.array(noise, dtype=np.float64)
    else:
        out = h[anchors] + noise
    return out, cache


def make_outliers_from_graph(strategy, params, h, graph, anchors, **kw):
    """Convenience wrapper that builds the ego-network operator from ``graph``."""
    anchors = np.asarray(anchors, dtype=np.int64)
    mean_op = None
    if strategy in ("ggad", "nlo"):
        mean_op = ego_mean_matrix([graph.neighbors(a) for a in anchors], graph.num_nodes)
    out, _ = make_outliers(strategy, params, h, anchors, mean_op=mean_op, **kw)
    return out


def outliers_backward(params, h, cache: OutlierCache, grad_out, grads, grad_h) -> None:
    """Route the gradient w.r.t. outlier rows back into ``grads``/``grad_h``."""
    if cache.strategy == "ggad":
        ego_outliers_backward(params, h, cache.gen, grad_out, grads, grad_h)
    elif cache.strategy == "nlo":
        grad_h += np.asarray(cache.mean_op.T @ grad_out)
    elif cache.strategy == "random":
        np.add.at(grad_h, cache.anchors, grad_out)
    # noise and gaussianp rows are detached
