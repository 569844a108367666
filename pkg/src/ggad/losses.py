"""Training losses: local affinity, the affinity margin, egocentric closeness
and the one-class BCE, combined into a :class:`LossBundle`.

The vectorized helpers work per edge, so affinity costs O(m d) rather than
comparing every pair of nodes.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import EmptySet, ShapeMismatch
from .linalg import cosine_sim, row_normalize

LOG_FIELDS = ("epoch", "l_bce", "l_ala", "l_ec", "l_total", "tau_normal", "tau_outlier")


@dataclass
class LossBundle:
    l_bce: float
    l_ala: float
    l_ec: float
    l_total: float
    tau_normal: float
    tau_outlier: float

    def as_dict(self):
        return asdict(self)


# -- single node / set affinity (reference path) -----------------------------

def local_affinity(graph, h, v, rep=None) -> float:
    """Mean cosine similarity between node ``v`` and its neighbours.

    With ``rep`` given, that vector stands in for ``h[v]`` while the
    neighbourhood stays the one of ``v``; this is how a generated outlier
    is scored against its anchor's ego network. Isolated nodes score 0.
    """
    nbrs = graph.neighbors(int(v))
    if nbrs.size == 0:
        return 0.0
    hv = h[int(v)] if rep is None else rep
    return float(np.mean([cosine_sim(hv, h[j]) for j in nbrs]))


def set_affinity(graph, h, nodes, reps=None) -> float:
    """Average :func:`local_affinity` over ``nodes`` (optionally with stand-in rows)."""
    nodes = list(nodes)
    if not nodes:
        raise EmptySet("affinity of an empty set is undefined")
    if reps is None:
        return float(np.mean([local_affinity(graph, h, v) for v in nodes]))
    return float(np.mean([local_affinity(graph, h, v, rep=r) for v, r in zip(nodes, reps)]))


# -- vectorized path used in training ----------------------------------------

def node_affinities(unit_h, adjacency, degrees) -> np.ndarray:
    """Per-node affinity from unit-normalized rows and the 0/1 adjacency.

    ``sum_j cos(h_v, h_j) = u_v . (A U)_v``, one sparse product over the edges.
    """
    sums = np.einsum("ij,ij->i", unit_h, np.asarray(adjacency @ unit_h))
    return np.where(degrees > 0, sums / np.maximum(degrees, 1), 0.0)


def outlier_affinities(unit_out, unit_h, mean_op) -> np.ndarray:
    """Affinity of each outlier row to the ego network its averaging row covers."""
    return np.einsum("ij,ij->i", unit_out, np.asarray(mean_op @ unit_h))


def affinity_vector(h, adjacency, degrees):
    unit, _ = row_normalize(h)
    return node_affinities(unit, adjacency, degrees)


# -- losses ------------------------------------------------------------------

def ala_loss(tau_normal: float, tau_outlier: float, alpha: float) -> float:
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return max(0.0, alpha - (tau_normal - tau_outlier))


def ec_loss(h_anchor, h_hat, eps) -> float:
    h_anchor, h_hat, eps = (np.asarray(a, dtype=np.float64) for a in (h_anchor, h_hat, eps))
    if not (h_anchor.shape == h_hat.shape == eps.shape) or h_hat.ndim != 2:
        raise ShapeMismatch(
            f"shapes differ: anchors {h_anchor.shape}, outliers {h_hat.shape}, noise {eps.shape}"
        )
    diff = h_hat - (h_anchor + eps)
    return float(np.einsum("ij,ij->", diff, diff) / h_hat.shape[0])


def bce_loss(probs, labels) -> float:
    """Mean negative log-likelihood; ``labels`` are 1 for normal, 0 for outlier."""
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.shape != y.shape or p.ndim != 1:
        raise ShapeMismatch(f"probs {p.shape} vs labels {y.shape}")
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def total_loss(l_bce, l_ala, l_ec, beta, lam, tau_normal=float("nan"),
               tau_outlier=float("nan")) -> LossBundle:
    return LossBundle(
        l_bce=float(l_bce),
        l_ala=float(l_ala),
        l_ec=float(l_ec),
        l_total=float(l_bce + beta * l_ala + lam * l_ec),
        tau_normal=float(tau_normal),
        tau_outlier=float(tau_outlier),
    )
