"""Central finite-difference check of the hand-written backward pass.

The error of one tensor is ``max|analytic - numeric| / max(max|analytic|,
max|numeric|)``: relative to the tensor's gradient scale, so entries whose
true gradient is zero do not blow up the ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import TrainConfig
from .graph import build_graph, normalize_adjacency
from .linalg import make_rng
from .model import ModelParams, init_params
from .objective import TrainView, backward, forward, loss_value, make_view
from .outliers import sample_strategy_noise, select_anchors

STEP = 1e-5
TOLERANCE = 1e-4


@dataclass
class GradCheckResult:
    seed: int
    strategy: str
    errors: dict[str, float]

    @property
    def max_error(self) -> float:
        return max(self.errors.values())


def random_instance(seed: int, n: int = 20, f: int = 8, hidden: int = 8, dim: int = 4,
                    n_labeled: int = 8, n_outliers: int = 2, p_edge: float = 0.2,
                    strategy: str = "ggad", **overrides):
    """A small seeded problem: Erdos-Renyi graph, jittered params, fixed noise."""
    rng = make_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p_edge
    g = build_graph(np.stack([iu[keep], ju[keep]], axis=1), rng.normal(size=(n, f)))
    config = TrainConfig(hidden=hidden, dim=dim, outlier_strategy=strategy,
                         s_ratio=n_outliers / n_labeled, **overrides)
    params = init_params(rng, f, hidden, dim)
    # nonzero biases so every term of the backward pass is exercised
    params = ModelParams(**{k: a + rng.normal(0.0, 0.1, size=a.shape) for k, a in params.items()})
    labeled = rng.choice(n, size=n_labeled, replace=False)
    anchors = select_anchors(labeled, g, config.s_ratio, rng,
                             require_degree=strategy != "noise")
    positives = np.setdiff1d(labeled, anchors) if strategy == "random" else labeled
    eps = rng.normal(config.eps_mean, config.eps_std, size=(anchors.size, dim))
    noise = sample_strategy_noise(strategy, rng, anchors.size, dim, config.sigma_p)
    view = make_view(g, normalize_adjacency(g), positives, anchors, eps, strategy, noise=noise)
    return params, view, config


def numeric_gradient(params: ModelParams, view: TrainView, config, step: float = STEP):
    num = {}
    for name, arr in params.items():
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + step
            up = loss_value(params, view, config)
            arr[idx] = orig - step
            down = loss_value(params, view, config)
            arr[idx] = orig
            g[idx] = (up - down) / (2.0 * step)
        num[name] = g
    return num


def tensor_error(analytic, numeric) -> float:
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0))
    if scale == 0.0:
        return 0.0
    return float(np.abs(analytic - numeric).max() / scale)


def check(seed: int, strategy: str = "ggad", step: float = STEP, **kwargs) -> GradCheckResult:
    params, view, config = random_instance(seed, strategy=strategy, **kwargs)
    grads = backward(params, forward(params, view, config), view, config)
    num = numeric_gradient(params, view, config, step)
    errors = {name: tensor_error(getattr(grads, name), num[name]) for name, _ in params.items()}
    return GradCheckResult(seed=seed, strategy=strategy, errors=errors)
