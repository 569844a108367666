"""Training hyperparameters."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from .outliers import STRATEGIES

# Graphs larger than this train in mini-batches unless a batch size is given.
MINIBATCH_NODE_THRESHOLD = 200_000
AUTO_BATCH_SIZE = 2048


@dataclass
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 200
    alpha: float = 0.7
    beta: float = 1.0
    lam: float = 1.0
    s_ratio: float = 0.05
    eps_mean: float = 0.01
    eps_std: float = 0.005
    hidden: int = 128
    dim: int = 64
    batch_size: int | None = None  # None = full batch
    seed: int = 0
    outlier_strategy: str = "ggad"
    disable_ala: bool = False
    disable_ec: bool = False
    sigma_p: float = 0.1  # gaussianp perturbation scale
    minibatch_threshold: int = MINIBATCH_NODE_THRESHOLD

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("lr must be > 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not 0 < self.s_ratio <= 1:
            raise ValueError("s_ratio must be in (0, 1]")
        if self.alpha < 0 or self.beta < 0 or self.lam < 0:
            raise ValueError("alpha, beta and lambda must be >= 0")
        if self.eps_std < 0 or self.sigma_p < 0:
            raise ValueError("noise scales must be >= 0")
        if self.hidden < 1 or self.dim < 1:
            raise ValueError("layer sizes must be >= 1")
        if self.outlier_strategy not in STRATEGIES:
            raise ValueError(f"outlier_strategy must be one of {STRATEGIES}")
        if self.batch_size is not None and self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")

    @property
    def beta_eff(self) -> float:
        return 0.0 if self.disable_ala else self.beta

    @property
    def lam_eff(self) -> float:
        return 0.0 if self.disable_ec else self.lam

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})
