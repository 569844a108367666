"""Semi-supervised graph anomaly detection with generated outlier nodes."""

from .config import TrainConfig
from .data_io import Split, build_split, load_dataset, save_dataset, synth_generate
from .graph import Graph, build_graph, normalize_adjacency
from .metrics import auprc, auroc, evaluate, score_split
from .model import ModelParams, load_params, save_params
from .trainer import train, train_full_batch, train_minibatch

__version__ = "0.1.0"

__all__ = [
    "Graph", "ModelParams", "Split", "TrainConfig", "auprc", "auroc", "build_graph",
    "build_split", "evaluate", "load_dataset", "load_params", "normalize_adjacency",
    "save_dataset", "save_params", "score_split", "synth_generate", "train",
    "train_full_batch", "train_minibatch",
]
