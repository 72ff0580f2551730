"""Neighbor-importance explanations and loyalty metrics for GCN and GATv2 node classifiers."""

from ._core import (
    ConfigError,
    Error,
    Explanation,
    Graph,
    GraphError,
    Model,
    NumericalError,
    PGExplainer,
    ShapeError,
    all_deleted,
    auc,
    evaluate,
    explain,
    gadget,
    load_graph,
    load_model,
    planted_motif_graph,
    random_graph,
    relu_backward,
    save_graph,
    save_model,
    set_self_loops,
    train,
    train_pgexplainer,
    without_neighbors,
)

METHODS = ("saliency", "smoothgrad", "deconvnet", "guided", "gnnexplainer", "pgexplainer")
METRICS = ("loyalty", "inverse_loyalty", "loyalty_probabilities", "inverse_loyalty_probabilities")

__all__ = [
    "ConfigError",
    "Error",
    "Explanation",
    "Graph",
    "GraphError",
    "METHODS",
    "METRICS",
    "Model",
    "NumericalError",
    "PGExplainer",
    "ShapeError",
    "all_deleted",
    "auc",
    "evaluate",
    "explain",
    "gadget",
    "load_graph",
    "load_model",
    "planted_motif_graph",
    "random_graph",
    "relu_backward",
    "save_graph",
    "save_model",
    "set_self_loops",
    "train",
    "train_pgexplainer",
    "without_neighbors",
]
