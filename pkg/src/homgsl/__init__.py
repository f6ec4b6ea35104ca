"""Graph clustering with homophily-enhanced structure learning."""
from .datasets import Dataset, SbmParams, generate_sbm, load_dataset, oracle_perturb
from .graph import EdgeDelta, UndirectedGraph, apply_edge_delta, edge_homophily
from .metrics import evaluate
from .pipeline import HoleConfig, RunResult, preset, run

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "EdgeDelta",
    "HoleConfig",
    "RunResult",
    "SbmParams",
    "UndirectedGraph",
    "apply_edge_delta",
    "edge_homophily",
    "evaluate",
    "generate_sbm",
    "load_dataset",
    "oracle_perturb",
    "preset",
    "run",
]
