"""Explainable competitive-learning intrusion detection.

SOM, growing SOM and growing hierarchical SOM classifiers for tabular flow
data, pessimistic pruning of the hierarchy, and map-based explanations.
"""

from .data import FeatureMatrix, RawDataset, encode_and_normalize, load_csv
from .evaluate import EvalReport, confusion, evaluate, metrics
from .ghsom import GhsomParams, GhsomTree, predict_ghsom, train_ghsom
from .gsom import GsomParams, growth_threshold, train_gsom
from .mapmodel import MapModel, assign_labels, bmu, bmu_pair, predict_flat, quality_report
from .prune import PruneParams, complexity_penalty, prune_tree
from .search import Continuous, Discrete, SearchSpace, random_search
from .som import SomParams, train_som

__version__ = "0.1.0"

__all__ = [
    "Continuous", "Discrete", "EvalReport", "FeatureMatrix", "GhsomParams", "GhsomTree",
    "GsomParams", "MapModel", "PruneParams", "RawDataset", "SearchSpace", "SomParams",
    "assign_labels", "bmu", "bmu_pair", "complexity_penalty", "confusion",
    "encode_and_normalize", "evaluate", "growth_threshold", "load_csv", "metrics",
    "predict_flat", "predict_ghsom", "prune_tree", "quality_report", "random_search",
    "train_ghsom", "train_gsom", "train_som",
]
