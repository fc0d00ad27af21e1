"""Memetic graph clustering for modularity."""
from .clustering import (
    Clustering,
    CutEdgeSet,
    coverage,
    cut_edges,
    distance,
    modularity,
    overlay,
    pairwise_label_overlay,
)
from .graph import CoarseningLevel, Graph, contract, parse_graph, project, read_graph
from .island import IslandConfig, run
from .louvain import MoveConstraint, local_movement, louvain_multilevel, sclp
from .memetic import Individual, OperatorConfig, Population
from .partition import PartitionParams, bisect_cluster, partition

__all__ = [
    "Clustering", "CutEdgeSet", "coverage", "cut_edges", "distance", "modularity",
    "overlay", "pairwise_label_overlay", "CoarseningLevel", "Graph", "contract",
    "parse_graph", "project", "read_graph", "IslandConfig", "run", "MoveConstraint",
    "local_movement", "louvain_multilevel", "sclp", "Individual", "OperatorConfig",
    "Population", "PartitionParams", "bisect_cluster", "partition",
]
