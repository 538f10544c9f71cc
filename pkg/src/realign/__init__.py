"""Procedure learning by regularized fused partial Gromov-Wasserstein alignment."""

from .geometry import CostMatrix, EmbeddingSequence, StructureMatrix, VirtualCostPolicy
from .solver import SolverConfig, Solution, TransportPlan, assign_virtual, solve_entropic_kot, solve_rfpgwot
from .synth import BACKGROUND, GroundTruth, SynthConfig, generate_pair

__version__ = "0.1.0"

__all__ = [
    "BACKGROUND",
    "CostMatrix",
    "EmbeddingSequence",
    "GroundTruth",
    "Solution",
    "SolverConfig",
    "StructureMatrix",
    "SynthConfig",
    "TransportPlan",
    "VirtualCostPolicy",
    "assign_virtual",
    "generate_pair",
    "solve_entropic_kot",
    "solve_rfpgwot",
    "__version__",
]
