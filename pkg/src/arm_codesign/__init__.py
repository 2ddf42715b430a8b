"""Workbench for contrasting morphology/controller co-design against
control-only optimization on a planar two-link reaching arm."""

__version__ = "0.1.0"

from .analysis import AnalysisConfig
from .dynamics import ArmState, Morphology, PhysicalParams, Trajectory
from .evolve import GAConfig, GenerationTrace, Genome, GenomeCodec
from .experiment import EvalRecord, Scenario, TargetGrid
from .geometry import Circle, CollisionConfig, Obstacle, Rect
from .policy import Condition, NetLayout, PolicyNet

__all__ = [
    "AnalysisConfig",
    "ArmState",
    "Circle",
    "CollisionConfig",
    "Condition",
    "EvalRecord",
    "GAConfig",
    "GenerationTrace",
    "Genome",
    "GenomeCodec",
    "Morphology",
    "NetLayout",
    "Obstacle",
    "PhysicalParams",
    "PolicyNet",
    "Rect",
    "Scenario",
    "TargetGrid",
    "Trajectory",
    "__version__",
]
