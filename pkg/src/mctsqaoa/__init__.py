"""Hybrid discrete-continuous optimizer for generalized QAOA protocols.

Tree search proposes gate sequences; an entropy-regularized natural policy
gradient solver assigns gate durations; a dense state-vector simulator with
configurable noise channels provides the terminal reward.
"""

__version__ = "0.1.0"

from .hilbert import HermitianOperator, QuantumState, evolve, expectation, spectral_decompose, variance
from .models import ModelInstance, ModelSpec, build, sequence_count
from .reward import Durations, GateSequence, NoiseModel, RewardEvaluator, RewardSample, energy_ratio, evaluate, run_protocol
from .npg import InnerResult, NpgConfig, PolicyParams, best_of_inits, durations_from_draws, inner_solve, natural_gradient_estimate
from .mcts import MctsConfig, RunReport, TreeNode, full_run
from .rng import Stream, root

__all__ = [
    "Durations",
    "GateSequence",
    "HermitianOperator",
    "InnerResult",
    "MctsConfig",
    "ModelInstance",
    "ModelSpec",
    "NoiseModel",
    "NpgConfig",
    "PolicyParams",
    "QuantumState",
    "RewardEvaluator",
    "RewardSample",
    "RunReport",
    "Stream",
    "TreeNode",
    "best_of_inits",
    "build",
    "durations_from_draws",
    "energy_ratio",
    "evaluate",
    "evolve",
    "expectation",
    "full_run",
    "inner_solve",
    "natural_gradient_estimate",
    "root",
    "run_protocol",
    "sequence_count",
    "spectral_decompose",
    "variance",
]
