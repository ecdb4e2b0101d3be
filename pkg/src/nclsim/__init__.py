"""Simulation and design of nonlinear coherent loss on a single bosonic mode."""

__version__ = "0.1.0"

from .designer import (  # noqa: E402
    OptimizationResult,
    evaluate,
    optimize_amplitude,
    profile_for_comb,
    profile_for_fock,
    profile_for_pair,
    profile_for_target,
    sweep_amplitude,
)
from .elimination import ModeExpansion, reduced_generator, verify_reduction  # noqa: E402
from .evolution import (  # noqa: E402
    EvolutionSettings,
    Trajectory,
    evolve_band,
    evolve_bands,
    evolve_matrix,
    evolve_until_stationary,
    reassemble,
    segment_invariant,
)
from .fock import (  # noqa: E402
    Comb,
    DiagonalBand,
    Fock,
    LossProfile,
    Pair,
    TailRule,
    TruncationWarning,
    bands_from_matrix,
    coherent_density_matrix,
    coherent_weight,
    matrix_from_bands,
    parse_target,
    transmittance,
)
from .metrics import coherence, fidelity, purity, purity_condition_residual  # noqa: E402
from .rk import StiffnessError  # noqa: E402
from .stationary import StationaryReport, stationary_matrix, stationary_support  # noqa: E402

__all__ = [
    "Comb",
    "DiagonalBand",
    "EvolutionSettings",
    "Fock",
    "LossProfile",
    "ModeExpansion",
    "OptimizationResult",
    "Pair",
    "StationaryReport",
    "StiffnessError",
    "TailRule",
    "Trajectory",
    "TruncationWarning",
    "bands_from_matrix",
    "coherence",
    "coherent_density_matrix",
    "coherent_weight",
    "evaluate",
    "evolve_band",
    "evolve_bands",
    "evolve_matrix",
    "evolve_until_stationary",
    "fidelity",
    "matrix_from_bands",
    "optimize_amplitude",
    "parse_target",
    "profile_for_comb",
    "profile_for_fock",
    "profile_for_pair",
    "profile_for_target",
    "purity",
    "purity_condition_residual",
    "reassemble",
    "reduced_generator",
    "segment_invariant",
    "stationary_matrix",
    "stationary_support",
    "sweep_amplitude",
    "transmittance",
    "verify_reduction",
]
