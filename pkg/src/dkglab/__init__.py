"""
dkglab: a pseudo-spectral laboratory for the massless 2d Dirac-Klein-Gordon
system and the bilinear space-time estimates that govern its low-regularity
theory.
"""

__version__ = "0.1.0"

from .grids import (
    GridSpec2,
    GridSpec3,
    SpectralField2,
    SpectralField3,
    SpinorField2,
    SpinorField3,
    WeightPoint,
    apply_multiplier,
    to_frequency,
    to_physical,
    transform,
    weights_at,
)
from .dirac import (
    DiracRep,
    check_clifford,
    eigenvector,
    null_symbol,
    pauli_representation,
    projector,
)
from .norms import NormSpec, mixed_norm, sobolev_norm, spacetime_norm
from .waves import (
    DyadicPiece,
    StrichartzCase,
    dyadic_project,
    free_wave_film,
    half_wave,
    hh_to_low,
    improved_square_strichartz_ratio,
    square_project,
    strichartz_ratio,
    wave_duhamel,
)
from .solver import (
    DKGState,
    SolverConfig,
    charge,
    first_iterate_regularity,
    nonlinearity,
    picard_iterates,
    rough_data,
    solve,
    step,
)
from .harness import (
    CounterexampleFamily,
    EstimateCase,
    ScalingReport,
    build_counterexample,
    estimate_sides,
    fit_scaling,
    null_form,
    region_check,
    time_cutoff,
    verify_weight_relations,
)

__all__ = [
    "GridSpec2",
    "GridSpec3",
    "SpectralField2",
    "SpectralField3",
    "SpinorField2",
    "SpinorField3",
    "WeightPoint",
    "apply_multiplier",
    "to_frequency",
    "to_physical",
    "transform",
    "weights_at",
    "DiracRep",
    "check_clifford",
    "eigenvector",
    "null_symbol",
    "pauli_representation",
    "projector",
    "NormSpec",
    "mixed_norm",
    "sobolev_norm",
    "spacetime_norm",
    "DyadicPiece",
    "StrichartzCase",
    "dyadic_project",
    "free_wave_film",
    "half_wave",
    "hh_to_low",
    "improved_square_strichartz_ratio",
    "square_project",
    "strichartz_ratio",
    "wave_duhamel",
    "DKGState",
    "SolverConfig",
    "charge",
    "first_iterate_regularity",
    "nonlinearity",
    "picard_iterates",
    "rough_data",
    "solve",
    "step",
    "CounterexampleFamily",
    "EstimateCase",
    "ScalingReport",
    "build_counterexample",
    "estimate_sides",
    "fit_scaling",
    "null_form",
    "region_check",
    "time_cutoff",
    "verify_weight_relations",
]
