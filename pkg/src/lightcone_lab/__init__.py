"""Desk-scale laboratory for light-cone propagation bounds of smeared fermions."""

from .errors import (
    CapacityError,
    ConfigError,
    DivergenceError,
    HypothesisError,
    LightconeLabError,
    ModelError,
    ParameterError,
    PlanError,
    ResolutionError,
    ShapeError,
    TruncationError,
)
from .grids import (
    DecayEnvelope,
    Grid,
    GridFunction,
    SmearingFunction,
    bracket,
    decay_envelope,
    delta_function,
    dyadic_decompose,
    make_bump,
    make_gaussian,
    periodic_convolve,
    read_gridfunction_csv,
    reflect,
    write_gridfunction_csv,
)
from .onebody import (
    EnergyCutoff,
    OneBodyOperator,
    annulus_probe,
    assemble,
    lightcone_slope,
    momentum_norm_under_cutoff,
    overlap_scan,
    propagation_norm,
)
from .bounds import (
    BoundParams,
    InteractionSpec,
    NormCalculator,
    SmoothFunctionSpec,
    convolution_decay_check,
    cutoff_norm_bound,
    interaction_kernel,
    iteration_series_terms,
    manybody_time_envelope,
    pair_envelope_integral,
    power_weight_integral,
    time_moment_inequality_check,
    weighted_derivative_norm,
)
from .fock import (
    FockOperator,
    ModeBasis,
    ModelSpec,
    annihilation_operator,
    anticommutator_difference,
    build_hamiltonian,
    clustering_probe,
    creation_operator,
    gram_schmidt_basis,
    ground_state,
    heisenberg_evolve,
    mode_annihilator,
    nested_volume_differences,
    second_quantize,
    total_number_operator,
    total_parity_operator,
    vacuum_state,
)
from .rewriter import (
    OperatorExpression,
    direct_bracket,
    expand_commutator,
    materialize,
)
from .condexp import (
    KrausPlan,
    bimodule_residual,
    build_dyadic_mode_plan,
    conditional_expectation,
    localization_error,
    mode_kraus_unitaries,
    tracial_state,
)

__all__ = [name for name in dir() if not name.startswith("_")]
