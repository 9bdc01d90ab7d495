"""Finite-dimensional quantum measurement laboratory."""

from .linalg import (
    Interval,
    SpectralFamily,
    adjoint,
    commutator,
    complete_to_unitary,
    eig_hermitian,
    spectral_projector,
    tensor,
    trace,
)
from .measurement import (
    Calibration,
    ConvexExpansion,
    MeasurementScheme,
    build_disturbance_scheme,
    build_ideal_scheme,
    check_probability_reproducibility,
    check_property_revealing,
    final_state,
    ignorance_expansion,
    realistic_ready_state,
)
from .postulates import (
    DensityOperator,
    DeterminateProperty,
    Magnitude,
    OutcomeDistribution,
    born_mixed,
    born_pure,
    collapse_mixed,
    collapse_pure,
    eigenlink_properties,
    evolve,
    sample_outcome,
)
from .problems import (
    expectation_independence,
    no_signalling_check,
    run_probability_problem,
    run_reality_problem,
    run_state_completeness,
    verify_stein_lemma,
)
from .report import ScenarioReport

__version__ = "0.1.0"
