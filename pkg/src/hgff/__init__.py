"""Gaussian free fields on Hamming graphs H(d, n) with distance-homogeneous interactions."""

from .errors import (
    CapacityError,
    DomainError,
    EmptyStats,
    HGFFError,
    MasslessWithoutBoundary,
    ReducibleChain,
    SingularSystem,
)
from .graph import (
    EMPTY,
    BoundarySpec,
    GraphSpec,
    Vertex,
    boundary_size,
    character_phase,
    character_table,
    enumerate_sphere,
    hamming_distance,
    log_sphere_size,
    make_graph,
    sphere_size,
)
from .green import (
    GreenResult,
    MassSpec,
    MCEstimate,
    alpha_green_radial,
    asym_coeff_binomial,
    asym_coeff_nn,
    covariance,
    green_dense_oracle,
    green_massive_radial,
    green_massless_origin,
    green_mc_estimate,
    green_radial,
    hit_prob_nn_series,
    hit_probabilities,
    limit_diagnostic_large_d,
    limit_diagnostic_large_n,
    limit_diagnostic_m_to_zero,
    massless_variance_sweep,
    uniform_boundary_green,
)
from .krawtchouk import KrawTable, kraw, kraw_exact, kraw_row_genfun, kraw_table, radial_fourier
from .partition import (
    PartitionReport,
    char_table_det_check,
    free_energy_limit,
    internal_energy,
    log_partition_dense_oracle,
    log_partition_spectral,
    log_partition_uniform,
    partition_report,
)
from .sampler import (
    FieldSample,
    SampleStats,
    accumulate_stats,
    field_mean_variance,
    hamiltonian,
    hamiltonian_quadratic,
    sample_field,
)
from .verify import run_verification_suite
from .walks import (
    LumpedChain,
    Spectrum,
    WalkWeights,
    dense_transition,
    eigenvalues,
    lumped_transition,
    make_weights,
    step_distribution,
    weights_binomial,
    weights_custom,
    weights_nn,
    weights_uniform,
)

__version__ = "0.1.0"
