"""Canonical Hamiltonians and minimal dissipators for quantum master equations."""

from .canonical import (
    CanonicalDecomposition,
    InnerProduct,
    avg_inner_product,
    avg_inner_product_mc,
    avg_inner_product_permutation,
    avg_norm,
    canonical_dissipator,
    canonical_hamiltonian,
    canonical_hamiltonian_kraus,
    canonical_rates,
    canonicalize,
    choi_hs_inner_product,
    gauge_shift,
    hs_inner_product,
    inner_product,
    kossakowski_matrix,
    kraus_free_contraction,
    lindblad_haar_hamiltonian_mc,
    markovianity_check,
    minimality_certificate,
    projected_hamiltonian,
    projection_equivalence,
    psi_map,
    psi_superoperator,
    random_hpta,
)
from .dynamics import (
    BipartiteSystem,
    GeneratorTrajectory,
    canonical_trajectory,
    extract_generator,
    integrate_master_equation,
    reduced_channel,
    reduced_channel_derivative,
    trace_distance,
)
from .errors import (
    CanonError,
    DimensionError,
    NotDensityMatrixError,
    NotHermitianError,
    NotHPTAError,
    SingularChannelError,
)
from .haar import (
    HaarSampler,
    fourth_moment_contract,
    fourth_moment_contract_permutation,
    mc_average,
    sample_unitary,
    second_moment,
)
from .operators import (
    Evolution,
    anticommutator,
    commutator,
    dag,
    density_matrix,
    hermitian,
    partial_trace,
    propagator,
    swap_operator,
    tensor_product,
    traceless_basis,
    unvec,
    vec,
)
from .perturbation import (
    DysonTerms,
    PerturbativeGenerator,
    canonical_h1,
    canonical_h2,
    closed_form_L2,
    dyson_terms,
    first_order_generator,
    perturbative_channel,
    perturbative_channel_derivative,
    perturbative_hamiltonian,
    recursive_generator,
    v_interaction,
)
from .superop import (
    PseudoKrausDecomposition,
    Superoperator,
    adjoint,
    conjugation,
    from_choi,
    from_hamiltonian,
    from_lindblad,
    is_completely_positive,
    is_hpta,
    pseudo_kraus,
    to_choi,
)

__version__ = "0.1.0"
