"""Band structure, spectral gaps and large-coupling eigenvalue counting
for discrete periodic Schrodinger operators on Z^d-periodic graphs."""

from .floquet import (
    BandStructure,
    FiberMatrix,
    Gap,
    GapEdge,
    RegularityReport,
    band_structure,
    band_values,
    check_edge_regularity,
    check_gap_edge_regularity,
    fiber_matrix,
    find_gaps,
    gap_edge,
    hermitian_eigen,
    torus_grid,
)
from .gamma import (
    EdgeIntegralReport,
    GammaResult,
    edge_integral,
    gamma_at_edge,
    gamma_coefficient,
    sphere_integral,
    weak_edge_membership,
)
from .pdo_lab import (
    CommutatorReport,
    LatticeSymbol,
    SingularValueReport,
    SymbolTriple,
    commutator_decay,
    cwikel_ratio,
    dp_vs_formula,
    fourier_modsq_coeffs,
    homogeneous_symbol,
    pdo_singular_values,
    tabulated_symbol,
)
from .periodic_graph import (
    DecayingPotential,
    FiniteHamiltonian,
    GraphError,
    GraphSpec,
    PeriodicGraph,
    ThetaProfile,
    assemble_truncated,
    build_graph,
    dimer_chain,
    potential_from_function,
    sample_potential,
    square_lattice,
    theta_const,
    theta_cos2,
)
from .spectral_counts import (
    BSMatrix,
    CountingError,
    CountingTable,
    asymptotic_table,
    bs_matrix,
    counting_bs,
    counting_direct,
    edge_counting,
    eigencount_below,
)
from .weak_lp import (
    DpWindowEstimate,
    WeightedSequence,
    distribution,
    dp_window,
    membership_verdicts,
    weak_quasinorm,
)

__version__ = "0.1.0"
