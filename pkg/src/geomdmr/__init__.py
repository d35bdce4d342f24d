"""Geodesic-distance MDMR on SPD correlation matrices.

Core pieces: validated SPD/correlation linear algebra, four dissimilarity
measures (including the affine-invariant geodesic distance), the
Gower-centered pseudo-F permutation test, a connectivity-matrix simulator
with SPD-preserving signal implantation, and a seeded power-study pipeline
with CSV and SVG reporting.
"""

from .distances import (
    DistanceMeasure,
    dissimilarity_matrix,
    dist_affine_invariant,
    dist_correlation,
    dist_euclidean,
    dist_sphere,
    vectorize_upper,
)
from .fcsim import (
    CohortConfig,
    ImplantPlan,
    SignalParams,
    SimulatedSubject,
    generate_base_cohort,
    implant,
    load_cohort,
    sample_rho,
    signal_matrix,
    simulate_subject,
    wishart_sample,
)
from .linalg import (
    as_correlation,
    as_spd,
    cholesky,
    is_spd,
    normalize_to_correlation,
    sym_eigen,
    symmetrize,
    whiten,
)
from .mdmr import (
    MDMRResult,
    gower_center,
    group_design,
    hat_matrix,
    permutation_test,
    pseudo_f,
    validate_design,
)
from .power import (
    ExperimentGrid,
    PowerRow,
    StudyOptions,
    estimate_power,
    run_cell,
    run_grid,
    simulate_replicate,
)

__version__ = "0.1.0"
