"""Desk-scale laboratory for heat-bath Glauber dynamics of the 2D Ising model.

The package verifies, on finite tori, the exact structures behind the
low-temperature behavior of the dynamics: periodic antisymmetric
configurations, fixed-time centering of coset means, pathwise vanishing-mesh
confinement of block magnetizations, bitwise coupling symmetries of the
graphical construction, and Cesaro convergence toward the symmetric Gibbs
mixture.
"""

from .lattice import (
    FULL,
    Site,
    SpinConfig,
    SublatticeSpec,
    TorusCompatibilityError,
    apply_symmetry,
    block_magnetization,
    coset_index_map,
    enumerate_cosets,
)
from .antisym import (
    AntisymSpec,
    build_from_cylinder,
    instantiate_on_torus,
    verify_antisymmetric,
)
from .dynamics import (
    MarkBoundaryError,
    NoiseStream,
    TieError,
    Trajectory,
    UpdateRule,
    check_antisym_coupling,
    check_flip_covariance,
    check_translation_covariance,
    evolve,
    generate_noise,
    heat_bath_prob,
    match_under_symmetry,
    transform_noise,
)
from .observables import (
    CosetMeanEstimate,
    MagnetizationSeries,
    MeshAuditRecord,
    StepSeries,
    batch_means,
    cesaro_time_average,
    coset_means,
    magnetization_series,
    mesh_audit,
    sector_proxy,
    sign_symmetry_test,
    two_point_correlation,
    two_point_series,
    two_point_time_average,
)
from .exactref import (
    BETA_CRITICAL,
    ExactGibbsTable,
    GeneratorCheck,
    exact_gibbs_expectation,
    exact_gibbs_table,
    generator_check,
    load_oracles,
    onsager_magnetization,
)
from .harness import (
    ExperimentConfig,
    Report,
    run_experiment,
    verify_report,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
