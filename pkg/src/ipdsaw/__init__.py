"""Exact computation and sampling laboratory for the IPDSAW polymer model."""

from .paths import (
    PolymerPath,
    AuxWalk,
    PathGeometry,
    Pattern,
    PatternDecomposition,
    wedge,
    hamiltonian,
    to_aux_walk,
    from_aux_walk,
    geometry,
    decompose_patterns,
    decompose_beads,
    enumerate_paths,
    enumerate_partition,
)
from .thermo import (
    ModelParams,
    Tilt,
    model_params,
    beta_critical,
    log_mgf,
    log_mgf_mixed,
    solve_tilt,
    solve_tilt_discrete,
    collapse_rate,
    a_beta,
    wulff,
    wulff_envelope,
    mu_beta,
    sample_mu_beta,
)
from .airy import CritConstants, crit_constants, excursion_area_density, scaled_area_density
from .engine import (
    DpTable,
    walk_area_table,
    excess_log_partition,
    constrained_excess_log_partition,
    ExtensionLaw,
    extension_law,
    exact_sampler,
    mixture_sampler,
    pattern_log_weights,
    RegenerativeConstants,
    extended_constants,
    CriticalRenewal,
    critical_renewal,
)

__version__ = "0.1.0"
