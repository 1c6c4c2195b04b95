"""Decoherence-free subsystems of linear open quantum systems.

Find the DF subsystem of a linear quantum system, split it into DF and
decaying parts, test whether correlations between the two parts decay,
and propagate Gaussian states under the full dynamics.
"""

from __future__ import annotations

from .analysis import (
    DFDecomposition,
    HamiltonianCheck,
    Preservation,
    align_gauge,
    complement_basis,
    decompose,
    df_hamiltonian,
    df_subspace,
    hamiltonian_preserves_df,
    kalman_matrices,
    kernel_basis,
    symplectic_df_basis,
)
from .config import RunConfig, parse_config
from .core import (
    ModeBasisPermutation,
    QuantumLinearSystem,
    assemble_system,
    basis_permutation,
    is_symplectic,
    symplectic_form,
    system_matrices,
)
from .dynamics import (
    GaussianMoments,
    StabilityReport,
    correlation_block_norm,
    df_stability,
    evolve_moments,
    log_negativity_two_mode,
    purity,
    steady_covariance,
    symplectic_eigenvalues,
)
from .errors import DFLSError
from .report import AnalysisReport, analyze, kernel_equivalence_residual
from .scenarios import (
    ScenarioSpec,
    dispersive_pair,
    dissipative_pair,
    optomech,
    ring_trap,
    solve_optomech_df,
    solve_ring_df,
    tms_covariance,
)

__all__ = [
    "AnalysisReport", "DFDecomposition", "DFLSError", "GaussianMoments", "HamiltonianCheck",
    "ModeBasisPermutation", "Preservation", "QuantumLinearSystem", "RunConfig", "ScenarioSpec",
    "StabilityReport", "align_gauge", "analyze", "assemble_system", "basis_permutation",
    "complement_basis", "correlation_block_norm", "decompose", "df_hamiltonian", "df_stability",
    "df_subspace", "dispersive_pair", "dissipative_pair", "evolve_moments", "hamiltonian_preserves_df",
    "is_symplectic", "kalman_matrices", "kernel_basis", "kernel_equivalence_residual",
    "log_negativity_two_mode", "optomech", "parse_config", "purity", "ring_trap", "solve_optomech_df",
    "solve_ring_df", "steady_covariance", "symplectic_df_basis", "symplectic_eigenvalues",
    "symplectic_form", "system_matrices", "tms_covariance",
]
