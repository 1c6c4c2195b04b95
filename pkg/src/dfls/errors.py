"""Exception hierarchy.

Each error carries the CLI exit code it maps to, so the command layer never
has to re-classify library failures.
"""

from __future__ import annotations


class DFLSError(Exception):
    exit_code = 1


class InvalidDimensionError(DFLSError, ValueError):
    exit_code = 2


class InvalidHamiltonianError(DFLSError, ValueError):
    exit_code = 2


class ConfigError(DFLSError, ValueError):
    exit_code = 2


class IllConditionedRankError(DFLSError):
    """Numerical kernel with an odd dimension; the rank tolerance sits on a gap."""

    exit_code = 4


class InvarianceViolationError(DFLSError):
    exit_code = 4


class DecompositionInconsistencyError(DFLSError):
    exit_code = 4


class UncertaintyViolationError(DFLSError, ValueError):
    exit_code = 5


class UnphysicalStateError(DFLSError, ValueError):
    exit_code = 5


class NoSteadyStateError(DFLSError):
    exit_code = 1


class EngineeringInfeasibleError(DFLSError):
    exit_code = 6
