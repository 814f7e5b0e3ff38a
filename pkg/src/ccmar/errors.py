"""Exception hierarchy.

Two families matter to callers: :class:`InputError` (bad files, bad
arguments) and :class:`StatisticalPreconditionError` (the data are well
formed but too few or too degenerate for the requested procedure).  The CLI
maps them to exit codes 2 and 3.
"""

from __future__ import annotations


class CcmarError(Exception):
    """Base class for all package errors."""

    code = "error"


class InputError(CcmarError, ValueError):
    code = "input_error"


class StatisticalPreconditionError(CcmarError, ValueError):
    code = "precondition_error"


# ingestion
class MalformedHeader(InputError):
    code = "malformed_header"


class NonNumericField(InputError):
    code = "non_numeric_field"


class VOutOfRange(InputError):
    code = "v_out_of_range"


class InconsistentMissingness(InputError):
    code = "inconsistent_missingness"


class EmptyFile(InputError):
    code = "empty_file"


class DomainError(InputError):
    code = "domain_error"


class InvalidProbability(InputError):
    code = "invalid_probability"


class InvalidConfig(InputError):
    code = "invalid_config"


class ArityMismatch(InputError):
    code = "arity_mismatch"


class EmptyInput(InputError):
    code = "empty_input"


# statistical preconditions
class InsufficientData(StatisticalPreconditionError):
    code = "insufficient_data"


class RankDeficientDesign(StatisticalPreconditionError):
    code = "rank_deficient_design"


class DegenerateResiduals(StatisticalPreconditionError):
    code = "degenerate_residuals"


class DegenerateChi(StatisticalPreconditionError):
    code = "degenerate_chi"


class NonConstantChiRequired(DegenerateChi):
    """The weight function itself is constant on [0, 1]."""

    code = "non_constant_chi_required"


class SingularGamma(StatisticalPreconditionError):
    code = "singular_gamma"


class ReplicationError(CcmarError):
    """An analysis failed inside a Monte Carlo replication."""

    code = "replication_error"

    def __init__(self, index: int, cause: BaseException):
        super().__init__(f"replication {index} failed: {cause!r}")
        self.index = index
        self.cause = cause
