"""Exception hierarchy. Every error carries a stable machine-readable code."""

from __future__ import annotations


class CloudfolioError(Exception):
    """Base class for all library errors."""

    code = "ERROR"

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context


# --- catalog ---------------------------------------------------------------

class MissingFileError(CloudfolioError):
    code = "MISSING_FILE"


class SchemaViolationError(CloudfolioError):
    """Catalog file does not match the expected schema (carries line/field)."""

    code = "SCHEMA_VIOLATION"


class DanglingReferenceError(CloudfolioError):
    code = "DANGLING_REFERENCE"


class DuplicateEntryError(CloudfolioError):
    code = "DUPLICATE_ENTRY"


class NoPriceError(CloudfolioError):
    code = "NO_PRICE"


# --- traces ----------------------------------------------------------------

class EmptyTraceError(CloudfolioError):
    code = "EMPTY_TRACE"


class MalformedRowError(CloudfolioError):
    code = "MALFORMED_ROW"


# --- mapping ---------------------------------------------------------------

class NoFeasibleTypeError(CloudfolioError):
    code = "NO_FEASIBLE_TYPE"


class EmptyDistributionError(CloudfolioError):
    code = "EMPTY_DISTRIBUTION"


class SingleClassError(CloudfolioError):
    code = "SINGLE_CLASS"


# --- planning --------------------------------------------------------------

class SingleHourOnlyError(CloudfolioError):
    """The 1-hour marketspace is priced per hour but dies after one hour."""

    code = "H1SM_BEYOND_ONE_HOUR"


class DivisionGuardError(CloudfolioError):
    code = "DIVISION_GUARD"


class InfeasiblePlanError(CloudfolioError):
    code = "INFEASIBLE"


class MixedHorizonsError(CloudfolioError):
    code = "MIXED_HORIZONS"


class HorizonTooLargeError(CloudfolioError):
    code = "HORIZON_TOO_LARGE"
