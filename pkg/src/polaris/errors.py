"""Exception types shared across the toolkit.

Every raisable error carries a stable ``code`` string so callers (and the
CLI) can match on behavior without parsing messages.
"""

from __future__ import annotations


class PolarisError(Exception):
    """Base class for all toolkit errors."""

    code = "ERROR"

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context


# --- netlist ---

class BenchSyntaxError(PolarisError):
    code = "SYNTAX"

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}", line=line)
        self.line = line


class UndefinedSignalError(PolarisError):
    code = "UNDEFINED_SIGNAL"


class DuplicateDefinitionError(PolarisError):
    code = "DUPLICATE_DEFINITION"


class ArityMismatchError(PolarisError):
    code = "ARITY_MISMATCH"


class CombinationalCycleError(PolarisError):
    code = "COMBINATIONAL_CYCLE"


class CycleError(PolarisError):
    code = "CYCLE"


# --- graph / features ---

class IndexOutOfRangeError(PolarisError):
    code = "INDEX_OUT_OF_RANGE"


# --- simulation / tvla ---

class NoSecretInputsError(PolarisError):
    code = "NO_SECRET_INPUTS"


class InsufficientSamplesError(PolarisError):
    code = "INSUFFICIENT_SAMPLES"


class NegligibleBaselineError(PolarisError):
    code = "NEGLIGIBLE_BASELINE"


class ZeroTotalError(PolarisError):
    code = "ZERO_TOTAL"


# --- masking ---

class UnmaskableTypeError(PolarisError):
    code = "UNMASKABLE_TYPE"


class AlreadyMaskedError(PolarisError):
    code = "ALREADY_MASKED"


# --- data generation ---

class PoolExhaustedError(PolarisError):
    """Maskable pool smaller than the requested sample; also signals normal
    loop termination in the dataset builder."""

    code = "POOL_EXHAUSTED"


class EmptyDatasetError(PolarisError):
    code = "EMPTY_DATASET"


# --- models ---

class DegenerateDatasetError(PolarisError):
    code = "DEGENERATE_DATASET"


class SchemaMismatchError(PolarisError):
    code = "SCHEMA_MISMATCH"


class TooFewSamplesError(PolarisError):
    code = "TOO_FEW_SAMPLES"


class VersionUnsupportedError(PolarisError):
    code = "VERSION_UNSUPPORTED"


class CorruptFileError(PolarisError):
    code = "CORRUPT"


# --- explanations ---

class TooManyFeaturesError(PolarisError):
    code = "TOO_MANY_FEATURES"


class BudgetExceedsCandidatesWarning(UserWarning):
    """Budget clamped to the number of available candidates."""
