"""Exception and warning types shared across the package."""


class SliceSenseError(Exception):
    """Base class for all package errors."""


class InfeasibleParametersError(SliceSenseError):
    """Requested random assignment cannot satisfy its structural constraints."""


class DegenerateSplitError(SliceSenseError):
    """1-D clustering input has no variation; no threshold can be derived."""


class InvalidFactorCountError(SliceSenseError):
    """Requested number of factors exceeds what the submatrix can identify."""


class FitError(SliceSenseError):
    """Factor-model estimation failed for a clique submatrix."""


class DataFormatError(SliceSenseError):
    """A data file (CSV, report) is malformed; message carries the location."""


class ConfigError(SliceSenseError):
    """A config or sweep-spec file is invalid; message names the key/line."""


class AnalysisWarning(UserWarning):
    """Non-fatal analysis condition (constant column, skipped clique, ...)."""
