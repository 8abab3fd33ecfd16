"""Exception types shared across the package.

Each names a specific contract violation so callers can distinguish
"your inputs are degenerate" from "the thing you handed me misbehaved".
"""

from __future__ import annotations


class SensorankError(Exception):
    """Base class for package-specific failures."""


class AllZeroSpectrum(SensorankError):
    """Spectrum functional asked for on an all-zero spectrum."""


class InsufficientNeighbors(SensorankError):
    """Not enough points to form the requested neighborhood."""


class DimensionMismatch(SensorankError):
    """Array shape incompatible with the declared oracle or sketch geometry."""


class OracleNumericalFault(SensorankError):
    """An oracle returned non-finite values; carries direction/image context."""


class CapabilityMissing(SensorankError):
    """Oracle does not support the requested operation (e.g. no taps)."""


class ZeroVector(SensorankError):
    """Cosine similarity asked for on a zero vector; names the offending slot."""


class InsufficientPool(SensorankError):
    """Reference pool too small for the requested neighborhood readout."""


class ManifestMismatch(SensorankError):
    """Dataset manifest references embeddings that are not present."""


class DegenerateLabels(SensorankError):
    """A classification routine received only a single class."""


class DegenerateVariance(SensorankError):
    """A correlation routine received a constant (zero-variance) variable."""


class SingularDesign(SensorankError):
    """Regression design matrix is rank deficient."""


class DatasetGenerationError(SensorankError):
    """Could not write a dataset artifact; names the path."""


class EmbeddingFormatError(SensorankError):
    """Embedding file is malformed or internally inconsistent."""
