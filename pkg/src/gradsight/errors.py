"""
gradsight.errors
~~~~~~~~~~~~~~~~
Exception hierarchy. Each error carries the CLI exit code it maps to
(1 usage, 2 I/O, 3 numeric / dimension).
"""


class GradSightError(Exception):
    exit_code: int = 3


class FieldValidationError(GradSightError, ValueError):
    """Shape, finiteness or value-range violation of a field or tensor."""
    exit_code = 3


class DimensionMismatchError(FieldValidationError):
    """Two operands disagree on their dimensions (or channel grouping)."""
    exit_code = 3


class DegenerateGroundTruthError(GradSightError, ValueError):
    """Ground truth is all-positive or all-negative under the valid mask."""
    exit_code = 3


class ImageFormatError(GradSightError, OSError):
    exit_code = 2


class TensorFormatError(ImageFormatError):
    exit_code = 2
