from __future__ import annotations


class ConfigError(ValueError):
    """Raised when a run configuration or command line is invalid."""


class DataError(ValueError):
    """Raised when input data cannot be used by a pipeline stage."""


class CubeFormatError(DataError):
    """Raised when an HSDC file does not follow the binary format."""


class TruncatedCubeError(CubeFormatError):
    """Raised when an HSDC payload is shorter or longer than its header implies."""


class DegenerateInputError(DataError):
    """Raised when an operation gets input it cannot scale or describe."""


class GeometryError(DataError):
    """Raised when a synthetic seed does not fit inside the cube."""


class SegmentationError(DataError):
    """Raised when the seed mask fill fraction is out of bounds."""


class EllipseFitError(DataError):
    """Raised when boundary points do not determine an ellipse."""


class ShapeMismatchError(DataError):
    """Raised when arrays or models disagree on dimensions."""


class NumericalError(RuntimeError):
    """Raised when training produces non-finite values."""
