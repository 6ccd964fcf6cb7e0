"""Exception types raised across the package."""


class MsimapError(Exception):
    """Base class for all package errors."""


class ParameterError(MsimapError, ValueError):
    """An argument is out of its documented range."""


class DegenerateInputError(MsimapError, ValueError):
    """Input data admits no meaningful result (e.g. all points identical)."""


class SpectralDomainError(MsimapError, ValueError):
    """A Laplacian spectrum falls outside a polynomial approximation domain."""


class OracleSizeError(MsimapError, ValueError):
    """A dense reference computation was asked to handle too large a problem."""


class ParseError(MsimapError, ValueError):
    """An input file could not be parsed."""
