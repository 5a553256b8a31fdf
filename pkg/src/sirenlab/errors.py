"""Exception hierarchy shared across the package."""


class SirenlabError(Exception):
    """Base class for all package-specific errors."""


class ContractViolationError(SirenlabError):
    """An input violates a documented structural precondition (shape, symmetry)."""


class ParameterError(SirenlabError):
    """An argument value is outside its valid range."""


class EmptyInputError(ParameterError):
    """An operation received an empty sequence."""


class UndefinedCentroidError(SirenlabError):
    """Spectral centroid of an all-zero signal (zero denominator)."""


class UndefinedSnrError(SirenlabError):
    """SNR-targeted noise on a zero-power signal."""


class UnsupportedFormatError(SirenlabError):
    """File container or encoding we do not read/write."""


class UnsupportedGridError(SirenlabError):
    """Fourier-bin analysis requested on a non-uniform coordinate grid."""


class ResourceLimitError(SirenlabError):
    """A diagnostics-scale cap (matrix size, parameter count) was exceeded."""


class DivergedRunError(SirenlabError):
    """Training loss became non-finite."""

    def __init__(self, message: str, last_finite_epoch: int):
        super().__init__(message)
        self.last_finite_epoch = last_finite_epoch
