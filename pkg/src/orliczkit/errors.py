"""Exception taxonomy shared by all modules."""


class OrliczkitError(Exception):
    """Base class for all package errors."""


class InvalidYoungError(OrliczkitError):
    """A candidate growth function violates monotonicity/convexity on its scan window."""


class NotCertifiedError(OrliczkitError):
    """An operation requires a growth certificate that is absent."""


class HardyVerificationError(OrliczkitError):
    """A closed-form Hardy constant failed its numerical verification."""


class MaximizerAtBoundaryError(OrliczkitError):
    """Conjugate maximizer hit the end of the scan window (y outside the density range)."""


class ModularOverflowError(OrliczkitError):
    """The integrand of a modular evaluated to a non-finite value."""


class StencilError(OrliczkitError):
    """A finite-difference stencil or region does not fit inside the grid."""


class KernelValidationError(OrliczkitError):
    """Kernel failed cancellation or derivative-bound checks."""


class NonTorusError(OrliczkitError):
    """Operator quadrature requires periodic topology."""


class NotEllipticError(OrliczkitError):
    """Symbol determinant is not bounded below on the sphere sample."""


class UnsupportedFamilyError(OrliczkitError):
    """No closed-form fundamental solution for this operator family."""


class AnnulusResolutionError(OrliczkitError):
    """Cutoff transition annulus thinner than three grid cells."""


class ConfigError(OrliczkitError):
    """Scenario configuration is malformed; message names the offending key."""
