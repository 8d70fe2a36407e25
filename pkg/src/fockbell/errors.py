"""Exception hierarchy shared by the simulator, the analysis layer and the CLI."""


class FockBellError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(FockBellError, ValueError):
    """Invalid layout, parameters or configuration file content."""


class TruncationError(FockBellError, ArithmeticError):
    """Amplitude would spill past a Fock-space cutoff, or the truncation budget is exhausted."""


class VisibilityError(FockBellError, ArithmeticError):
    """Visibility is undefined (both extremes are zero)."""


class FitError(FockBellError, ArithmeticError):
    """The fringe fit is not identifiable from the supplied data."""


class OverSubtractionError(FockBellError, ValueError):
    """A background larger than the fitted floor was subtracted."""


class DegenerateParameterWarning(UserWarning):
    """Parameters are allowed but describe a degenerate measurement."""
