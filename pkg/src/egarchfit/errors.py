"""Exception hierarchy for egarchfit."""


class EgarchError(Exception):
    """Base class for all egarchfit errors."""


class NonStationaryError(EgarchError):
    """Raised when |beta| >= 1, i.e. the log-variance AR(1) has no stationary solution."""


class InadmissibleParamsError(EgarchError):
    """Raised when delta < |gamma|: filter admissibility (INV) violated."""


class OverflowGuardError(EgarchError):
    """Raised when a log-variance state exceeds the +/-700 guard bound."""


class MissingLatentStateError(EgarchError):
    """Raised when an operation needs latent log-variance/innovations but the series has none."""


class IdentifiabilityError(EgarchError):
    """Raised when the innovation distribution cannot identify the parameters."""


class EmptyFeasibleSetError(EgarchError):
    """Raised when no empirically invertible starting point can be found."""


class SingularBError(EgarchError):
    """Raised when the gradient outer-product matrix B is numerically singular."""


class SeriesFormatError(EgarchError):
    """Base class for series ingestion errors."""


class ParseError(SeriesFormatError):
    """Raised on malformed CSV input; carries row/column location."""


class NonFiniteValueError(SeriesFormatError):
    """Raised when an ingested value is NaN or infinite."""


class TooShortError(SeriesFormatError):
    """Raised when a series has fewer rows than an operation requires."""
