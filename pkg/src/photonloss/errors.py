"""Exception hierarchy shared across the package."""


class PhotonLossError(Exception):
    """Base class for every error raised by this package."""


class LayoutError(PhotonLossError, ValueError):
    """Invalid mode layout, mode id, occupation, or mismatched layouts."""


class DimensionCapError(LayoutError):
    """The requested Hilbert space exceeds the configured amplitude cap."""


class ZeroNormError(PhotonLossError, ArithmeticError):
    """A state has (numerically) zero norm.

    Raised for impossible branches such as a photon loss from the vacuum or a
    measurement outcome with vanishing probability.
    """


class TruncationError(PhotonLossError):
    """The Fock truncation is predicted to be too small for the requested gate."""


class CodingError(PhotonLossError, ValueError):
    """Malformed coding specification."""


class UnsupportedRecoveryError(PhotonLossError):
    """Recovery requested for a coding scheme that has none."""


class ScenarioError(PhotonLossError, ValueError):
    """Scenario file failed validation; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
