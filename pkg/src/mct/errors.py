"""Exception hierarchy shared by all modules."""


class MCTError(Exception):
    """Base class for every error raised by this package."""


class InvalidWell(MCTError):
    pass


class IntegrationFailure(MCTError):
    pass


class QuadratureFailure(MCTError):
    pass


class RadiusTooLarge(MCTError):
    pass


class RadiusTooSmall(MCTError):
    pass


class GridMismatch(MCTError):
    pass


class InvalidExponents(MCTError):
    pass


class SupBoundViolated(MCTError):
    """Mollified transport exceeds the epsilon-dependent sup bounds; shrink epsilon."""


class InvalidGeometry(MCTError):
    pass


class EpsilonGridMismatch(MCTError):
    pass


class TruncationTooTight(MCTError):
    pass


class StabilityViolation(MCTError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class InvalidTimeStep(MCTError):
    pass


class PoleInPast(MCTError):
    pass


class InsufficientSnapshots(MCTError):
    pass


class NoInterface(MCTError):
    pass


class MultipleLoops(MCTError):
    pass


class ConfigInvalid(MCTError):
    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
