"""Exception hierarchy shared by every module."""


class HilbertLabError(Exception):
    """Base class for all library errors."""


class InvalidGeometry(HilbertLabError):
    pass


class DegenerateChord(HilbertLabError):
    pass


class NumericalFailure(HilbertLabError):
    pass


class OutsideDomain(HilbertLabError):
    pass


class NonUniqueSupport(HilbertLabError):
    """Raised at boundary points with more than one supporting hyperplane."""


class InvalidMap(HilbertLabError):
    pass


class BudgetExceeded(HilbertLabError):
    """Orbit enumeration hit its element budget.

    ``partial`` carries the ball built so far and ``cutoff`` the largest
    distance that is known to be complete.
    """

    def __init__(self, message, partial=None, cutoff=None):
        super().__init__(message)
        self.partial = partial
        self.cutoff = cutoff


class SpectralAmbiguity(HilbertLabError):
    pass


class NotBiproximal(HilbertLabError):
    pass


class UnsupportedScenario(HilbertLabError):
    pass


class InsufficientData(HilbertLabError):
    pass


class SubcriticalParameter(HilbertLabError):
    pass


class ConfigError(HilbertLabError):
    """Configuration problem; ``field`` is the dotted path of the offending key."""

    def __init__(self, message, field=None, line=None):
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
        self.field = field
        self.line = line
