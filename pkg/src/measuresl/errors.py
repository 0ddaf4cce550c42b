"""Exception types raised by the library."""


class MeasureSLError(Exception):
    """Base class for all library errors."""


class PositionOutsideInterval(MeasureSLError, ValueError):
    def __init__(self, x, lo, hi):
        super().__init__(f"position {x!r} outside [{lo!r}, {hi!r}]")
        self.x = x


class SingularJump(MeasureSLError, ArithmeticError):
    """Backward step through a jump factor that is not invertible."""

    def __init__(self, x):
        super().__init__(f"singular jump factor at x = {x!r}")
        self.x = x


class HypothesisViolation(MeasureSLError, ValueError):
    def __init__(self, clause, detail=""):
        msg = f"hypothesis violated: {clause}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.clause = clause


class EndpointNotRegular(MeasureSLError, ValueError):
    pass


class NoGapAtEndpoint(MeasureSLError, ValueError):
    pass


class InvalidBC(MeasureSLError, ValueError):
    pass


class NotOnePoint(MeasureSLError, ValueError):
    pass


class ZAtEigenvalue(MeasureSLError, ArithmeticError):
    def __init__(self, z):
        super().__init__(f"z = {z!r} is (numerically) an eigenvalue")
        self.z = z


class ZOnSpectrum(MeasureSLError, ArithmeticError):
    def __init__(self, z):
        super().__init__(f"z = {z!r} lies on the spectrum")
        self.z = z


class DenominatorVanishes(MeasureSLError, ArithmeticError):
    pass


class BracketTooCoarse(MeasureSLError, ArithmeticError):
    def __init__(self, lo, hi):
        super().__init__(f"could not separate zeros in [{lo!r}, {hi!r}]; refine the scan")
        self.lo = lo
        self.hi = hi


# exit code 2 in the CLI
NUMERICAL_ERRORS = (SingularJump, ZAtEigenvalue, ZOnSpectrum, DenominatorVanishes, BracketTooCoarse)
