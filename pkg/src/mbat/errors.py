"""Exception hierarchy shared by every mbat module."""


class MBATError(Exception):
    pass


class InvalidDimension(MBATError, ValueError):
    pass


class DimensionMismatch(MBATError, ValueError):
    def __init__(self, a, b):
        super().__init__(f"dimension mismatch: {a} != {b}")
        self.dims = (a, b)


class InvalidArgument(MBATError, ValueError):
    pass


class UndefinedCosine(MBATError, ArithmeticError):
    pass


class UndefinedNormalization(MBATError, ArithmeticError):
    pass


class InvalidRoles(MBATError, ValueError):
    pass


class UnknownSymbol(MBATError, KeyError):
    pass


class ParseError(MBATError, ValueError):
    """Malformed sentence text; ``position`` is a 0-based character offset."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class SolverLimit(MBATError, RuntimeError):
    pass


class CorruptFile(MBATError, ValueError):
    pass
