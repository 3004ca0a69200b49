"""Exception hierarchy shared by all modules."""


class RDBIAError(ValueError):
    pass


class NotStochastic(RDBIAError):
    pass


class NotPrimitive(RDBIAError):
    pass


class BadInitial(RDBIAError):
    pass


class NonzeroDiagonal(RDBIAError):
    pass


class ZeroOffDiagonal(RDBIAError):
    pass


class NegativeEntry(RDBIAError):
    pass


class LengthMismatch(RDBIAError):
    pass


class OutOfRange(RDBIAError):
    pass


class BlockTooLarge(RDBIAError):
    pass


class ShapeMismatch(RDBIAError):
    pass


class AlphabetTooLarge(RDBIAError):
    pass


class DomainError(RDBIAError):
    pass


class BadTau(RDBIAError):
    pass


class InvalidCurve(RDBIAError):
    pass


class ConfigError(RDBIAError):
    pass


class NoConvergence(RDBIAError):
    def __init__(self, message, gap=float("nan")):
        super().__init__(message)
        self.gap = gap
