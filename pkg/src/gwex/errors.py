"""Exception types shared across the package."""


class GwexError(Exception):
    """Base class for all package errors."""


class ZeroKey(GwexError, ValueError):
    pass


class Subcritical(GwexError, ValueError):
    pass


class BadPMF(GwexError, ValueError):
    pass


class BadDensity(GwexError, ValueError):
    pass


class BadAlpha(GwexError, ValueError):
    pass


class UnknownNode(GwexError, KeyError):
    pass


class BudgetExceeded(GwexError, RuntimeError):
    pass


class UnoccupiedSite(GwexError, ValueError):
    pass


class TooLarge(GwexError, ValueError):
    pass


class SingularSector(GwexError, ValueError):
    def __init__(self, message, components=None):
        super().__init__(message)
        self.components = components or []


class TooFewReplicas(GwexError, ValueError):
    pass


class TooFewBlocks(GwexError, ValueError):
    pass


class DegenerateBins(GwexError, ValueError):
    pass


class SchemaError(GwexError, ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
