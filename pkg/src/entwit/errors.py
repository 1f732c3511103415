"""Exception hierarchy.

Everything raised deliberately by the package derives from ``EntwitError`` so
the CLI can map it to the validation exit code.
"""


class EntwitError(ValueError):
    """Base class for validation failures."""


class NotHermitian(EntwitError):
    pass


class DimensionMismatch(EntwitError):
    pass


class InvalidState(EntwitError):
    pass


class InvalidEnsemble(EntwitError):
    pass


class DegenerateDenominator(EntwitError):
    """A local projection annihilates the state, so post-selection is undefined."""


class UnsupportedCatalog(EntwitError):
    pass


class SingleClassDataset(EntwitError):
    pass


class NonFiniteLoss(EntwitError):
    pass


class NoFeasibleEpsilon(EntwitError):
    pass


class SchemaError(EntwitError):
    pass


class VersionMismatch(SchemaError):
    pass


class CountMismatch(SchemaError):
    pass
