"""Exception hierarchy shared across the package."""


class IcebedError(Exception):
    """Base class for all package errors."""


class Infeasible(IcebedError):
    """No finite-energy labeling exists (or a solver dead-ended on one)."""

    def __init__(self, message, pixel=None):
        super().__init__(message)
        self.pixel = pixel


class EmptyFeasibleSet(Infeasible):
    """Some node has no label with finite unary cost."""


class InsufficientData(IcebedError):
    pass


class ConfigInfeasible(IcebedError):
    pass


class DimMismatch(IcebedError):
    pass


class ContainerError(IcebedError):
    """Base for on-disk format problems."""


class CorruptManifest(ContainerError):
    pass


class SizeMismatch(ContainerError):
    pass


class ChecksumMismatch(ContainerError):
    pass


class UnsupportedVersion(ContainerError):
    pass


class MalformedFile(ContainerError):
    """A CSV or TOML side file does not follow its schema."""
