"""Exception hierarchy for catbox.

Every error raised by the library derives from `CatboxError`. Concrete errors
also derive from the closest builtin so callers can catch either.
"""


class CatboxError(Exception):
    """Base class for all catbox errors."""


class LabelError(CatboxError, ValueError):
    """Unknown space label, or overlapping labels in a tensor product."""


class DimensionError(CatboxError, ValueError):
    """Array shapes do not match the factor dimensions."""


class NormalizationError(CatboxError, ValueError):
    """A state or coefficient vector is not normalized within tolerance."""


class DensityError(CatboxError, ValueError):
    """A matrix fails the Hermiticity / unit-trace / positivity gates."""


class ObservableError(CatboxError, ValueError):
    """An observable is not Hermitian."""


class UnitarityError(CatboxError, ValueError):
    """A matrix passed as a unitary is not unitary within tolerance."""


class DomainError(CatboxError, ValueError):
    """A physical parameter is outside its domain (negative time, zero rate...)."""


class TruncationError(CatboxError, ValueError):
    """A Fock cutoff is too small for the requested coherent amplitude."""

    def __init__(self, message: str, required_dim: int):
        super().__init__(message)
        self.required_dim = required_dim


class ErasureError(CatboxError, ValueError):
    """The which-path erasure map cannot be applied."""


class ErasureOrderError(CatboxError, ValueError):
    """Jaynes-Cummings evolution requested after the erasure level was populated."""


class ProtocolRuntimeError(CatboxError, RuntimeError):
    """A protocol instruction failed while executing."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.reason = message


class UsageError(CatboxError, ValueError):
    """Invalid run configuration (unknown scenario, bad override...)."""


class ScriptError(CatboxError, ValueError):
    """A protocol script could not be read or has parse diagnostics."""

    def __init__(self, message: str, diagnostics: tuple = ()):
        super().__init__(message)
        self.diagnostics = diagnostics
