"""Exception types shared across the package."""


class FkLabError(Exception):
    """Base class for all package errors."""


class ModelValidationError(FkLabError, ValueError):
    """A model violates one of its invariants.

    ``path`` locates the first offending entry, e.g. ``"kernels[1][0]"``.
    """

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class CapacityError(FkLabError):
    """A dense object would exceed the configured size cap."""


class UnreachableTransitionError(FkLabError):
    """Backward sampling met a state with zero backward mass."""


class NonFiniteReplicateError(FkLabError):
    """A replicate produced a NaN or infinite value."""

    def __init__(self, replicate_id, value):
        self.replicate_id = replicate_id
        super().__init__(f"replicate {replicate_id} produced non-finite value {value!r}")
