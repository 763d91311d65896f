"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the operation's domain."""


class MalformedNeqrState(DomainError):
    """A state cannot be read back as an NEQR image."""

    def __init__(self, message: str, position: tuple[int, int] | None = None):
        super().__init__(message)
        self.position = position


class MalformedPermutation(DomainError):
    """A decoded permutation register is not a basis state or not a bijection."""


class PgmFormatError(DomainError):
    pass
