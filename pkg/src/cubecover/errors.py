"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class CubeCoverError(Exception):
    exit_code = 1


class InputError(CubeCoverError, ValueError):
    exit_code = 2


class ParseError(InputError):
    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class DomainError(InputError):
    """A value is well-formed but lies outside the group the operation needs."""


class InvariantError(CubeCoverError, AssertionError):
    exit_code = 6


class ResourceError(CubeCoverError, MemoryError):
    exit_code = 3


class IncompleteCoverError(CubeCoverError):
    exit_code = 4

    def __init__(self, left):
        super().__init__(f"seeds exhausted with {left} positions left")
        self.left = left


class VerificationError(CubeCoverError):
    exit_code = 5


class StoreIntegrityError(VerificationError):
    pass
