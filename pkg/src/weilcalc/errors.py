"""Exception types shared across the package."""


class StructureError(ValueError):
    """Shape or index mismatch between objects (wrong rank, variable count, ...)."""


class ContractError(ValueError):
    """A documented precondition of an operation is violated."""


class SpecError(ValueError):
    """A spec file failed to parse or validate; carries a located diagnostic."""

    def __init__(self, path, reason):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")
