"""Exception hierarchy shared by every module."""


class NonstochError(Exception):
    """Base class for all library errors."""


class EmptySet(NonstochError, ValueError):
    pass


class DimensionMismatch(NonstochError, ValueError):
    pass


class UnknownConditioningValue(NonstochError, KeyError):
    pass


class OutOfRangeAction(NonstochError, ValueError):
    pass


class OutOfRangeObservation(NonstochError, ValueError):
    pass


class InfeasibleObservation(NonstochError, ValueError):
    pass


class ModelTooLarge(NonstochError, RuntimeError):
    def __init__(self, count, budget):
        super().__init__(f"reachable memory count {count} exceeds budget {budget}")
        self.count = count
        self.budget = budget


class GeneratorIncomplete(NonstochError, KeyError):
    pass


class NegativeInput(NonstochError, ValueError):
    pass


class Disconnected(NonstochError, ValueError):
    pass


class EmptyDataset(NonstochError, ValueError):
    pass


class MissingKey(NonstochError, KeyError):
    def __init__(self, key, detail=""):
        super().__init__(f"window never seen in data: {key!r} {detail}".rstrip())
        self.key = key


class SchemaError(NonstochError, ValueError):
    """Malformed model, config or artifact file."""


class InvalidModel(NonstochError, ValueError):
    """A system description violates totality, closure or sign constraints."""
