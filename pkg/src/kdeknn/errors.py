"""Exception types raised by the library."""


class DataError(ValueError):
    """Input data does not satisfy an operation's preconditions."""


class CsvParseError(DataError):
    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class SchemaError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class ImputationError(DataError):
    def __init__(self, feature):
        super().__init__(f"feature {feature!r} has no observed values to impute from")
        self.feature = feature


class StratificationError(DataError):
    pass


class DimensionMismatchError(ValueError):
    def __init__(self, expected, got, what="input"):
        super().__init__(f"{what} has dimension {got}, expected {expected}")
        self.expected = expected
        self.got = got


class KdeFitError(ValueError):
    """Bandwidth matrix is not positive definite."""


class UndefinedAucError(ValueError):
    """AUC needs both classes among the labels."""


class ConfigError(ValueError):
    pass


class GenerationStalled(RuntimeError):
    """The rejection loop hit its draw budget before reaching the targets."""

    def __init__(self, accepted, attempted, targets):
        self.accepted = tuple(accepted)
        self.attempted = tuple(attempted)
        self.targets = tuple(targets)
        rates = ", ".join(
            f"class {c}: {a}/{t} accepted of {n} drawn ({a / n if n else 0.0:.4f})"
            for c, (a, n, t) in enumerate(zip(self.accepted, self.attempted, self.targets))
        )
        super().__init__(
            f"draw budget exhausted before targets were met ({rates}); "
            "the classes may be too entangled for the validator"
        )

    @property
    def acceptance_rates(self):
        return tuple(a / n if n else 0.0 for a, n in zip(self.accepted, self.attempted))
