class IdsError(Exception):
    """Base class for every error the pipeline raises on purpose."""


class InputError(IdsError, ValueError):
    """Unreadable, malformed or inconsistent input data."""


class ConfigError(IdsError, ValueError):
    """Invalid configuration file, preset or flag value."""


class SchemaMismatchError(InputError):
    """Data width or feature names disagree with a fitted model or statistics."""


class SplitShortfallError(InputError):
    """A split asks for more rows of some labels than the dataset holds."""

    def __init__(self, shortfalls: dict[str, tuple[int, int]]):
        self.shortfalls = shortfalls
        lines = [
            f"{label}: need {needed}, have {available} (short by {needed - available})"
            for label, (needed, available) in shortfalls.items()
        ]
        super().__init__("Insufficient rows for split:\n  " + "\n  ".join(lines))


class StageError(IdsError):
    """A hierarchy training or inference stage failed; `stage` names which one."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")


class NoSplitError(ValueError):
    """The feature offers no admissible threshold on this record subset."""


class DeadRefinementError(ValueError):
    """A refinement leaves the rule covering no positive record."""
