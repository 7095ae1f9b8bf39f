class InvalidArgument(ValueError):
    """A precondition of an operation was violated."""


class ConfigError(ValueError):
    """Malformed or invalid experiment configuration.

    ``field`` names the offending key (dotted path) when known, ``line`` the
    1-based line in the config file for parse errors.
    """

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field is not None:
            prefix += f"{field}: "
        super().__init__(prefix + message)


class CellError(RuntimeError):
    """A Monte Carlo cell failed; carries the cell coordinates."""

    def __init__(self, experiment, m, cause):
        self.experiment = experiment
        self.m = m
        self.cause = cause
        super().__init__(f"cell experiment={experiment!r} m={m} failed: {cause}")
