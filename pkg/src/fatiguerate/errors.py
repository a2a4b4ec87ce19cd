"""Exception hierarchy. The CLI maps these onto exit codes."""


class ValidationError(ValueError):
    """Bad input: malformed data, violated invariants, bad configuration."""


class ConfigError(ValidationError):
    pass


class ProtocolError(ValidationError):
    """A subject record does not follow the measurement protocol."""


class MeasurementError(ValidationError):
    pass


class DegeneracyError(ArithmeticError):
    """Well-formed input on which the computation is undefined."""


class DegenerateFrameError(DegeneracyError, ValidationError):
    pass
