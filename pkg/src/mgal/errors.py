"""Exception types shared across the package."""


class DimensionError(ValueError):
    pass


class ValidationError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class NumericError(ArithmeticError):
    pass
