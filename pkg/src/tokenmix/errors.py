"""Exception types raised across the package."""


class TokenMixError(Exception):
    """Base class for every error raised by tokenmix."""


class ShapeError(TokenMixError, ValueError):
    pass


class ParameterError(TokenMixError, ValueError):
    pass


class NumericError(TokenMixError, ArithmeticError):
    pass


class LayoutError(TokenMixError, ValueError):
    pass


class ProtocolError(TokenMixError, RuntimeError):
    """A shuffle lost, duplicated or overlapped a block of the tiled tensor."""
