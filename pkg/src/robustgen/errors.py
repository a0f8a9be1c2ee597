"""Exception hierarchy shared by every module."""


class RobustGenError(Exception):
    pass


class DomainError(RobustGenError, ValueError):
    """An argument lies outside the domain of the operation."""


class BracketError(RobustGenError, ValueError):
    """Root-finding bracket does not enclose a strict sign change."""


class ConvergenceError(RobustGenError, RuntimeError):
    pass


class DivergenceError(RobustGenError, ArithmeticError):
    """An iterative trainer produced a non-finite objective."""


class ConfigError(RobustGenError, ValueError):
    pass


class EmissionError(RobustGenError, OSError):
    pass
