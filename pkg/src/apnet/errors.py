"""Exception hierarchy shared by the apnet modules."""


class ApnetError(Exception):
    """Base class for every error raised by apnet."""


class GraphError(ApnetError, ValueError):
    pass


class ScenarioError(ApnetError, ValueError):
    """Invalid scenario data; ``path`` locates the offending field."""

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}" if path else reason)


class NoActiveSensingError(ApnetError, ArithmeticError):
    """The total weight 1'K2 1 vanished, so the weighted average is undefined."""


class DecompositionError(ApnetError):
    """No agent keeps a positive total weight over the whole horizon."""


class BoundUndefinedError(ApnetError):
    pass


class ConstancyError(ApnetError):
    """A special-case constancy assumption does not hold for the scenario."""


class DivergenceError(ApnetError, FloatingPointError):
    def __init__(self, t: float):
        self.t = t
        super().__init__(f"non-finite state encountered at t = {t:.6g} s")
