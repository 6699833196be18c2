class ConfigurationError(ValueError):
    """Raised when timing or scan parameters violate grid-alignment rules."""


class IntegrationDiverged(ArithmeticError):
    """Raised when the state or its derivative stops being finite."""

    def __init__(self, t: float, state: complex, message: str = "integration diverged"):
        super().__init__(f"{message} at t={t:.6g} (state={state!r})")
        self.t = t
        self.state = state


class UndefinedStatisticError(ValueError):
    """Raised when a normalising variance or norm is zero."""


class NarmaDivergence(ArithmeticError):
    def __init__(self, index: int, value: float):
        super().__init__(f"NARMA10 sequence diverged at index {index} (A={value:.6g})")
        self.index = index
        self.value = value
