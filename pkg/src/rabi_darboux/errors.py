"""Exception hierarchy shared by the library and the command-line front end."""


class RabiDarbouxError(Exception):
    """Base class for all package errors."""


class ValidationError(RabiDarbouxError, ValueError):
    """Invalid parameters or inputs (CLI exit code 1)."""


class NumericalError(RabiDarbouxError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy result (CLI exit code 2)."""


class IntegrationError(NumericalError):
    """The adaptive integrator gave up, e.g. because the step size underflowed."""

    def __init__(self, message: str, t_fail: float):
        super().__init__(f"{message} (at t={t_fail:.17g})")
        self.t_fail = t_fail


class PoleError(NumericalError):
    """A drive law hit a pole."""

    def __init__(self, t: float):
        super().__init__(f"drive denominator vanishes at t={t:.17g}")
        self.t = t
