"""Exception hierarchy; the CLI maps :class:`NumericalError` to exit code 1."""


class NumericalError(ArithmeticError):
    """An integrator, quadrature or compile step failed a numerical check."""


class CompileError(NumericalError):
    """A pulse schedule could not be built for the requested parameters."""
