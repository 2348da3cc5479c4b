"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a structural invariant.

    Attributes
    ----------
    invariant : str
        Name of the violated invariant, e.g. ``"hermiticity"``.
    residual : float
        Size of the violation.
    """

    def __init__(self, invariant: str, residual: float, detail: str = ""):
        self.invariant = invariant
        self.residual = residual
        msg = f"{invariant} violated (residual {residual:.3e})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class SizeError(ValueError):
    """A dense construction was requested beyond its feasible size."""


class RootError(RuntimeError):
    """A transcendental root could not be bracketed or converged."""
