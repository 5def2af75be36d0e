"""Exception types raised on numerical degeneracies."""


class NumericAbort(ArithmeticError):
    """Base class for aborts caused by a degenerate numerical situation."""


class DegenerateBranchError(NumericAbort):
    """A postselected measurement branch has (numerically) zero probability."""


class DegenerateNormalizationError(NumericAbort):
    """The Haar normalization constant of a loss vanished."""


class DegenerateGroundStateError(NumericAbort):
    """The ground space is (near-)degenerate so no unique ground state exists."""

    def __init__(self, e0: float, e1: float):
        self.e0 = e0
        self.e1 = e1
        super().__init__(f"ground space degenerate: E0={e0!r}, E1={e1!r}, gap={e1 - e0:.3e}")
