"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain where an operation is defined."""


class ConvexityError(ValueError):
    """Wind too strong: the Randers metric would lose strong convexity."""


class UnsupportedProfileError(ValueError):
    """Profile violates a structural assumption (monotone rising branch, symmetry)."""


class NumericalCornerError(RuntimeError):
    """Integration reached a pole with nonzero Clairaut constant."""


class NoConjugatePointError(RuntimeError):
    pass


class HypothesisError(RuntimeError):
    """Curvature/half-period hypotheses of a cut-locus theorem do not hold."""
