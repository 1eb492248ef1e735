"""Cut loci of Randers rotational 2-spheres of revolution."""
from .errors import (ConvexityError, DomainError, HypothesisError, NoConjugatePointError,
                     NumericalCornerError, UnsupportedProfileError)
from .surfaces import (Family, MetricCoefficients, NavigationData, ProfileSpec, eval_profile,
                       finsler_norm, gaussian_curvature, max_wind, randers_coefficients)

__all__ = [
    "ConvexityError", "DomainError", "HypothesisError", "NoConjugatePointError",
    "NumericalCornerError", "UnsupportedProfileError", "Family", "MetricCoefficients",
    "NavigationData", "ProfileSpec", "eval_profile", "finsler_norm", "gaussian_curvature",
    "max_wind", "randers_coefficients",
]
