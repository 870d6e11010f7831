"""G-normal expectations, realization measures and Stein-type identities in one dimension."""

from .gcore import (CFLError, DegenerateBandError, DomainError, GParams, GSteinError, Grid,
                    MassLeakageError, Measure, NumericalContractError, ScalarField,
                    UnboundedDataError, g_eval, g_inverse, gaussian_measure,
                    measure_expectation)

__all__ = [
    "CFLError", "DegenerateBandError", "DomainError", "GParams", "GSteinError", "Grid",
    "MassLeakageError", "Measure", "NumericalContractError", "ScalarField",
    "UnboundedDataError", "g_eval", "g_inverse", "gaussian_measure", "measure_expectation",
]
__version__ = "0.1.0"
