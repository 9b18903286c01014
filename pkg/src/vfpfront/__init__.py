"""Numerical laboratory for a two-species Vlasov-Fokker-Planck mixture: phase
coexistence, the front profile, the spectrum of its second variation, kinetic
perturbation dynamics and the hydrodynamic gradient-flow limit."""

__version__ = "0.1.0"

from .errors import BlowUpError, ConvergenceError, NumericalError, ValidationError, VfpError
from .model import KernelKind, ModelParams
from .thermo import coexistence_densities
from .front import FrontProfile, solve_front

__all__ = [
    "BlowUpError", "ConvergenceError", "NumericalError", "ValidationError", "VfpError",
    "KernelKind", "ModelParams", "coexistence_densities", "FrontProfile", "solve_front",
]
