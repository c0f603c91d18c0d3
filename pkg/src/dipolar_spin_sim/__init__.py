"""Phonon-mediated, tunable Ising interactions in 1D crystals of polar molecules."""

__version__ = "0.1.0"

from .crystal import CrystalSpec, Trap, phonon_modes, solve_equilibrium
from .couplings import CouplingSet, HarmonicCrystal, harmonic_couplings
from .errors import (ConfigError, DimensionMismatch, NegativeEigenvalue, NoCrossing,
                     NonConvergence, OutsideLinearWindow, ResonantDrive, SimulationError,
                     StepFailure, TrackingAmbiguity, TruncationLeak)

__all__ = [
    "CrystalSpec", "Trap", "phonon_modes", "solve_equilibrium",
    "CouplingSet", "HarmonicCrystal", "harmonic_couplings",
    "ConfigError", "DimensionMismatch", "NegativeEigenvalue", "NoCrossing", "NonConvergence",
    "OutsideLinearWindow", "ResonantDrive", "SimulationError", "StepFailure",
    "TrackingAmbiguity", "TruncationLeak",
]
