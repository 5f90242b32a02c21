"""Numerical laboratory for the dissipative atom-cavity phase transition.

Exact Keldysh Green's functions of a lossy cavity coupled to atoms damped by
a sub-ohmic bath, critical-exponent extraction, and the effective fractional
Langevin dynamics of the order parameter.
"""

__version__ = "0.1.0"

from .bath import BathParams, self_energy_closed, self_energy_pv, spectral_density, thermal_factor
from .errors import DivergenceError, NumericsError, QuadratureError, ValidationError
from .exponents import PowerLawFit, ScenarioPrediction, fit_power_law, predicted_exponents
from .greens import (
    InverseGreens2x2,
    LowFreqCoeffs,
    ModelParams,
    Scenario,
    critical_coupling,
    lowfreq_coefficients,
    standard_params,
)
from .langevin import Ensemble, SimConfig, Trajectory, gl_weights, simulate
from .observables import QuadConfig, fourier_oscillatory, photon_number

__all__ = [
    "__version__",
    "BathParams",
    "DivergenceError",
    "Ensemble",
    "InverseGreens2x2",
    "LowFreqCoeffs",
    "ModelParams",
    "NumericsError",
    "PowerLawFit",
    "QuadConfig",
    "QuadratureError",
    "Scenario",
    "ScenarioPrediction",
    "SimConfig",
    "Trajectory",
    "ValidationError",
    "critical_coupling",
    "fit_power_law",
    "fourier_oscillatory",
    "gl_weights",
    "lowfreq_coefficients",
    "photon_number",
    "predicted_exponents",
    "self_energy_closed",
    "self_energy_pv",
    "simulate",
    "spectral_density",
    "standard_params",
    "thermal_factor",
]
