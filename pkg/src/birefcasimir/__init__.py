"""Casimir pressure, energy and torque between uniaxial birefringent plates.

The plates are half-spaces separated by an isotropic dispersive gap. Plate 2
has its optical axis along z (in the plate plane); plate 1 is rotated by
``theta`` about the plate normal x. All responses are evaluated on the
imaginary frequency axis at zero temperature.

Modules
-------
materials   response models, plates and scenarios
scattering  reflection operators for one transverse mode
kernel      round-trip invariants and integrands
quadrature  adaptive integration, torque, sweeps
oracle      independent reference calculations
cli         configuration-driven sweeps
"""
from .kernel import NumericalConsistencyError
from .materials import (
    Constant,
    MaterialError,
    Oscillator,
    OscillatorSum,
    Scenario,
    Tabulated,
    UniaxialPlate,
    load_tabulated,
)
from .quadrature import (
    PointResult,
    QuadratureSpec,
    evaluate_point,
    integrate_energy,
    integrate_pressure,
    sweep,
    torque,
)

__version__ = "0.1.0"

__all__ = [
    "Constant",
    "MaterialError",
    "NumericalConsistencyError",
    "Oscillator",
    "OscillatorSum",
    "PointResult",
    "QuadratureSpec",
    "Scenario",
    "Tabulated",
    "UniaxialPlate",
    "evaluate_point",
    "integrate_energy",
    "integrate_pressure",
    "load_tabulated",
    "sweep",
    "torque",
    "__version__",
]
