"""symlag: simultaneous symplectic/Lagrangian deformation workbench on flat tori."""

__version__ = "0.1.0"

from .rings import PiRat
from .trig import COS, SIN, TrigScalar
from .forms import (
    TrigForm,
    TrigMultiVector,
    contract,
    exterior_derivative,
    lie_derivative,
    pullback_affine,
    schouten,
    wedge,
)
from .torus import TorusModel

__all__ = [
    "PiRat",
    "TrigScalar",
    "TrigForm",
    "TrigMultiVector",
    "TorusModel",
    "COS",
    "SIN",
    "contract",
    "exterior_derivative",
    "lie_derivative",
    "pullback_affine",
    "schouten",
    "wedge",
]
