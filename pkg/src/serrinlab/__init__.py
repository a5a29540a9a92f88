"""Numerical checks of a partially overdetermined mixed problem in the half ball.

The package builds lens domains in the upper unit half disk, solves
``Δf = 1`` with ``f = 0`` on the inner curve and ``∂_ν f - f = c`` on the unit
circle by quadratic finite elements, and evaluates a weighted P-function
integral identity whose equality case singles out capillary spherical caps.
"""

from .geom_core import CapSpec, cap_from_constants, contact_angle, constants_from_cap, validate

__version__ = "0.1.0"

__all__ = ["CapSpec", "cap_from_constants", "contact_angle", "constants_from_cap", "validate"]
