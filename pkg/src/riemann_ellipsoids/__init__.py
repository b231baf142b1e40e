"""Nonlinear stability of Riemann ellipsoid equilibria.

Typical use::

    from riemann_ellipsoids import equilibrium, semiaxes_from_xy, birkhoff_order4, classify_normal_form

    e = equilibrium("I", semiaxes_from_xy(0.823, 0.467))
    print(classify_normal_form(birkhoff_order4(e)).label)

Modules: ``geometry`` (shapes and momenta), ``potential`` (gravitational
potential), ``families`` (the five equilibrium families), ``reduced``
(reduced Hamiltonian, Hessian, linear stability, flow), ``polyalg``
(truncated power series), ``normalform`` (Birkhoff normal form to order 4),
``classify`` (convexity verdicts) and ``scan``/``cli`` (grid scans).
"""

from .classify import StabilityTag, classify_normal_form
from .families import EllipsoidType, equilibrium
from .geometry import MomentumPair, SemiAxes, semiaxes_from_xy
from .normalform import birkhoff_order4
from .reduced import linearize

__version__ = "0.1.0"

__all__ = [
    "EllipsoidType", "MomentumPair", "SemiAxes", "StabilityTag", "birkhoff_order4",
    "classify_normal_form", "equilibrium", "linearize", "semiaxes_from_xy",
]
