"""Numerical estimates for Bessel-Riesz operators on (generalized) Morrey spaces."""
from .common import NormEstimate
from .errors import (AliasingError, BesselMorreyError, ConfigError, DivergenceError,
                     EmptyIntersectionError, InfeasibleExponentError, InvalidShapeError,
                     SingularityError)
from .kernel import KernelParams, eval_kernel, kernel_lebesgue_norm, riesz_morrey_closed_form
from .spaces import ShapeFunction, morrey_norm, solve_exponents
from .fields import GridSpec, RadialSpec, build_field
from .operator import apply_grid, apply_radial

__version__ = "0.1.0"
