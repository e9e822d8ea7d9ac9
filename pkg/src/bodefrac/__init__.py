"""Bode sensitivity integral for rational plants under fractional PID control.

Frequency-domain quadrature, a branch-cut contour decomposition that checks it,
argument-principle stability certificates, and synthetic sensitivities built
from truncated Blaschke products.
"""

from .bodeint import IntegralReport, bode_integral, theoretical_value
from .contour import ContourSpec, build_contour, closure_check, default_contour_spec, gamma_R_residual
from .errors import BodeFracError, ModelError
from .funcmodel import FractionalPID, PoleRecord, Polynomial, RationalFractal, RationalPlant, model_from_dict
from .rootfind import certify_stability, polynomial_roots
from .weier import OuterSpec, SyntheticSensitivity, build_synthetic, generate_sequence, matched_outer_for_theorem2

__version__ = "0.1.0"

__all__ = [
    "BodeFracError",
    "ContourSpec",
    "FractionalPID",
    "IntegralReport",
    "ModelError",
    "OuterSpec",
    "PoleRecord",
    "Polynomial",
    "RationalFractal",
    "RationalPlant",
    "SyntheticSensitivity",
    "bode_integral",
    "build_contour",
    "build_synthetic",
    "certify_stability",
    "closure_check",
    "default_contour_spec",
    "gamma_R_residual",
    "generate_sequence",
    "matched_outer_for_theorem2",
    "model_from_dict",
    "polynomial_roots",
    "theoretical_value",
]
