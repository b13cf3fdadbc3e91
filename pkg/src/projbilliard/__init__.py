"""Numerical laboratory for projective, pseudo-Euclidean and Euclidean
billiards: reflection laws, orbits, conserved tangency spectra, the
symmetry criterion for caustics and the local cone analysis behind it."""

from .caustic import caustic_tangency_check, conservation_report
from .cone import (
    ConeCoefficients,
    adapted_frame,
    admissible_directions,
    classify_coefficients,
    conic_fit,
    cone_coefficients,
    discriminant_delta,
    integrate_cone_curve,
    conic_oracle,
    mf_matrix,
    symmetric_dichotomy,
)
from .errors import (
    BilliardError,
    DegenerateField,
    DegenerateMember,
    DegenerateSecondFundamentalForm,
    Escape,
    EvalError,
    GrazingHit,
    InputError,
    LightLikeNormal,
    NonTransverseField,
    NumericalFailure,
    ParseError,
    SingularPoint,
    SpectrumMismatch,
)
from .expr import Expression, eval_with_gradient, evaluate, parse_expression
from .flow import BilliardTable, Trajectory, orbit, ray_intersect
from .geometry import (
    CentralQuadric,
    OrientedLine,
    PseudoConfocalPencil,
    QuadraticForm,
    cross_ratio,
    pencil_member,
    quadric_eval,
    tangency_discriminant,
    tangency_spectrum,
)
from .reflection import TransverseField, harmonic_lines, nu_from_Q, projective_reflect, pseudo_reflect
from .surface import ImplicitSurface, curvature_data, unit_normal
from .symmetry import is_L_symmetric, symmetry_defect

__version__ = "0.1.0"

__all__ = [
    "BilliardError",
    "BilliardTable",
    "CentralQuadric",
    "ConeCoefficients",
    "DegenerateField",
    "DegenerateMember",
    "DegenerateSecondFundamentalForm",
    "Escape",
    "EvalError",
    "Expression",
    "GrazingHit",
    "ImplicitSurface",
    "InputError",
    "LightLikeNormal",
    "NonTransverseField",
    "NumericalFailure",
    "OrientedLine",
    "ParseError",
    "PseudoConfocalPencil",
    "QuadraticForm",
    "SingularPoint",
    "SpectrumMismatch",
    "Trajectory",
    "TransverseField",
    "adapted_frame",
    "admissible_directions",
    "caustic_tangency_check",
    "classify_coefficients",
    "cone_coefficients",
    "conic_fit",
    "conic_oracle",
    "conservation_report",
    "cross_ratio",
    "curvature_data",
    "discriminant_delta",
    "eval_with_gradient",
    "evaluate",
    "harmonic_lines",
    "integrate_cone_curve",
    "is_L_symmetric",
    "mf_matrix",
    "nu_from_Q",
    "orbit",
    "parse_expression",
    "pencil_member",
    "projective_reflect",
    "pseudo_reflect",
    "quadric_eval",
    "ray_intersect",
    "symmetric_dichotomy",
    "symmetry_defect",
    "tangency_discriminant",
    "tangency_spectrum",
    "unit_normal",
]
