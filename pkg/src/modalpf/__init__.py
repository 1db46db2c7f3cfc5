"""Participation-factor analysis of polynomial dynamical systems under explicit eigenvector scaling."""

from .model import (
    ModelFormatError,
    PolynomialSystem,
    evaluate_rhs,
    ordering_multiplicity,
    parse_model,
    serialize_model,
)
from .normalform import (
    NormalFormExpansion,
    ResonantComponentError,
    ZInitial,
    build_expansion,
    h_coefficients,
    mode_component,
    reconstruct,
    y_coefficients,
    z_from_state,
    z_initial,
)
from .pf import (
    PFReport,
    build_report,
    linear_pf,
    nonlinear_pf,
    nonlinear_pf_theta,
    normalize_pf,
    theta_residual,
)
from .sim import DivergenceError, SnapshotSet, Trajectory, ensemble, integrate, perturb_state
from .spectrum import (
    DegenerateModeError,
    ModalBasis,
    NotAnEigenvectorError,
    ResonanceSet,
    StrongResonanceError,
    apply_scaling,
    apply_scheme,
    default_resonance_tolerance,
    detect_resonances,
    eigendecompose,
    extract_scaling,
    scaling_for_theta,
)
from .variants import (
    InitialDistribution,
    KoopmanBasis,
    ModeMatchingError,
    RankDeficientSnapshotsError,
    VariantEstimate,
    datadriven_pf,
    fit_koopman,
    match_modes,
    modified_psimpf,
    nonlinear_pmispf,
    pmispf,
    psimpf,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateModeError",
    "DivergenceError",
    "InitialDistribution",
    "KoopmanBasis",
    "ModalBasis",
    "ModeMatchingError",
    "ModelFormatError",
    "NormalFormExpansion",
    "NotAnEigenvectorError",
    "PFReport",
    "PolynomialSystem",
    "RankDeficientSnapshotsError",
    "ResonanceSet",
    "ResonantComponentError",
    "SnapshotSet",
    "StrongResonanceError",
    "Trajectory",
    "VariantEstimate",
    "ZInitial",
    "apply_scaling",
    "apply_scheme",
    "build_expansion",
    "build_report",
    "datadriven_pf",
    "default_resonance_tolerance",
    "detect_resonances",
    "eigendecompose",
    "ensemble",
    "evaluate_rhs",
    "extract_scaling",
    "fit_koopman",
    "h_coefficients",
    "integrate",
    "linear_pf",
    "match_modes",
    "mode_component",
    "modified_psimpf",
    "nonlinear_pf",
    "nonlinear_pf_theta",
    "nonlinear_pmispf",
    "normalize_pf",
    "ordering_multiplicity",
    "parse_model",
    "perturb_state",
    "pmispf",
    "psimpf",
    "reconstruct",
    "scaling_for_theta",
    "serialize_model",
    "theta_residual",
    "y_coefficients",
    "z_from_state",
    "z_initial",
]
