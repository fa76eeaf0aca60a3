"""dhlab: a numerical laboratory for pushforward measures of Hamiltonian
torus-type actions, reduced-space volumes and affine measures."""

__version__ = "0.1.0"

from .catalog import CatalogEntry, CatalogError, catalog_get, catalog_names
from .frames import (FrameDecomposition, FrameError, build_frames,
                     density_factorization_residual,
                     density_factorization_residuals, identity_report,
                     orthogonality_report, orthogonality_residuals)
from .lattice import (IntegralAffineData, MomentTestFunction,
                      affine_measure_eval, apply_transition,
                      fiber_integration_check, is_integral_affine)
from .models import (ChartModel, DegenerateFormError, DomainError,
                     EmptyRegionError, ModelValidationError, ProductModel,
                     SampleBatch, SurfaceFactor, SymmetryQuotient,
                     TorusWeightModel, UnsupportedModelError, ValidationReport,
                     evaluate_omega, infinitesimal_action, liouville_density,
                     load_model_config, moment, sample_window, validate_model)
from .polyfit import (ChamberFit, Wall, WallSet, detect_breakpoints_empirical,
                      detect_walls, fit_chamber_polynomials,
                      polynomiality_verdict)
from .polynomials import AffineTransition, PiecewisePoly1D, PolynomialOnChart
from .pushforward import (BinnedDensity, GridSpec, dh_exact_linear,
                          dh_monte_carlo, total_mass_check)
from .reduction import (IotaProfile, ReducedVolumeEstimate, WallCrossingError,
                        WallWarning, generic_iota, orbit_volume,
                        reduced_volume, vol_functions_on_grid)
from .verify import (VerificationReport, is_generically_free, verify_free_case,
                     verify_product_identity)

__all__ = [
    "AffineTransition", "BinnedDensity", "CatalogEntry", "CatalogError",
    "ChamberFit", "ChartModel", "DegenerateFormError", "DomainError",
    "EmptyRegionError", "FrameDecomposition", "FrameError", "GridSpec",
    "IntegralAffineData", "IotaProfile", "ModelValidationError",
    "MomentTestFunction", "PiecewisePoly1D", "PolynomialOnChart",
    "ProductModel", "ReducedVolumeEstimate", "SampleBatch", "SurfaceFactor",
    "SymmetryQuotient", "TorusWeightModel", "UnsupportedModelError",
    "ValidationReport", "VerificationReport", "Wall", "WallCrossingError",
    "WallSet", "WallWarning", "affine_measure_eval", "apply_transition",
    "build_frames", "catalog_get", "catalog_names",
    "density_factorization_residual", "density_factorization_residuals",
    "detect_breakpoints_empirical", "detect_walls", "dh_exact_linear",
    "dh_monte_carlo", "evaluate_omega", "fiber_integration_check",
    "fit_chamber_polynomials", "generic_iota", "identity_report",
    "infinitesimal_action", "is_generically_free", "is_integral_affine",
    "liouville_density", "load_model_config", "moment", "orbit_volume",
    "orthogonality_report", "orthogonality_residuals",
    "polynomiality_verdict", "reduced_volume", "sample_window",
    "total_mass_check", "validate_model", "verify_free_case",
    "verify_product_identity", "vol_functions_on_grid",
]
